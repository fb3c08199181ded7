#include "datashifts/synth.hpp"

#include "datashifts/csv.hpp"
#include "datashifts/seeding.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <thread>

namespace datashifts {

namespace {

// Stream ids under a trial seed. Fixed so tables are reproducible.
constexpr std::uint64_t kSourcePoints = 1;
constexpr std::uint64_t kTargetPoints = 2;
constexpr std::uint64_t kSplits = 3;
constexpr std::uint64_t kSourceLabels = 4;
constexpr std::uint64_t kTargetLabels = 5;
constexpr std::uint64_t kTask = 6;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::uint64_t> default_seeds(const std::vector<std::uint64_t>& seeds) {
  if (!seeds.empty()) return seeds;
  std::vector<std::uint64_t> out(20);
  for (std::uint64_t s = 0; s < out.size(); ++s) out[s] = s;
  return out;
}

SolverConfig solver_config(double beta) {
  SolverConfig config;
  config.beta = beta;
  config.validate();
  return config;
}

std::string describe(const std::exception& e) {
  std::string what = e.what();
  return what.empty() ? "unknown failure" : what;
}

Vector uniform_weights(Eigen::Index n) {
  return Vector::Constant(n, 1.0 / static_cast<double>(n));
}

std::string csv_number(double v) { return std::isnan(v) ? "nan" : format_double(v); }

}  // namespace

void GaussianShiftSpec::validate() const {
  if (dimension < 1) throw InvalidInput("dimension must be at least 1");
  if (sample_size < 1) throw InvalidInput("sample size must be at least 1");
  if (!std::isfinite(mean_offset_norm) || mean_offset_norm < 0.0) {
    throw InvalidInput("mean offset norm must be finite and nonnegative");
  }
}

Matrix gaussian_points(Eigen::Index n, const Vector& mean, Rng& rng) {
  std::normal_distribution<double> draw(0.0, 1.0);
  Matrix x(n, mean.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < mean.size(); ++k) x(i, k) = mean(k) + draw(rng);
  }
  return x;
}

std::pair<LabeledSample, LabeledSample> gen_gaussian_pair(const GaussianShiftSpec& spec) {
  spec.validate();
  Vector mean = Vector::Zero(spec.dimension);
  Rng source_rng(derive_seed(spec.seed, kSourcePoints));
  Matrix xs = gaussian_points(spec.sample_size, mean, source_rng);
  mean(0) = spec.mean_offset_norm;
  Rng target_rng(derive_seed(spec.seed, kTargetPoints));
  Matrix xt = gaussian_points(spec.sample_size, mean, target_rng);
  return {LabeledSample(std::move(xs), std::nullopt, Domain::Source),
          LabeledSample(std::move(xt), std::nullopt, Domain::Target)};
}

void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& task) {
  if (count == 0) return;
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));

  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    while (!stop.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        task(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        stop = true;
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (first_error) std::rethrow_exception(first_error);
}

double median(std::vector<double> values) {
  std::erase_if(values, [](double v) { return std::isnan(v); });
  if (values.empty()) return kNaN;
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

// ---------------------------------------------------------------------------

std::vector<std::uint64_t> Fig1Grid::seed_list() const { return default_seeds(seeds); }

std::vector<Fig1Cell> fig1_cells(const Fig1Grid& grid) {
  std::vector<Fig1Cell> cells;
  auto add = [&](Fig1Cell c) {
    if (std::find(cells.begin(), cells.end(), c) == cells.end()) cells.push_back(c);
  };
  for (auto n : grid.sizes) add({grid.anchor_dimension, n, 0.0});
  for (auto d : grid.dims) add({d, grid.anchor_size, 0.0});
  for (auto t : grid.offsets) add({grid.anchor_dimension, grid.anchor_size, t});
  return cells;
}

std::vector<EstimateRow> run_estimator_cells(const std::vector<Fig1Cell>& cells,
                                             const Fig1Grid& grid, bool plugin, bool debiased) {
  if (!plugin && !debiased) throw InvalidInput("no estimator selected");
  if (grid.num_splits < 1) throw InvalidInput("num_splits must be at least 1");
  const SolverConfig config = solver_config(grid.beta);
  const auto seeds = grid.seed_list();
  std::vector<EstimatorKind> kinds;
  if (plugin) kinds.push_back(EstimatorKind::PlugIn);
  if (debiased) kinds.push_back(EstimatorKind::Debiased);

  const std::size_t per_cell = seeds.size() * kinds.size();
  std::vector<EstimateRow> rows(cells.size() * per_cell);
  // Work items are (cell, seed, estimator), largest cells first so a long
  // solve does not end up last on its own.
  std::vector<std::size_t> order(rows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ca = cells[a / per_cell];
    const auto& cb = cells[b / per_cell];
    return ca.n * ca.d > cb.n * cb.d;
  });

  parallel_for(order.size(), grid.threads, [&](std::size_t k) {
    const std::size_t slot = order[k];
    const Fig1Cell& cell = cells[slot / per_cell];
    const std::uint64_t seed = seeds[(slot % per_cell) / kinds.size()];
    const EstimatorKind kind = kinds[slot % kinds.size()];

    EstimateRow& row = rows[slot];
    row.d = cell.d;
    row.n = cell.n;
    row.offset = cell.offset;
    row.seed = seed;
    row.estimator = kind;
    row.truth = cell.offset;
    try {
      const auto [source, target] = gen_gaussian_pair({cell.d, cell.offset, cell.n, seed});
      row.estimate = kind == EstimatorKind::PlugIn
                         ? entropic_ot_value(source.covariates(), target.covariates(), config)
                         : debiased_xshift(source, target, config, derive_seed(seed, kSplits),
                                           grid.num_splits);
    } catch (const std::exception& e) {
      row.estimate = kNaN;
      row.failure = describe(e);
    }
    row.abs_error = std::abs(row.estimate - row.truth);
  });
  return rows;
}

std::vector<EstimateRow> run_fig1(const Fig1Grid& grid) {
  return run_estimator_cells(fig1_cells(grid), grid);
}

void write_estimate_csv(std::ostream& out, const std::vector<EstimateRow>& rows) {
  out << "d,n,offset,seed,estimator,estimate,truth,abs_error\n";
  for (const auto& r : rows) {
    out << r.d << ',' << r.n << ',' << format_double(r.offset) << ',' << r.seed << ','
        << (r.estimator == EstimatorKind::PlugIn ? "plugin" : "debiased") << ','
        << csv_number(r.estimate) << ',' << format_double(r.truth) << ','
        << csv_number(r.abs_error) << '\n';
  }
}

namespace {

std::vector<double> collect(const std::vector<EstimateRow>& rows, const Fig1Cell& cell,
                            EstimatorKind estimator, double EstimateRow::*field) {
  std::vector<double> out;
  for (const auto& r : rows) {
    if (r.d == cell.d && r.n == cell.n && r.offset == cell.offset && r.estimator == estimator) {
      out.push_back(r.*field);
    }
  }
  return out;
}

}  // namespace

double median_estimate(const std::vector<EstimateRow>& rows, const Fig1Cell& cell,
                       EstimatorKind estimator) {
  return median(collect(rows, cell, estimator, &EstimateRow::estimate));
}

double median_abs_error(const std::vector<EstimateRow>& rows, const Fig1Cell& cell,
                        EstimatorKind estimator) {
  return median(collect(rows, cell, estimator, &EstimateRow::abs_error));
}

// ---------------------------------------------------------------------------
// SVG

namespace {

struct Series {
  std::string label;
  std::string color;
  std::vector<std::pair<double, double>> points;
};

std::string num(double v) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::fixed, 2);
  return std::string(buf.data(), ptr);
}

void svg_panel(std::ostream& out, double left, const std::string& title, const std::string& xlabel,
               bool log_x, const std::vector<Series>& series) {
  constexpr double width = 300, height = 240, top = 40, pad = 40;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y1 = 0.0;
  auto tx = [&](double x) { return log_x ? std::log2(x) : x; };
  for (const auto& s : series) {
    for (auto [x, y] : s.points) {
      if (std::isnan(y)) continue;
      x0 = std::min(x0, tx(x));
      x1 = std::max(x1, tx(x));
      y1 = std::max(y1, y);
    }
  }
  if (!std::isfinite(x0)) return;
  if (x1 == x0) x1 = x0 + 1.0;
  if (y1 <= 0.0) y1 = 1.0;
  y1 *= 1.1;
  auto px = [&](double x) { return left + pad + (tx(x) - x0) / (x1 - x0) * (width - 2 * pad); };
  auto py = [&](double y) { return top + height - pad - y / y1 * (height - 2 * pad); };

  out << "<g>\n<text x='" << num(left + width / 2) << "' y='" << num(top - 10)
      << "' text-anchor='middle'>" << title << "</text>\n";
  out << "<line x1='" << num(left + pad) << "' y1='" << num(py(0)) << "' x2='" << num(left + width - pad)
      << "' y2='" << num(py(0)) << "' stroke='black'/>\n";
  out << "<line x1='" << num(left + pad) << "' y1='" << num(py(0)) << "' x2='" << num(left + pad) << "' y2='"
      << num(py(y1)) << "' stroke='black'/>\n";
  out << "<text x='" << num(left + width / 2) << "' y='" << num(top + height - 8)
      << "' text-anchor='middle'>" << xlabel << "</text>\n";
  out << "<text x='" << num(left + pad - 4) << "' y='" << num(py(y1) + 4) << "' text-anchor='end'>"
      << num(y1) << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    out << "<polyline fill='none' stroke='" << s.color << "' points='";
    for (auto [x, y] : s.points) {
      if (!std::isnan(y)) out << num(px(x)) << ',' << num(py(y)) << ' ';
    }
    out << "'/>\n";
    for (auto [x, y] : s.points) {
      if (std::isnan(y)) continue;
      out << "<circle cx='" << num(px(x)) << "' cy='" << num(py(y)) << "' r='2.5' fill='" << s.color
          << "'/>\n";
      if (k > 0) continue;
      out << "<text x='" << num(px(x)) << "' y='" << num(top + height - pad + 14)
          << "' text-anchor='middle' font-size='9'>" << format_double(x) << "</text>\n";
    }
    out << "<text x='" << num(left + pad + 6) << "' y='" << num(top + 12 + 12 * static_cast<double>(k))
        << "' font-size='10' fill='" << s.color << "'>" << s.label << "</text>\n";
  }
  out << "</g>\n";
}

}  // namespace

void write_fig1_svg(std::ostream& out, const std::vector<EstimateRow>& rows,
                    const Fig1Grid& grid) {
  auto sweep = [&](auto&& cells_of, auto&& x_of) {
    Series plug{"plug-in", "#c0392b", {}}, deb{"debiased", "#2471a3", {}}, truth{"truth", "#555", {}};
    for (const Fig1Cell& c : cells_of()) {
      const double x = x_of(c);
      plug.points.emplace_back(x, median_estimate(rows, c, EstimatorKind::PlugIn));
      deb.points.emplace_back(x, median_estimate(rows, c, EstimatorKind::Debiased));
      truth.points.emplace_back(x, c.offset);
    }
    return std::vector<Series>{plug, deb, truth};
  };
  auto by_n = [&] {
    std::vector<Fig1Cell> c;
    for (auto n : grid.sizes) c.push_back({grid.anchor_dimension, n, 0.0});
    return c;
  };
  auto by_d = [&] {
    std::vector<Fig1Cell> c;
    for (auto d : grid.dims) c.push_back({d, grid.anchor_size, 0.0});
    return c;
  };
  auto by_t = [&] {
    std::vector<Fig1Cell> c;
    for (auto t : grid.offsets) c.push_back({grid.anchor_dimension, grid.anchor_size, t});
    return c;
  };

  out << "<svg xmlns='http://www.w3.org/2000/svg' width='900' height='290' "
         "font-family='sans-serif' font-size='12'>\n";
  svg_panel(out, 0, "(a) d = " + std::to_string(grid.anchor_dimension) + ", no shift", "n", true,
            sweep(by_n, [](const Fig1Cell& c) { return static_cast<double>(c.n); }));
  svg_panel(out, 300, "(b) n = " + std::to_string(grid.anchor_size) + ", no shift", "d", false,
            sweep(by_d, [](const Fig1Cell& c) { return static_cast<double>(c.d); }));
  svg_panel(out, 600, "(c) shifted mean", "||T||", false,
            sweep(by_t, [](const Fig1Cell& c) { return c.offset; }));
  out << "</svg>\n";
}

// ---------------------------------------------------------------------------
// Concentration

std::vector<ConcentrationRow> run_concentration(const XShiftConcentration& spec) {
  Fig1Grid grid;
  grid.seeds = default_seeds(spec.seeds);
  grid.beta = spec.beta;
  grid.num_splits = spec.num_splits;
  grid.threads = spec.threads;
  std::vector<Fig1Cell> cells;
  for (auto n : spec.sizes) cells.push_back({spec.dimension, n, spec.offset});
  const auto estimates = run_estimator_cells(cells, grid, false, true);

  std::vector<ConcentrationRow> rows;
  rows.reserve(estimates.size());
  for (const auto& e : estimates) {
    rows.push_back({e.n, e.seed, e.estimate, e.truth, e.estimate - e.truth, 0.0, e.failure});
  }
  return rows;
}

ConditionalLaw YShiftConcentration::source_law() const {
  const double a = slope;
  auto m = [a](const Eigen::Ref<const Eigen::RowVectorXd>& x) {
    return Vector::Constant(1, a * std::sin(x(0)));
  };
  return noise_source > 0.0 ? ConditionalLaw::gaussian(m, noise_source)
                            : ConditionalLaw::deterministic(m);
}

ConditionalLaw YShiftConcentration::target_law() const {
  const double a = slope, c = label_shift;
  auto m = [a, c](const Eigen::Ref<const Eigen::RowVectorXd>& x) {
    return Vector::Constant(1, a * std::sin(x(0)) + c);
  };
  return noise_target > 0.0 ? ConditionalLaw::gaussian(m, noise_target)
                            : ConditionalLaw::deterministic(m);
}

std::vector<ConcentrationRow> run_concentration(const YShiftConcentration& spec) {
  if (spec.dimension < 1) throw InvalidInput("dimension must be at least 1");
  const SolverConfig config = solver_config(spec.beta);
  const ConditionalLaw source_law = spec.source_law();
  const ConditionalLaw target_law = spec.target_law();
  source_law.validate();
  target_law.validate();
  const auto seeds = default_seeds(spec.seeds);

  std::vector<ConcentrationRow> rows(spec.sizes.size() * seeds.size());
  std::vector<std::size_t> order(rows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return spec.sizes[a / seeds.size()] > spec.sizes[b / seeds.size()];
  });

  parallel_for(order.size(), spec.threads, [&](std::size_t k) {
    const std::size_t slot = order[k];
    ConcentrationRow& row = rows[slot];
    row.n = spec.sizes[slot / seeds.size()];
    row.seed = seeds[slot % seeds.size()];
    try {
      auto [xs, xt] = gen_gaussian_pair({spec.dimension, 0.0, row.n, row.seed});
      Rng source_rng(derive_seed(row.seed, kSourceLabels));
      Rng target_rng(derive_seed(row.seed, kTargetLabels));
      Matrix ys = source_law.sample(xs.covariates(), source_rng);
      Matrix yt = target_law.sample(xt.covariates(), target_rng);
      const LabeledSample source(xs.covariates(), std::move(ys), Domain::Source);
      const LabeledSample target(xt.covariates(), std::move(yt), Domain::Target);

      const auto plugin = plugin_xshift(source, target, config);
      row.estimate = concept_shift(source, target, plugin.plan);
      const Vector w = uniform_weights(row.n);
      row.oracle = total_point_shift_oracle(source_law, target_law, source.covariates(), w);
      row.deviation = row.estimate - row.oracle;
      row.bias_bound =
          std::sqrt(irreducible_error_oracle(source_law, source.covariates(), w)) +
          std::sqrt(irreducible_error_oracle(target_law, target.covariates(), w));
    } catch (const std::exception& e) {
      row.estimate = row.oracle = row.deviation = kNaN;
      row.failure = describe(e);
    }
  });
  return rows;
}

std::vector<ConcentrationSummary> summarize_concentration(const std::vector<ConcentrationRow>& rows) {
  std::map<Eigen::Index, std::pair<std::vector<double>, std::size_t>> by_n;
  for (const auto& r : rows) {
    auto& [devs, failures] = by_n[r.n];
    devs.push_back(r.deviation);
    if (!r.failure.empty()) ++failures;
  }
  std::vector<ConcentrationSummary> out;
  for (const auto& [n, entry] : by_n) {
    std::vector<double> abs_devs(entry.first.size());
    std::transform(entry.first.begin(), entry.first.end(), abs_devs.begin(),
                   [](double v) { return std::abs(v); });
    out.push_back({n, median(abs_devs), median(entry.first), entry.first.size(), entry.second});
  }
  return out;
}

void write_concentration_csv(std::ostream& out, const std::vector<ConcentrationRow>& rows) {
  out << "n,seed,estimate,oracle,deviation,bias_bound\n";
  for (const auto& r : rows) {
    out << r.n << ',' << r.seed << ',' << csv_number(r.estimate) << ',' << csv_number(r.oracle)
        << ',' << csv_number(r.deviation) << ',' << format_double(r.bias_bound) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Bound validation

Mlp Mlp::random(const std::vector<Eigen::Index>& widths, double scale, Rng& rng) {
  if (widths.size() < 2) throw InvalidInput("an MLP needs at least an input and an output width");
  std::normal_distribution<double> draw(0.0, 1.0);
  Mlp net;
  for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
    const Eigen::Index in = widths[k], out = widths[k + 1];
    if (in < 1 || out < 1) throw InvalidInput("MLP widths must be positive");
    const double sd = scale / std::sqrt(static_cast<double>(in));
    Matrix w(out, in);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = sd * draw(rng);
    Vector b(out);
    for (Eigen::Index i = 0; i < out; ++i) b(i) = 0.5 * draw(rng);
    net.weights.push_back(std::move(w));
    net.biases.push_back(std::move(b));
  }
  return net;
}

Matrix Mlp::evaluate(const Matrix& x) const {
  Eigen::MatrixXd h = x;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    h = (h * weights[k].transpose()).rowwise() + biases[k].transpose();
    if (k + 1 < weights.size()) h = h.array().tanh().matrix();
  }
  return h;
}

double Mlp::lipschitz_upper_bound() const {
  std::vector<double> norms;
  for (const auto& w : weights) norms.push_back(spectral_norm(w));
  return layered_hypothesis_lipschitz(norms, std::vector<double>(norms.size() - 1, 1.0));
}

void BoundTaskSpec::validate() const {
  if (dimension < 1) throw InvalidInput("dimension must be at least 1");
  if (sample_size < 4) throw InvalidInput("sample size must be at least 4");
  if (hidden_units < 1) throw InvalidInput("hidden units must be at least 1");
  for (double v : {max_offset, max_label_shift, label_noise, perturbation}) {
    if (!std::isfinite(v) || v < 0.0) throw InvalidInput("task ranges must be finite and nonnegative");
  }
  if (num_splits < 1) throw InvalidInput("num_splits must be at least 1");
  loss.validate();
  if (loss.kind != LossSpec::Kind::AbsoluteError) {
    // The other catalog losses need labels inside a bounded range, which
    // the unbounded teacher does not guarantee.
    throw InvalidInput("bound validation tasks use the absolute-error loss");
  }
}

std::vector<BoundTrial> run_bound_validation(const BoundTaskSpec& task,
                                             const std::vector<std::uint64_t>& seeds) {
  task.validate();
  const SolverConfig config = solver_config(task.beta);
  const auto [l_label, l_output] = loss_lipschitz(task.loss);
  std::vector<BoundTrial> trials(seeds.size());

  parallel_for(seeds.size(), task.threads, [&](std::size_t k) {
    BoundTrial& t = trials[k];
    t.seed = seeds[k];
    try {
      Rng rng(derive_seed(t.seed, kTask));
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      std::normal_distribution<double> normal(0.0, 1.0);

      const std::vector<Eigen::Index> widths{task.dimension, task.hidden_units, 1};
      const Mlp teacher = Mlp::random(widths, 1.0, rng);
      Mlp hypothesis = teacher;
      for (std::size_t l = 0; l < hypothesis.weights.size(); ++l) {
        auto& w = hypothesis.weights[l];
        const double sd = task.perturbation / std::sqrt(static_cast<double>(w.cols()));
        for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] += sd * normal(rng);
        for (Eigen::Index i = 0; i < hypothesis.biases[l].size(); ++i) {
          hypothesis.biases[l](i) += task.perturbation * normal(rng);
        }
      }
      t.offset = task.max_offset * unit(rng);
      t.label_shift = task.max_label_shift * (2.0 * unit(rng) - 1.0);
      Vector direction(task.dimension);
      for (Eigen::Index i = 0; i < direction.size(); ++i) direction(i) = normal(rng);
      direction /= direction.norm();

      Rng source_rng(derive_seed(t.seed, kSourcePoints));
      Rng target_rng(derive_seed(t.seed, kTargetPoints));
      Matrix xs = gaussian_points(task.sample_size, Vector::Zero(task.dimension), source_rng);
      Matrix xt = gaussian_points(task.sample_size, t.offset * direction, target_rng);
      Matrix ys = teacher.evaluate(xs);
      Matrix yt = teacher.evaluate(xt).array() + t.label_shift;
      if (task.label_noise > 0.0) {
        Rng noise(derive_seed(t.seed, kSourceLabels));
        std::normal_distribution<double> eps(0.0, task.label_noise);
        for (Eigen::Index i = 0; i < ys.size(); ++i) ys.data()[i] += eps(noise);
        for (Eigen::Index i = 0; i < yt.size(); ++i) yt.data()[i] += eps(noise);
      }
      const Matrix hs = hypothesis.evaluate(xs);
      const Matrix ht = hypothesis.evaluate(xt);
      const LabeledSample source(std::move(xs), std::move(ys), Domain::Source);
      const LabeledSample target(std::move(xt), std::move(yt), Domain::Target);

      t.l_h = hypothesis.lipschitz_upper_bound();
      t.source_error = empirical_error(source, hs, task.loss);
      t.target_error = empirical_error(target, ht, task.loss);

      PipelineOptions options;
      options.kind = task.estimator;
      options.seed = derive_seed(t.seed, kSplits);
      options.num_splits = task.num_splits;
      const auto result = datashifts(source, target, config, options,
                                     LipschitzSpec{t.l_h, l_label, l_output}, t.source_error);
      t.s_cov = result.shifts.s_cov;
      t.s_cpt = result.shifts.s_cpt.value_or(kNaN);
      t.bound = result.bound->bound;
      t.holds = t.target_error <= t.bound;
    } catch (const std::exception& e) {
      t.bound = kNaN;
      t.holds = false;
      t.failure = describe(e);
    }
  });
  return trials;
}

double holds_rate(const std::vector<BoundTrial>& trials) {
  if (trials.empty()) return kNaN;
  const auto held = std::count_if(trials.begin(), trials.end(), [](const auto& t) { return t.holds; });
  return static_cast<double>(held) / static_cast<double>(trials.size());
}

void write_bound_csv(std::ostream& out, const std::vector<BoundTrial>& trials) {
  out << "seed,offset,label_shift,l_h,source_error,target_error,s_cov,s_cpt,bound,holds\n";
  for (const auto& t : trials) {
    out << t.seed << ',' << format_double(t.offset) << ',' << format_double(t.label_shift) << ','
        << format_double(t.l_h) << ',' << format_double(t.source_error) << ','
        << format_double(t.target_error) << ',' << csv_number(t.s_cov) << ','
        << csv_number(t.s_cpt) << ',' << csv_number(t.bound) << ',' << (t.holds ? 1 : 0) << '\n';
  }
  out << "# holds_rate," << csv_number(holds_rate(trials)) << '\n';
}

}  // namespace datashifts
