// Acceptance run: one PASS/FAIL line per criterion. Exit status is nonzero if
// any criterion fails.

#include "datashifts/csv.hpp"
#include "datashifts/synth.hpp"

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

using namespace datashifts;

namespace {

int failures = 0;

void report(bool pass, const std::string& name, const std::string& details) {
  if (!pass) ++failures;
  std::cout << (pass ? "PASS " : "FAIL ") << name << ": " << details << std::endl;
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

std::string list(const std::vector<double>& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + fmt(v[i]);
  return out + "]";
}

std::vector<std::uint64_t> seeds(std::size_t count) {
  std::vector<std::uint64_t> s(count);
  std::iota(s.begin(), s.end(), 0);
  return s;
}

// Adjacent pairs where the sequence goes up.
int inversions(const std::vector<double>& v) {
  int count = 0;
  for (std::size_t i = 1; i < v.size(); ++i) count += v[i] > v[i - 1];
  return count;
}

bool any_failed(const std::vector<EstimateRow>& rows, std::string& why) {
  for (const auto& r : rows) {
    if (!r.failure.empty()) {
      why = r.failure;
      return true;
    }
  }
  return false;
}

std::vector<double> medians(const std::vector<EstimateRow>& rows, const std::vector<Fig1Cell>& cells,
                            EstimatorKind kind) {
  std::vector<double> out;
  for (const auto& c : cells) out.push_back(median_estimate(rows, c, kind));
  return out;
}

std::vector<double> all_estimates(const std::vector<EstimateRow>& rows, EstimatorKind kind) {
  std::vector<double> out;
  for (const auto& r : rows) {
    if (r.estimator == kind) out.push_back(r.estimate);
  }
  return out;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::isnan(x) ? INFINITY : std::abs(x));
  return m;
}

// Both zero-shift sweeps share the (d = 70, n = 1000) cell, so they are run
// together. Each figure point is the median over 20 seeds.
const std::vector<EstimateRow>& zero_shift_rows() {
  static const std::vector<EstimateRow> rows = [] {
    Fig1Grid grid;
    grid.seeds = seeds(20);
    std::vector<Fig1Cell> cells;
    for (Eigen::Index d : {2, 10, 30, 50}) cells.push_back({d, 1000, 0.0});
    for (Eigen::Index n : {250, 500, 1000, 2000, 4000}) cells.push_back({70, n, 0.0});
    return run_estimator_cells(cells, grid);
  }();
  return rows;
}

std::vector<EstimateRow> matching(const std::vector<Fig1Cell>& cells) {
  std::vector<EstimateRow> out;
  for (const auto& r : zero_shift_rows()) {
    for (const auto& c : cells) {
      if (c == Fig1Cell{r.d, r.n, r.offset}) out.push_back(r);
    }
  }
  return out;
}

void dimension_sweep() {
  std::vector<Fig1Cell> cells;
  for (Eigen::Index d : {2, 10, 30, 50, 70}) cells.push_back({d, 1000, 0.0});
  const auto rows = matching(cells);
  std::string why;
  if (any_failed(rows, why)) return report(false, "estimates vs dimension", why);

  const auto plug = medians(rows, cells, EstimatorKind::PlugIn);
  const auto deb = medians(rows, cells, EstimatorKind::Debiased);
  bool increasing = true, above = true;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i > 0 && !(plug[i] > plug[i - 1])) increasing = false;
    if (!(plug[i] > deb[i])) above = false;
  }
  report(increasing && above && max_abs(deb) <= 0.5, "estimates vs dimension",
         "median plug-in " + list(plug) + ", median debiased " + list(deb) +
             " (largest single-seed |debiased| " + fmt(max_abs(all_estimates(rows, EstimatorKind::Debiased))) +
             ")");
}

void sample_size_sweep() {
  std::vector<Fig1Cell> cells;
  for (Eigen::Index n : {250, 500, 1000, 2000, 4000}) cells.push_back({70, n, 0.0});
  const auto rows = matching(cells);
  std::string why;
  if (any_failed(rows, why)) return report(false, "estimates vs sample size", why);

  const auto plug = medians(rows, cells, EstimatorKind::PlugIn);
  const auto deb = medians(rows, cells, EstimatorKind::Debiased);
  const double drop = (plug.front() - plug.back()) / plug.front();
  report(drop < 0.25 && max_abs(deb) <= 0.5, "estimates vs sample size",
         "median plug-in " + list(plug) + " (drop " + fmt(100 * drop, 3) + "%), median debiased " +
             list(deb) + " (largest single-seed |debiased| " +
             fmt(max_abs(all_estimates(rows, EstimatorKind::Debiased))) + ")");
}

void offset_sweep() {
  Fig1Grid grid;
  grid.seeds = seeds(20);
  std::vector<Fig1Cell> cells;
  for (double t : {2.0, 4.0, 6.0, 8.0, 10.0}) cells.push_back({70, 1000, t});
  const auto rows = run_estimator_cells(cells, grid);
  std::string why;
  if (any_failed(rows, why)) return report(false, "estimates vs shift size", why);

  const auto deb = medians(rows, cells, EstimatorKind::Debiased);
  std::vector<double> deb_rel, plug_rel;
  bool within = true;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const double t = cells[i].offset;
    deb_rel.push_back(std::abs(deb[i] - t) / t);
    plug_rel.push_back(median_abs_error(rows, cells[i], EstimatorKind::PlugIn) / t);
    if (!(deb_rel.back() <= 0.15)) within = false;
  }
  const int inv = inversions(plug_rel);
  report(within && inv <= 1, "estimates vs shift size",
         "median debiased " + list(deb) + ", debiased relative error " + list(deb_rel) +
             ", plug-in relative error " + list(plug_rel) + " (" + std::to_string(inv) +
             " inversions)");
}

void solver_oracle() {
  Rng rng(20261016);
  std::uniform_int_distribution<int> size(1, 8);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  SolverConfig config;
  config.beta = 1e-4;
  double worst = 0.0;
  try {
    for (int trial = 0; trial < 50; ++trial) {
      const Eigen::Index n = size(rng), m = size(rng), d = 1 + trial % 4;
      Matrix a(n, d), b(m, d);
      for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = z(rng);
      for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = z(rng);
      Vector mu(n), nu(m);
      for (Eigen::Index i = 0; i < n; ++i) mu(i) = u(rng);
      for (Eigen::Index j = 0; j < m; ++j) nu(j) = u(rng);
      mu /= mu.sum();
      nu /= nu.sum();
      const auto c = cost_matrix(a, b);
      worst = std::max(worst, std::abs(sinkhorn(c, mu, nu, config).transport_cost - exact_w1(c, mu, nu)));
    }
  } catch (const std::exception& e) {
    return report(false, "solver vs exact transport", e.what());
  }
  report(worst <= 1e-3, "solver vs exact transport",
         "max |transport cost - exact W1| over 50 instances " + fmt(worst, 3));
}

void collapse() {
  SolverConfig config;
  config.beta = 1e-4;
  double worst = 0.0;
  try {
    for (std::uint64_t task = 0; task < 20; ++task) {
      Rng rng(derive_seed(task, 100));
      const Eigen::Index d = 1 + static_cast<Eigen::Index>(task % 5);
      const Eigen::Index n = 30 + 10 * static_cast<Eigen::Index>(task);
      std::normal_distribution<double> z(0.0, 1.0);
      const Matrix x = gaussian_points(n, Vector::Zero(d), rng);
      Vector w(d);
      for (Eigen::Index k = 0; k < d; ++k) w(k) = z(rng);
      const double c = z(rng);
      // Source labels sin(w.x); target labels add a Lipschitz drift.
      const auto source_law = ConditionalLaw::deterministic(
          [w](const Eigen::Ref<const Eigen::RowVectorXd>& p) { return Vector::Constant(1, std::sin(p.dot(w))); });
      const auto target_law = ConditionalLaw::deterministic(
          [w, c](const Eigen::Ref<const Eigen::RowVectorXd>& p) {
            return Vector::Constant(1, std::sin(p.dot(w)) + c * std::tanh(p(0)));
          });
      // Same point set on both sides, rows in a different order.
      std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      Matrix xt(n, d);
      for (Eigen::Index i = 0; i < n; ++i) xt.row(i) = x.row(perm[static_cast<std::size_t>(i)]);

      const LabeledSample source(x, source_law.means(x), Domain::Source);
      const LabeledSample target(xt, target_law.means(xt), Domain::Target);
      const auto plan = plugin_xshift(source, target, config).plan;
      const double estimate = concept_shift(source, target, plan);
      const double oracle =
          total_point_shift_oracle(source_law, target_law, x, Vector::Constant(n, 1.0 / static_cast<double>(n)));
      worst = std::max(worst, std::abs(estimate - oracle));
    }
  } catch (const std::exception& e) {
    return report(false, "concept shift on shared covariates", e.what());
  }
  report(worst <= 1e-3, "concept shift on shared covariates",
         "max |estimate - oracle| over 20 tasks " + fmt(worst, 3));
}

void bound_validity() {
  const auto trials = run_bound_validation(BoundTaskSpec{}, seeds(100));
  int holds = 0, within_slack = 0;
  double worst = INFINITY;
  for (const auto& t : trials) {
    if (!t.failure.empty()) return report(false, "bound validity", t.failure);
    holds += t.target_error <= t.bound;
    within_slack += t.bound - t.target_error >= -0.02 * t.bound;
    worst = std::min(worst, (t.bound - t.target_error) / t.bound);
  }
  report(holds >= 95 && within_slack == 100, "bound validity",
         std::to_string(holds) + "/100 hold, " + std::to_string(within_slack) +
             "/100 within 2% slack, smallest (B - target error) / B " + fmt(worst, 3));
}

void bias_bracket() {
  YShiftConcentration spec;
  spec.sizes = {4000};
  spec.seeds = seeds(20);
  const auto rows = run_concentration(spec);
  int inside = 0;
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& r : rows) {
    if (!r.failure.empty()) return report(false, "concept shift bias bracket", r.failure);
    inside += r.deviation >= -0.05 && r.deviation <= r.bias_bound + 0.05;
    lo = std::min(lo, r.deviation);
    hi = std::max(hi, r.deviation);
  }
  report(inside * 100 >= 95 * static_cast<int>(rows.size()), "concept shift bias bracket",
         std::to_string(inside) + "/" + std::to_string(rows.size()) + " inside [-0.05, " +
             fmt(rows.front().bias_bound + 0.05) + "], deviations in [" + fmt(lo) + ", " + fmt(hi) +
             "], oracle " + fmt(rows.front().oracle));
}

void concentration() {
  XShiftConcentration spec;
  spec.seeds = seeds(20);
  const auto rows = run_concentration(spec);
  for (const auto& r : rows) {
    if (!r.failure.empty()) return report(false, "debiased concentration", r.failure);
  }
  std::vector<double> dev;
  for (const auto& s : summarize_concentration(rows)) dev.push_back(s.median_abs_deviation);
  const int inv = inversions(dev);
  report(inv <= 1, "debiased concentration",
         "median |debiased - 6| for n = 250..4000 " + list(dev) + " (" + std::to_string(inv) +
             " inversions)");
}

std::string run_cli(const std::string& args) {
  std::string out;
  FILE* pipe = ::popen((std::string(DATASHIFTS_CLI) + " " + args + " 2>/dev/null").c_str(), "r");
  if (!pipe) return out;
  char buf[4096];
  std::size_t got = 0;
  while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, got);
  const int status = ::pclose(pipe);
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) out = "exit status " + std::to_string(status);
  return out;
}

void determinism() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "datashifts_acceptance";
  fs::create_directories(dir);
  const auto [s, t] = gen_gaussian_pair({5, 1.0, 300, 42});
  for (const auto& [name, sample] : {std::pair{"s.csv", &s}, {"t.csv", &t}}) {
    std::ofstream f(dir / name);
    f << "x1,x2,x3,x4,y\n";
    const Matrix& x = sample->covariates();
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      for (Eigen::Index k = 0; k < 4; ++k) f << format_double(x(i, k)) << ',';
      f << format_double(std::sin(x(i, 4))) << '\n';
    }
  }
  const std::string pair = "--source " + (dir / "s.csv").string() + " --target " + (dir / "t.csv").string();
  const std::vector<std::string> commands{
      "xshift " + pair + " --seed 9",
      "bound " + pair + " --label-cols y --num-splits 2 --lipschitz '{\"l_h\": 1.5}' --source-error 0.2",
      "fig1 --dims 2,5 --sizes 50,100 --offsets 0,2 --anchor-dim 5 --anchor-n 50 --seeds 3"};
  bool same = true;
  std::string detail;
  for (const auto& cmd : commands) {
    const std::string a = run_cli(cmd), b = run_cli(cmd);
    const bool ok = a == b && !a.empty() && a.rfind("exit status", 0) != 0;
    same = same && ok;
    detail += (detail.empty() ? "" : ", ") + cmd.substr(0, cmd.find(' ')) + (ok ? " identical" : " differs");
  }
  fs::remove_all(dir);
  report(same, "repeated CLI runs", detail + " (" + std::to_string(commands.size()) + " commands, 2 runs each)");
}

}  // namespace

int main() {
  const auto start = std::chrono::steady_clock::now();
  const std::pair<const char*, void (*)()> criteria[] = {
      {"estimates vs dimension", dimension_sweep},
      {"estimates vs sample size", sample_size_sweep},
      {"estimates vs shift size", offset_sweep},
      {"solver vs exact transport", solver_oracle},
      {"concept shift on shared covariates", collapse},
      {"bound validity", bound_validity},
      {"concept shift bias bracket", bias_bracket},
      {"debiased concentration", concentration},
      {"repeated CLI runs", determinism},
  };
  for (const auto& [name, check] : criteria) {
    try {
      check();
    } catch (const std::exception& e) {
      report(false, name, std::string("unexpected error: ") + e.what());
    }
  }
  const double minutes =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / 60.0;
  std::cout << failures << " of " << std::size(criteria) << " criteria failed (" << fmt(minutes, 3)
            << " min)" << std::endl;
  return failures == 0 ? 0 : 1;
}
