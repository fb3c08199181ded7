#include "datashifts/estimators.hpp"

#include "datashifts/seeding.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace datashifts {

namespace {

Vector uniform_weights(Eigen::Index n) { return Vector::Constant(n, 1.0 / static_cast<double>(n)); }

std::vector<Eigen::Index> shuffled_indices(Eigen::Index n, Rng& rng) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  return idx;
}

std::vector<Eigen::Index> slice(const std::vector<Eigen::Index>& v, Eigen::Index from,
                                Eigen::Index count) {
  return {v.begin() + from, v.begin() + from + count};
}

Matrix rows_of(const Matrix& m, const std::vector<Eigen::Index>& idx) {
  Matrix out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = m.row(idx[k]);
  return out;
}

void require_same_dimension(const LabeledSample& source, const LabeledSample& target) {
  if (source.dimension() != target.dimension()) {
    throw InvalidInput("source covariates have dimension " + std::to_string(source.dimension()) +
                       " but target covariates have " + std::to_string(target.dimension()));
  }
}

}  // namespace

std::string to_string(EstimatorKind kind) {
  return kind == EstimatorKind::PlugIn ? "PlugIn" : "Debiased";
}

EstimatorKind estimator_kind_from_string(const std::string& s) {
  if (s == "PlugIn" || s == "plugin" || s == "plug-in") return EstimatorKind::PlugIn;
  if (s == "Debiased" || s == "debiased") return EstimatorKind::Debiased;
  throw InvalidInput("unknown estimator kind '" + s + "' (expected plugin or debiased)");
}

SplitScheme SplitScheme::draw(Eigen::Index n_source, Eigen::Index n_target, std::uint64_t seed) {
  if (n_source < 4 || n_target < 4) {
    throw InvalidInput("the debiased estimator needs at least 4 points per domain (got " +
                       std::to_string(n_source) + " and " + std::to_string(n_target) + ")");
  }
  SplitScheme s;
  s.seed = seed;
  s.half_source = n_source / 2;
  s.half_target = n_target / 2;
  Rng source_rng(derive_seed(seed, 0));
  Rng target_rng(derive_seed(seed, 1));
  s.permutation_source = shuffled_indices(n_source, source_rng);
  s.permutation_target = shuffled_indices(n_target, target_rng);
  return s;
}

std::vector<Eigen::Index> SplitScheme::source_first() const {
  return slice(permutation_source, 0, half_source);
}
std::vector<Eigen::Index> SplitScheme::source_second() const {
  return slice(permutation_source, half_source, half_source);
}
std::vector<Eigen::Index> SplitScheme::target_first() const {
  return slice(permutation_target, 0, half_target);
}
std::vector<Eigen::Index> SplitScheme::target_second() const {
  return slice(permutation_target, half_target, half_target);
}

std::vector<SplitScheme> draw_splits(Eigen::Index n_source, Eigen::Index n_target,
                                     std::uint64_t seed, int count) {
  if (count < 1) throw InvalidInput("num_splits must be at least 1");
  std::vector<SplitScheme> splits;
  splits.reserve(static_cast<std::size_t>(count));
  // The first split uses the seed itself so a single split is reproducible
  // from the reported seed alone.
  splits.push_back(SplitScheme::draw(n_source, n_target, seed));
  for (int k = 1; k < count; ++k) {
    splits.push_back(SplitScheme::draw(n_source, n_target, derive_seed(seed, 100 + k)));
  }
  return splits;
}

TransportPlan entropic_ot_between(const Matrix& a, const Matrix& b, const SolverConfig& config,
                                  const Metric& metric) {
  return solve_transport(cost_matrix(a, b, metric), uniform_weights(a.rows()),
                         uniform_weights(b.rows()), config);
}

double entropic_ot_value(const Matrix& a, const Matrix& b, const SolverConfig& config,
                         const Metric& metric) {
  const CostMatrix cost = cost_matrix(a, b, metric);
  const Vector mu = uniform_weights(a.rows());
  const Vector nu = uniform_weights(b.rows());
  if (config.beta == 0.0) return solve_transport(cost, mu, nu, config).objective;
  return sinkhorn_value(cost, mu, nu, config).objective;
}

PlugInResult plugin_xshift(const LabeledSample& source, const LabeledSample& target,
                           const SolverConfig& config, const Metric& metric) {
  require_same_dimension(source, target);
  PlugInResult out;
  out.plan = entropic_ot_between(source.covariates(), target.covariates(), config, metric);
  out.value = out.plan.objective;
  return out;
}

DebiasedTerms debiased_xshift_terms(const LabeledSample& source, const LabeledSample& target,
                                    const SolverConfig& config,
                                    std::span<const SplitScheme> splits, const Metric& metric) {
  require_same_dimension(source, target);
  if (splits.empty()) throw InvalidInput("at least one split is required");
  const Matrix& xs = source.covariates();
  const Matrix& xt = target.covariates();

  DebiasedTerms t;
  for (const SplitScheme& s : splits) {
    if (static_cast<Eigen::Index>(s.permutation_source.size()) != source.size() ||
        static_cast<Eigen::Index>(s.permutation_target.size()) != target.size()) {
      throw InvalidInput("split scheme was drawn for different sample sizes");
    }
    const Matrix s1 = rows_of(xs, s.source_first());
    const Matrix s2 = rows_of(xs, s.source_second());
    const Matrix t1 = rows_of(xt, s.target_first());
    const Matrix t2 = rows_of(xt, s.target_second());
    auto sq = [&](const Matrix& a, const Matrix& b) {
      const double w = entropic_ot_value(a, b, config, metric);
      return w * w;
    };
    t.cross_first += sq(s1, t1);
    t.cross_second += sq(s2, t2);
    t.within_source += sq(s1, s2);
    t.within_target += sq(t1, t2);
  }
  const double k = static_cast<double>(splits.size());
  t.cross_first /= k;
  t.cross_second /= k;
  t.within_source /= k;
  t.within_target /= k;
  t.value = std::sqrt(std::abs(0.5 * t.cross_first + 0.5 * t.cross_second -
                               0.5 * t.within_source - 0.5 * t.within_target));
  return t;
}

double debiased_xshift(const LabeledSample& source, const LabeledSample& target,
                       const SolverConfig& config, std::span<const SplitScheme> splits,
                       const Metric& metric) {
  return debiased_xshift_terms(source, target, config, splits, metric).value;
}

double debiased_xshift(const LabeledSample& source, const LabeledSample& target,
                       const SolverConfig& config, std::uint64_t seed, int num_splits,
                       const Metric& metric) {
  const auto splits = draw_splits(source.size(), target.size(), seed, num_splits);
  return debiased_xshift(source, target, config, splits, metric);
}

double concept_shift(const LabeledSample& source, const LabeledSample& target,
                     const TransportPlan& plan, const Metric& label_metric) {
  if (!source.has_labels() || !target.has_labels()) {
    throw InvalidInput("concept shift needs labels on both samples");
  }
  if (source.label_dimension() != target.label_dimension()) {
    throw InvalidInput("source labels have dimension " + std::to_string(source.label_dimension()) +
                       " but target labels have " + std::to_string(target.label_dimension()));
  }
  if (plan.coupling.rows() != source.size() || plan.coupling.cols() != target.size()) {
    throw InvalidInput("transport plan shape does not match the samples");
  }
  const Matrix& ys = *source.labels();
  const Matrix& yt = *target.labels();
  const Eigen::Index k = ys.cols();
  double total = 0.0;
  for (Eigen::Index i = 0; i < plan.coupling.rows(); ++i) {
    for (Eigen::Index j = 0; j < plan.coupling.cols(); ++j) {
      const double g = plan.coupling(i, j);
      if (g == 0.0) continue;
      total += g * label_metric.distance(ys.row(i).data(), yt.row(j).data(), k);
    }
  }
  return total;
}

}  // namespace datashifts
