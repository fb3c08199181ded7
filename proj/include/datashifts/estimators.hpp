#pragma once

#include "datashifts/core.hpp"
#include "datashifts/sinkhorn.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace datashifts {

enum class EstimatorKind { PlugIn, Debiased };

std::string to_string(EstimatorKind kind);
EstimatorKind estimator_kind_from_string(const std::string& s);

/// Estimated covariate shift and (when labels are available) concept shift.
struct ShiftEstimates {
  double s_cov = 0.0;
  std::optional<double> s_cpt;
  double beta = 0.0;
  Eigen::Index n_source = 0;
  Eigen::Index n_target = 0;
  EstimatorKind estimator_kind = EstimatorKind::Debiased;
  std::uint64_t split_seed = 0;
  int num_splits = 1;

  bool operator==(const ShiftEstimates&) const = default;
};

/// One random halving of each domain. Each half holds floor(n / 2) points;
/// with odd n the last permuted index is left out.
struct SplitScheme {
  std::uint64_t seed = 0;
  Eigen::Index half_source = 0;
  Eigen::Index half_target = 0;
  std::vector<Eigen::Index> permutation_source;
  std::vector<Eigen::Index> permutation_target;

  static SplitScheme draw(Eigen::Index n_source, Eigen::Index n_target, std::uint64_t seed);

  std::vector<Eigen::Index> source_first() const;
  std::vector<Eigen::Index> source_second() const;
  std::vector<Eigen::Index> target_first() const;
  std::vector<Eigen::Index> target_second() const;
};

/// `count` independent splits derived deterministically from `seed`.
std::vector<SplitScheme> draw_splits(Eigen::Index n_source, Eigen::Index n_target,
                                     std::uint64_t seed, int count);

/// Entropic OT between two point clouds with uniform weights; the value is the
/// full objective (transport cost plus entropy term).
TransportPlan entropic_ot_between(const Matrix& a, const Matrix& b, const SolverConfig& config,
                                  const Metric& metric = Metric::euclidean());
double entropic_ot_value(const Matrix& a, const Matrix& b, const SolverConfig& config,
                         const Metric& metric = Metric::euclidean());

struct PlugInResult {
  double value = 0.0;
  TransportPlan plan;
};

/// Plug-in X shift: entropic OT between the two empirical covariate measures.
PlugInResult plugin_xshift(const LabeledSample& source, const LabeledSample& target,
                           const SolverConfig& config, const Metric& metric = Metric::euclidean());

/// Squared entropic distances averaged over the splits, and the combined value.
struct DebiasedTerms {
  double cross_first = 0.0;   ///< W(S', T')^2
  double cross_second = 0.0;  ///< W(S'', T'')^2
  double within_source = 0.0; ///< W(S', S'')^2
  double within_target = 0.0; ///< W(T', T'')^2
  double value = 0.0;
};

/// Debiased X shift:
///   sqrt| W(S',T')^2/2 + W(S'',T'')^2/2 - W(S',S'')^2/2 - W(T',T'')^2/2 |
/// With several splits each squared term is averaged before combining.
DebiasedTerms debiased_xshift_terms(const LabeledSample& source, const LabeledSample& target,
                                    const SolverConfig& config,
                                    std::span<const SplitScheme> splits,
                                    const Metric& metric = Metric::euclidean());

double debiased_xshift(const LabeledSample& source, const LabeledSample& target,
                       const SolverConfig& config, std::span<const SplitScheme> splits,
                       const Metric& metric = Metric::euclidean());

/// Convenience overload drawing `num_splits` splits from `seed`.
double debiased_xshift(const LabeledSample& source, const LabeledSample& target,
                       const SolverConfig& config, std::uint64_t seed, int num_splits = 1,
                       const Metric& metric = Metric::euclidean());

/// Plan-weighted mean label distance, sum_ij rho_Y(y_i, y_j) gamma_ij.
double concept_shift(const LabeledSample& source, const LabeledSample& target,
                     const TransportPlan& plan, const Metric& label_metric = default_label_metric());

}  // namespace datashifts
