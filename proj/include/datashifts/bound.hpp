#pragma once

#include "datashifts/core.hpp"
#include "datashifts/estimators.hpp"
#include "datashifts/lipschitz.hpp"
#include "datashifts/sinkhorn.hpp"

#include <cstdint>
#include <optional>

namespace datashifts {

/// Target error bound  B = source_error + x_term + y_term  with
///   x_term = L_h * L'_loss * S_cov   and   y_term = L_loss * S_cpt.
struct BoundReport {
  double source_error = 0.0;
  double x_term = 0.0;
  double y_term = 0.0;
  double bound = 0.0;
  ShiftEstimates shifts;
  LipschitzSpec lipschitz;
  /// Observed target error, when target predictions were supplied.
  std::optional<double> target_error;

  bool operator==(const BoundReport&) const = default;
};

/// Requires shifts.s_cpt.
BoundReport assemble_bound(const ShiftEstimates& shifts, const LipschitzSpec& lipschitz,
                           double source_error);

struct PipelineOptions {
  EstimatorKind kind = EstimatorKind::Debiased;
  std::uint64_t seed = 0;
  int num_splits = 1;
  Metric covariate_metric = Metric::euclidean();
  Metric label_metric = default_label_metric();
};

struct PipelineResult {
  ShiftEstimates shifts;
  std::optional<BoundReport> bound;
};

/// S_cov from the chosen X-shift estimator and, when both samples carry
/// labels, S_cpt from the full-sample plug-in plan. The bound is produced
/// only when both `lipschitz` and `source_error` are given; it then requires
/// labels.
PipelineResult datashifts(const LabeledSample& source, const LabeledSample& target,
                          const SolverConfig& config, const PipelineOptions& options = {},
                          const std::optional<LipschitzSpec>& lipschitz = std::nullopt,
                          std::optional<double> source_error = std::nullopt);

/// Mean loss of `predictions` against the sample's labels. Absolute error
/// uses the Euclidean norm of the row difference; the other losses need
/// scalar labels.
double empirical_error(const LabeledSample& sample, const Matrix& predictions,
                       const LossSpec& loss);

}  // namespace datashifts
