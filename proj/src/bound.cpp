#include "datashifts/bound.hpp"

#include <cmath>

namespace datashifts {

BoundReport assemble_bound(const ShiftEstimates& shifts, const LipschitzSpec& lipschitz,
                           double source_error) {
  lipschitz.validate();
  if (!std::isfinite(source_error)) throw InvalidInput("source error must be finite");
  if (!shifts.s_cpt) throw InvalidInput("the bound needs a concept shift estimate (labels)");
  BoundReport r;
  r.source_error = source_error;
  r.x_term = lipschitz.l_h * lipschitz.l_loss_output * shifts.s_cov;
  r.y_term = lipschitz.l_loss_label * *shifts.s_cpt;
  r.bound = r.source_error + r.x_term + r.y_term;
  r.shifts = shifts;
  r.lipschitz = lipschitz;
  return r;
}

PipelineResult datashifts(const LabeledSample& source, const LabeledSample& target,
                          const SolverConfig& config, const PipelineOptions& options,
                          const std::optional<LipschitzSpec>& lipschitz,
                          std::optional<double> source_error) {
  const bool want_bound = lipschitz.has_value() && source_error.has_value();
  const bool labeled = source.has_labels() && target.has_labels();
  if (want_bound && !labeled) {
    throw InvalidInput("a bound was requested but the source or target sample has no labels");
  }
  if (lipschitz) lipschitz->validate();

  PipelineResult out;
  ShiftEstimates& s = out.shifts;
  s.beta = config.beta;
  s.n_source = source.size();
  s.n_target = target.size();
  s.estimator_kind = options.kind;
  s.split_seed = options.seed;
  s.num_splits = options.num_splits;

  // The plug-in plan is needed for S_cpt even when S_cov is debiased.
  std::optional<PlugInResult> plugin;
  if (options.kind == EstimatorKind::PlugIn || labeled) {
    plugin = plugin_xshift(source, target, config, options.covariate_metric);
  }
  if (options.kind == EstimatorKind::PlugIn) {
    s.s_cov = plugin->value;
  } else {
    s.s_cov = debiased_xshift(source, target, config, options.seed, options.num_splits,
                              options.covariate_metric);
  }
  if (labeled) s.s_cpt = concept_shift(source, target, plugin->plan, options.label_metric);

  if (want_bound) out.bound = assemble_bound(s, *lipschitz, *source_error);
  return out;
}

double empirical_error(const LabeledSample& sample, const Matrix& predictions,
                       const LossSpec& loss) {
  loss.validate();
  if (!sample.has_labels()) throw InvalidInput("empirical error needs labels");
  const Matrix& y = *sample.labels();
  if (predictions.rows() != y.rows() || predictions.cols() != y.cols()) {
    throw InvalidInput("predictions have shape " + std::to_string(predictions.rows()) + "x" +
                       std::to_string(predictions.cols()) + " but labels have " +
                       std::to_string(y.rows()) + "x" + std::to_string(y.cols()));
  }
  require_finite(predictions, "predictions");
  double total = 0.0;
  if (loss.kind == LossSpec::Kind::AbsoluteError) {
    total = (y - predictions).rowwise().norm().sum();
  } else {
    if (y.cols() != 1) throw InvalidInput(loss.name() + " loss needs scalar labels");
    for (Eigen::Index i = 0; i < y.rows(); ++i) total += loss(y(i, 0), predictions(i, 0));
  }
  return total / static_cast<double>(y.rows());
}

}  // namespace datashifts
