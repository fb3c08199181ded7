#pragma once

#include "datashifts/bound.hpp"
#include "datashifts/estimators.hpp"
#include "datashifts/lipschitz.hpp"

#include <json.hpp>

#include <string>

namespace datashifts {

// JSON field names:
//   ShiftEstimates  s_cov, s_cpt (omitted when absent), beta, n_source, n_target,
//                   estimator_kind ("PlugIn" | "Debiased"), num_splits, seed
//   LipschitzSpec   l_h, l_loss_label, l_loss_output
//   BoundReport     source_error, x_term, y_term, bound, shifts, lipschitz,
//                   target_error (omitted when absent)
void to_json(nlohmann::json& j, const ShiftEstimates& s);
void from_json(const nlohmann::json& j, ShiftEstimates& s);
void to_json(nlohmann::json& j, const LipschitzSpec& l);
void from_json(const nlohmann::json& j, LipschitzSpec& l);
void to_json(nlohmann::json& j, const BoundReport& r);
void from_json(const nlohmann::json& j, BoundReport& r);
void to_json(nlohmann::json& j, const LossSpec& loss);
void from_json(const nlohmann::json& j, LossSpec& loss);

/// Report printed by the pipeline: {"shifts": ..., "bound": ...}, with
/// "bound" present only when one was computed.
nlohmann::json pipeline_json(const PipelineResult& result);

/// Reads a Lipschitz description. Accepted keys:
///   l_h                          hypothesis constant, or
///   layer_norms, activations     spectral-product bound for l_h
///   loss                         {"kind": "absolute" | "squared" | "cross-entropy",
///                                 "M": ..., "a": ...}; supplies the loss constants
///   l_loss_label, l_loss_output  explicit loss constants (override "loss")
LipschitzSpec lipschitz_from_fragment(const nlohmann::json& fragment);

/// Indented output with a trailing newline; stable for identical input.
std::string dump_report(const nlohmann::json& j);

}  // namespace datashifts
