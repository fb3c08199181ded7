#include "datashifts/report.hpp"

namespace datashifts {

using nlohmann::json;

namespace {

template <typename T>
T required(const json& j, const char* key) {
  if (!j.contains(key)) throw InvalidInput(std::string("JSON is missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("JSON field '") + key + "' has the wrong type: " + e.what());
  }
}

}  // namespace

void to_json(json& j, const ShiftEstimates& s) {
  j = json::object();
  j["s_cov"] = s.s_cov;
  if (s.s_cpt) j["s_cpt"] = *s.s_cpt;
  j["beta"] = s.beta;
  j["n_source"] = s.n_source;
  j["n_target"] = s.n_target;
  j["estimator_kind"] = to_string(s.estimator_kind);
  j["num_splits"] = s.num_splits;
  j["seed"] = s.split_seed;
}

void from_json(const json& j, ShiftEstimates& s) {
  s.s_cov = required<double>(j, "s_cov");
  if (j.contains("s_cpt") && !j.at("s_cpt").is_null()) {
    s.s_cpt = required<double>(j, "s_cpt");
  } else {
    s.s_cpt.reset();
  }
  s.beta = required<double>(j, "beta");
  s.n_source = required<Eigen::Index>(j, "n_source");
  s.n_target = required<Eigen::Index>(j, "n_target");
  s.estimator_kind = estimator_kind_from_string(required<std::string>(j, "estimator_kind"));
  s.num_splits = required<int>(j, "num_splits");
  s.split_seed = required<std::uint64_t>(j, "seed");
}

void to_json(json& j, const LipschitzSpec& l) {
  j = json{{"l_h", l.l_h}, {"l_loss_label", l.l_loss_label}, {"l_loss_output", l.l_loss_output}};
}

void from_json(const json& j, LipschitzSpec& l) {
  l.l_h = required<double>(j, "l_h");
  l.l_loss_label = required<double>(j, "l_loss_label");
  l.l_loss_output = required<double>(j, "l_loss_output");
}

void to_json(json& j, const BoundReport& r) {
  j = json::object();
  j["source_error"] = r.source_error;
  j["x_term"] = r.x_term;
  j["y_term"] = r.y_term;
  j["bound"] = r.bound;
  j["shifts"] = r.shifts;
  j["lipschitz"] = r.lipschitz;
  if (r.target_error) j["target_error"] = *r.target_error;
}

void from_json(const json& j, BoundReport& r) {
  r.source_error = required<double>(j, "source_error");
  r.x_term = required<double>(j, "x_term");
  r.y_term = required<double>(j, "y_term");
  r.bound = required<double>(j, "bound");
  r.shifts = required<ShiftEstimates>(j, "shifts");
  r.lipschitz = required<LipschitzSpec>(j, "lipschitz");
  if (j.contains("target_error") && !j.at("target_error").is_null()) {
    r.target_error = required<double>(j, "target_error");
  } else {
    r.target_error.reset();
  }
}

void to_json(json& j, const LossSpec& loss) {
  j = json{{"kind", loss.name()}};
  if (loss.kind == LossSpec::Kind::SquaredErrorBounded) j["M"] = loss.parameter;
  if (loss.kind == LossSpec::Kind::CrossEntropyClamped) j["a"] = loss.parameter;
}

void from_json(const json& j, LossSpec& loss) {
  const auto kind = required<std::string>(j, "kind");
  if (kind == "absolute") {
    loss = LossSpec::absolute_error();
  } else if (kind == "squared") {
    loss = LossSpec::squared_error_bounded(required<double>(j, "M"));
  } else if (kind == "cross-entropy") {
    loss = LossSpec::cross_entropy_clamped(required<double>(j, "a"));
  } else {
    throw InvalidInput("unknown loss kind '" + kind +
                       "' (expected absolute, squared or cross-entropy)");
  }
  loss.validate();
}

json pipeline_json(const PipelineResult& result) {
  json j = json::object();
  j["shifts"] = result.shifts;
  if (result.bound) j["bound"] = *result.bound;
  return j;
}

LipschitzSpec lipschitz_from_fragment(const json& fragment) {
  if (!fragment.is_object()) throw InvalidInput("Lipschitz description must be a JSON object");
  LipschitzSpec l;
  if (fragment.contains("l_h")) {
    l.l_h = required<double>(fragment, "l_h");
  } else if (fragment.contains("layer_norms")) {
    const auto norms = required<std::vector<double>>(fragment, "layer_norms");
    const auto acts = fragment.contains("activations")
                          ? required<std::vector<double>>(fragment, "activations")
                          : std::vector<double>(norms.empty() ? 0 : norms.size() - 1, 1.0);
    l.l_h = layered_hypothesis_lipschitz(norms, acts);
  } else {
    throw InvalidInput("Lipschitz description needs l_h or layer_norms");
  }
  bool have_loss = false;
  if (fragment.contains("loss")) {
    const auto [label, output] = loss_lipschitz(required<LossSpec>(fragment, "loss"));
    l.l_loss_label = label;
    l.l_loss_output = output;
    have_loss = true;
  }
  if (fragment.contains("l_loss_label") || fragment.contains("l_loss_output")) {
    l.l_loss_label = required<double>(fragment, "l_loss_label");
    l.l_loss_output = required<double>(fragment, "l_loss_output");
    have_loss = true;
  }
  if (!have_loss) throw InvalidInput("Lipschitz description needs loss or l_loss_label/l_loss_output");
  l.validate();
  return l;
}

std::string dump_report(const json& j) { return j.dump(2) + "\n"; }

}  // namespace datashifts
