// datashifts command-line front end. JSON reports for the estimators, CSV
// tables for the experiment harness.

#include "datashifts/bound.hpp"
#include "datashifts/csv.hpp"
#include "datashifts/estimators.hpp"
#include "datashifts/report.hpp"
#include "datashifts/synth.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace ds = datashifts;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

/// Raised for an estimator that ran but did not produce a usable value.
class EstimatorFailure : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EstimateFlags {
  std::string source;
  std::string target;
  std::vector<std::string> label_cols;
  double beta = 1e-3;
  std::uint64_t seed = 0;
  int num_splits = 1;
  std::string estimator = "debiased";
  int max_iterations = ds::SolverConfig{}.max_iterations;
  double tolerance = ds::SolverConfig{}.marginal_tolerance;
  std::string out;
  std::string plan_out;
};

struct BoundFlags {
  std::string lipschitz;
  std::string loss;
  std::optional<double> source_error;
  std::string source_pred;
  std::string target_pred;
};

struct SweepFlags {
  double beta = 1e-3;
  std::uint64_t seed = 0;
  std::size_t seeds = 20;
  int num_splits = 1;
  unsigned threads = 0;
  std::string out;
};

void add_estimate_flags(CLI::App* cmd, EstimateFlags& f, bool labels_required) {
  cmd->add_option("--source", f.source, "Source CSV (header row, numeric cells)")->required();
  cmd->add_option("--target", f.target, "Target CSV with the same columns")->required();
  auto* labels = cmd->add_option("--label-cols", f.label_cols,
                                 "Comma-separated label columns; the rest are covariates")
                     ->delimiter(',');
  if (labels_required) labels->required();
  cmd->add_option("--beta", f.beta, "Entropic regularization; 0 selects the exact solver (tiny inputs only)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_option("--seed", f.seed, "Seed for the random half splits")->capture_default_str();
  cmd->add_option("--num-splits", f.num_splits, "Half splits averaged by the debiased estimator")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--estimator", f.estimator, "X-shift estimator")
      ->check(CLI::IsMember({"debiased", "plugin"}))
      ->capture_default_str();
  cmd->add_option("--max-iterations", f.max_iterations, "Sinkhorn iteration budget")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--tolerance", f.tolerance, "L1 marginal violation accepted as converged")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--out", f.out, "Output file (default stdout)");
  cmd->add_option("--plan-out", f.plan_out, "Write the full-sample transport plan as CSV");
}

void add_sweep_flags(CLI::App* cmd, SweepFlags& f, bool per_cell_seeds = true) {
  cmd->add_option("--beta", f.beta, "Entropic regularization")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--seed", f.seed, "First seed; trials use seed, seed+1, ...")->capture_default_str();
  if (per_cell_seeds) {
    cmd->add_option("--seeds", f.seeds, "Seeds per cell")->check(CLI::PositiveNumber)->capture_default_str();
  }
  cmd->add_option("--num-splits", f.num_splits, "Half splits averaged by the debiased estimator")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--threads", f.threads, "Worker threads (0 = one per core); output does not depend on it")
      ->capture_default_str();
  cmd->add_option("--out", f.out, "Output CSV (default stdout)");
}

std::vector<std::uint64_t> seed_range(std::uint64_t first, std::size_t count) {
  std::vector<std::uint64_t> seeds(count);
  for (std::size_t i = 0; i < count; ++i) seeds[i] = first + i;
  return seeds;
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text << std::flush;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ds::InvalidInput("cannot write '" + path + "'");
  out << text;
  if (!out.flush()) throw ds::InvalidInput("failed writing '" + path + "'");
}

ds::SolverConfig solver_config(const EstimateFlags& f) {
  ds::SolverConfig config;
  config.beta = f.beta;
  config.max_iterations = f.max_iterations;
  config.marginal_tolerance = f.tolerance;
  if (f.beta > 0.0) config.validate();
  return config;
}

std::pair<ds::LabeledSample, ds::LabeledSample> load_pair(const EstimateFlags& f) {
  const auto s = ds::read_csv_file(f.source);
  const auto t = ds::read_csv_file(f.target);
  if (s.header != t.header) {
    throw ds::InvalidInput("source and target CSVs must have the same columns in the same order");
  }
  return {ds::sample_from_table(s, f.label_cols, ds::Domain::Source),
          ds::sample_from_table(t, f.label_cols, ds::Domain::Target)};
}

ds::PipelineOptions pipeline_options(const EstimateFlags& f) {
  ds::PipelineOptions options;
  options.kind = ds::estimator_kind_from_string(f.estimator);
  options.seed = f.seed;
  options.num_splits = f.num_splits;
  return options;
}

void write_plan(const EstimateFlags& f, const ds::LabeledSample& source,
                const ds::LabeledSample& target, const ds::SolverConfig& config) {
  if (f.plan_out.empty()) return;
  const auto plugin = ds::plugin_xshift(source, target, config);
  std::ostringstream text;
  ds::write_plan_csv(text, plugin.plan);
  emit(f.plan_out, text.str());
}

nlohmann::json json_argument(const std::string& text, const char* flag) {
  std::string body = text;
  if (body.find('{') == std::string::npos) {
    std::ifstream in(text);
    if (!in) throw ds::InvalidInput(std::string(flag) + ": cannot open '" + text + "'");
    body.assign(std::istreambuf_iterator<char>(in), {});
  }
  try {
    return nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw ds::InvalidInput(std::string(flag) + ": invalid JSON: " + e.what());
  }
}

/// absolute | squared:M | cross-entropy:a, or a JSON object.
ds::LossSpec parse_loss(const std::string& text) {
  if (text.find('{') != std::string::npos) return json_argument(text, "--loss").get<ds::LossSpec>();
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  nlohmann::json j{{"kind", kind}};
  if (colon != std::string::npos) {
    double value = 0.0;
    try {
      std::size_t used = 0;
      value = std::stod(text.substr(colon + 1), &used);
      if (used != text.size() - colon - 1) throw std::invalid_argument("trailing text");
    } catch (const std::exception&) {
      throw ds::InvalidInput("--loss: bad parameter in '" + text + "'");
    }
    j[kind == "squared" ? "M" : "a"] = value;
  }
  return j.get<ds::LossSpec>();
}

ds::Matrix read_predictions(const std::string& path, const ds::LabeledSample& sample) {
  const auto table = ds::read_csv_file(path);
  if (table.values.rows() != sample.size()) {
    throw ds::InvalidInput(path + " has " + std::to_string(table.values.rows()) +
                           " predictions for " + std::to_string(sample.size()) + " samples");
  }
  return table.values;
}

void require_ok(const std::vector<std::string>& failures) {
  if (failures.empty()) return;
  for (const auto& f : failures) std::cerr << "datashifts: " << f << '\n';
  throw EstimatorFailure(std::to_string(failures.size()) + " trial(s) failed");
}

// ---------------------------------------------------------------------------

void run_xshift(const EstimateFlags& f) {
  const auto config = solver_config(f);
  auto [source, target] = load_pair(f);
  // X shift only looks at covariates.
  const ds::LabeledSample xs(source.covariates(), std::nullopt, ds::Domain::Source);
  const ds::LabeledSample xt(target.covariates(), std::nullopt, ds::Domain::Target);
  const auto result = ds::datashifts(xs, xt, config, pipeline_options(f));
  write_plan(f, xs, xt, config);
  emit(f.out, ds::dump_report(result.shifts));
}

void run_yshift(const EstimateFlags& f) {
  const auto config = solver_config(f);
  const auto [source, target] = load_pair(f);
  const auto result = ds::datashifts(source, target, config, pipeline_options(f));
  write_plan(f, source, target, config);
  emit(f.out, ds::dump_report(result.shifts));
}

void run_bound(const EstimateFlags& f, const BoundFlags& b) {
  const auto config = solver_config(f);
  const auto [source, target] = load_pair(f);

  // --loss fills in the loss constants unless the fragment names a loss or
  // gives them explicitly; it is also the loss used on prediction files.
  std::optional<ds::LipschitzSpec> lipschitz;
  ds::LossSpec loss = ds::LossSpec::absolute_error();
  if (!b.loss.empty()) loss = parse_loss(b.loss);
  if (!b.lipschitz.empty()) {
    auto fragment = json_argument(b.lipschitz, "--lipschitz");
    if (fragment.is_object() && fragment.contains("loss")) {
      loss = fragment.at("loss").get<ds::LossSpec>();
    } else if (fragment.is_object() && !fragment.contains("l_loss_label")) {
      fragment["loss"] = loss;
    }
    lipschitz = ds::lipschitz_from_fragment(fragment);
  }

  std::optional<double> source_error = b.source_error;
  if (!b.source_pred.empty()) {
    if (source_error) throw ds::InvalidInput("give --source-error or --source-pred, not both");
    source_error = ds::empirical_error(source, read_predictions(b.source_pred, source), loss);
  }
  if (lipschitz && !source_error) {
    throw ds::InvalidInput("--lipschitz needs --source-error or --source-pred");
  }
  if (!b.target_pred.empty() && !lipschitz) {
    throw ds::InvalidInput("--target-pred needs --lipschitz");
  }

  auto result = ds::datashifts(source, target, config, pipeline_options(f), lipschitz, source_error);
  if (result.bound && !b.target_pred.empty()) {
    result.bound->target_error =
        ds::empirical_error(target, read_predictions(b.target_pred, target), loss);
  }
  write_plan(f, source, target, config);
  emit(f.out, ds::dump_report(ds::pipeline_json(result)));
}

void run_fig1(const SweepFlags& s, ds::Fig1Grid grid, const std::string& svg) {
  grid.beta = s.beta;
  grid.seeds = seed_range(s.seed, s.seeds);
  grid.num_splits = s.num_splits;
  grid.threads = s.threads;
  const auto rows = ds::run_fig1(grid);
  std::ostringstream text;
  ds::write_estimate_csv(text, rows);
  emit(s.out, text.str());
  if (!svg.empty()) {
    std::ostringstream plot;
    ds::write_fig1_svg(plot, rows, grid);
    emit(svg, plot.str());
  }
  std::vector<std::string> failures;
  for (const auto& r : rows) {
    if (!r.failure.empty()) {
      failures.push_back("d=" + std::to_string(r.d) + " n=" + std::to_string(r.n) + " offset=" +
                         ds::format_double(r.offset) + " seed=" + std::to_string(r.seed) + ": " +
                         r.failure);
    }
  }
  require_ok(failures);
}

void run_validate_bound(const SweepFlags& s, ds::BoundTaskSpec task, std::size_t trials,
                        const std::string& estimator) {
  task.beta = s.beta;
  task.num_splits = s.num_splits;
  task.threads = s.threads;
  task.estimator = ds::estimator_kind_from_string(estimator);
  const auto rows = ds::run_bound_validation(task, seed_range(s.seed, trials));
  std::ostringstream text;
  ds::write_bound_csv(text, rows);
  emit(s.out, text.str());
  std::vector<std::string> failures;
  for (const auto& r : rows) {
    if (!r.failure.empty()) failures.push_back("seed=" + std::to_string(r.seed) + ": " + r.failure);
  }
  require_ok(failures);
}

void write_concentration(const SweepFlags& s, const std::vector<ds::ConcentrationRow>& rows) {
  std::ostringstream text;
  ds::write_concentration_csv(text, rows);
  text << "# n,median_abs_deviation,median_deviation,trials,failures\n";
  for (const auto& c : ds::summarize_concentration(rows)) {
    text << "# " << c.n << ',' << ds::format_double(c.median_abs_deviation) << ','
         << ds::format_double(c.median_deviation) << ',' << c.trials << ',' << c.failures << '\n';
  }
  emit(s.out, text.str());
  std::vector<std::string> failures;
  for (const auto& r : rows) {
    if (!r.failure.empty()) {
      failures.push_back("n=" + std::to_string(r.n) + " seed=" + std::to_string(r.seed) + ": " +
                         r.failure);
    }
  }
  require_ok(failures);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Covariate and concept shift estimation with entropic optimal transport"};
  app.require_subcommand(1);
  std::function<void()> action;

  EstimateFlags est;
  BoundFlags bnd;
  SweepFlags sweep;

  auto* xshift = app.add_subcommand("xshift", "Estimate covariate (X) shift between two CSVs");
  add_estimate_flags(xshift, est, false);
  xshift->callback([&] { action = [&] { run_xshift(est); }; });

  auto* yshift = app.add_subcommand("yshift", "Estimate X shift and concept (Y|X) shift");
  add_estimate_flags(yshift, est, true);
  yshift->callback([&] { action = [&] { run_yshift(est); }; });

  auto* bound = app.add_subcommand("bound", "Shifts plus the target error bound");
  add_estimate_flags(bound, est, true);
  bound->add_option("--lipschitz", bnd.lipschitz,
                    "JSON object or file: l_h or layer_norms[/activations], and loss or "
                    "l_loss_label/l_loss_output");
  bound->add_option("--loss", bnd.loss, "absolute | squared:M | cross-entropy:a, or a JSON object");
  bound->add_option("--source-error", bnd.source_error, "Empirical source error of the hypothesis");
  bound->add_option("--source-pred", bnd.source_pred, "CSV of hypothesis outputs on the source rows");
  bound->add_option("--target-pred", bnd.target_pred,
                    "CSV of hypothesis outputs on the target rows (reports the observed target error)");
  bound->callback([&] { action = [&] { run_bound(est, bnd); }; });

  ds::Fig1Grid grid;
  std::string svg;
  auto* fig1 = app.add_subcommand("fig1", "Gaussian sweeps over n, d and mean offset");
  add_sweep_flags(fig1, sweep);
  fig1->add_option("--dims", grid.dims, "Dimensions at the anchor n")->delimiter(',')->capture_default_str();
  fig1->add_option("--sizes", grid.sizes, "Sample sizes at the anchor d")->delimiter(',')->capture_default_str();
  fig1->add_option("--offsets", grid.offsets, "Mean offsets at the anchor d and n")
      ->delimiter(',')
      ->capture_default_str();
  fig1->add_option("--anchor-dim", grid.anchor_dimension)->capture_default_str();
  fig1->add_option("--anchor-n", grid.anchor_size)->capture_default_str();
  fig1->add_option("--svg", svg, "Also write a plot of the median estimates");
  fig1->callback([&] { action = [&] { run_fig1(sweep, grid, svg); }; });

  ds::BoundTaskSpec task;
  std::size_t trials = 100;
  std::string task_estimator = "debiased";
  auto* validate = app.add_subcommand("validate-bound", "Check the bound on random synthetic tasks");
  add_sweep_flags(validate, sweep, false);
  validate->add_option("--trials", trials, "Random tasks, one per seed")->check(CLI::PositiveNumber)->capture_default_str();
  validate->add_option("--dimension", task.dimension)->check(CLI::PositiveNumber)->capture_default_str();
  validate->add_option("--sample-size", task.sample_size)->capture_default_str();
  validate->add_option("--hidden", task.hidden_units)->check(CLI::PositiveNumber)->capture_default_str();
  validate->add_option("--max-offset", task.max_offset)->capture_default_str();
  validate->add_option("--max-label-shift", task.max_label_shift)->capture_default_str();
  validate->add_option("--label-noise", task.label_noise)->capture_default_str();
  validate->add_option("--perturbation", task.perturbation, "Hypothesis weight noise")->capture_default_str();
  validate->add_option("--estimator", task_estimator)
      ->check(CLI::IsMember({"debiased", "plugin"}))
      ->capture_default_str();
  validate->callback([&] { action = [&] { run_validate_bound(sweep, task, trials, task_estimator); }; });

  std::string kind = "xshift";
  ds::XShiftConcentration xc;
  ds::YShiftConcentration yc;
  Eigen::Index dimension = 0;
  auto* conc = app.add_subcommand("concentration", "Estimator deviation from the truth as n grows");
  add_sweep_flags(conc, sweep);
  conc->add_option("--kind", kind)->check(CLI::IsMember({"xshift", "yshift"}))->capture_default_str();
  conc->add_option("--sizes", xc.sizes, "Sample sizes")->delimiter(',')->capture_default_str();
  conc->add_option("--dimension", dimension, "Covariate dimension (default 70 for xshift, 2 for yshift)")
      ->check(CLI::PositiveNumber);
  conc->add_option("--offset", xc.offset, "xshift: mean offset")->capture_default_str();
  conc->add_option("--label-shift", yc.label_shift, "yshift: constant added to target labels")
      ->capture_default_str();
  conc->add_option("--slope", yc.slope, "yshift: label mean is slope * sin(x_1)")->capture_default_str();
  conc->add_option("--noise-source", yc.noise_source, "yshift: source label noise sd")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  conc->add_option("--noise-target", yc.noise_target, "yshift: target label noise sd")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  conc->callback([&] {
    action = [&] {
      const auto seeds = seed_range(sweep.seed, sweep.seeds);
      if (kind == "xshift") {
        if (dimension > 0) xc.dimension = dimension;
        xc.seeds = seeds;
        xc.beta = sweep.beta;
        xc.num_splits = sweep.num_splits;
        xc.threads = sweep.threads;
        write_concentration(sweep, ds::run_concentration(xc));
      } else {
        if (dimension > 0) yc.dimension = dimension;
        yc.sizes = xc.sizes;
        yc.seeds = seeds;
        yc.beta = sweep.beta;
        yc.threads = sweep.threads;
        write_concentration(sweep, ds::run_concentration(yc));
      }
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    action();
  } catch (const ds::InvalidInput& e) {
    std::cerr << "datashifts: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ds::ConvergenceError& e) {
    std::cerr << "datashifts: estimator failed: " << e.what() << '\n';
    return kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "datashifts: " << e.what() << '\n';
    return kExitFailure;
  }
  return 0;
}
