#pragma once

#include "datashifts/bound.hpp"
#include "datashifts/core.hpp"
#include "datashifts/estimators.hpp"
#include "datashifts/lipschitz.hpp"
#include "datashifts/oracles.hpp"
#include "datashifts/seeding.hpp"
#include "datashifts/sinkhorn.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace datashifts {

/// Source ~ N(0, I_d), target ~ N(T e_1, I_d) with ||T|| = mean_offset_norm.
struct GaussianShiftSpec {
  Eigen::Index dimension = 2;
  double mean_offset_norm = 0.0;
  Eigen::Index sample_size = 1000;
  std::uint64_t seed = 0;

  void validate() const;
};

std::pair<LabeledSample, LabeledSample> gen_gaussian_pair(const GaussianShiftSpec& spec);

/// n draws from N(mean, I) using `rng`.
Matrix gaussian_points(Eigen::Index n, const Vector& mean, Rng& rng);

/// Runs task(i) for every i < count on at most `threads` workers (0 means
/// one per hardware thread). Tasks must write to disjoint outputs; the first
/// exception thrown by a task is rethrown after all workers stop.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& task);

double median(std::vector<double> values);

// ---------------------------------------------------------------------------
// Gaussian estimator sweeps

struct Fig1Grid {
  std::vector<Eigen::Index> dims{2, 10, 30, 50, 70};
  std::vector<Eigen::Index> sizes{250, 500, 1000, 2000, 4000};
  std::vector<double> offsets{0, 2, 4, 6, 8, 10};
  std::vector<std::uint64_t> seeds;  ///< empty means 0..19
  double beta = 1e-3;
  /// Fixed d for the n and offset sweeps, fixed n for the d and offset sweeps.
  Eigen::Index anchor_dimension = 70;
  Eigen::Index anchor_size = 1000;
  int num_splits = 1;
  unsigned threads = 0;

  std::vector<std::uint64_t> seed_list() const;
};

struct Fig1Cell {
  Eigen::Index d = 0;
  Eigen::Index n = 0;
  double offset = 0.0;
  bool operator==(const Fig1Cell&) const = default;
};

/// The three sweeps, without duplicates:
///   n over sizes   at d = anchor_dimension, offset 0
///   d over dims    at n = anchor_size,      offset 0
///   offset over offsets at (anchor_dimension, anchor_size)
std::vector<Fig1Cell> fig1_cells(const Fig1Grid& grid);

struct EstimateRow {
  Eigen::Index d = 0;
  Eigen::Index n = 0;
  double offset = 0.0;
  std::uint64_t seed = 0;
  EstimatorKind estimator = EstimatorKind::PlugIn;
  double estimate = 0.0;  ///< NaN when the solver failed
  double truth = 0.0;
  double abs_error = 0.0;
  std::string failure;
};

/// One plug-in and one debiased row per (cell, seed), ordered by cell, seed,
/// then estimator. Solver failures are recorded in the row; the run goes on.
std::vector<EstimateRow> run_estimator_cells(const std::vector<Fig1Cell>& cells,
                                             const Fig1Grid& grid, bool plugin = true,
                                             bool debiased = true);

std::vector<EstimateRow> run_fig1(const Fig1Grid& grid);

/// Header d,n,offset,seed,estimator,estimate,truth,abs_error
void write_estimate_csv(std::ostream& out, const std::vector<EstimateRow>& rows);

/// Median estimate over seeds for the matching cell and estimator (NaN rows
/// skipped).
double median_estimate(const std::vector<EstimateRow>& rows, const Fig1Cell& cell,
                       EstimatorKind estimator);
double median_abs_error(const std::vector<EstimateRow>& rows, const Fig1Cell& cell,
                        EstimatorKind estimator);

/// Three-panel SVG of median estimates for the three sweeps.
void write_fig1_svg(std::ostream& out, const std::vector<EstimateRow>& rows, const Fig1Grid& grid);

// ---------------------------------------------------------------------------
// Concentration sweeps

/// Debiased X shift against ||T|| as n grows.
struct XShiftConcentration {
  Eigen::Index dimension = 70;
  double offset = 6.0;
  std::vector<Eigen::Index> sizes{250, 500, 1000, 2000, 4000};
  std::vector<std::uint64_t> seeds;  ///< empty means 0..19
  double beta = 1e-3;
  int num_splits = 1;
  unsigned threads = 0;
};

/// Concept shift on identically distributed covariates with labels
///   y_S = m(x) + noise_S,   y_T = m(x) + label_shift + noise_T,
/// m(x) = slope * sin(x_1). Gaussian noise; zero scale means deterministic.
struct YShiftConcentration {
  Eigen::Index dimension = 2;
  double label_shift = 0.25;
  double slope = 1.0;
  double noise_source = 0.1;
  double noise_target = 0.3;
  std::vector<Eigen::Index> sizes{250, 500, 1000, 2000, 4000};
  std::vector<std::uint64_t> seeds;
  double beta = 1e-3;
  unsigned threads = 0;

  ConditionalLaw source_law() const;
  ConditionalLaw target_law() const;
};

struct ConcentrationRow {
  Eigen::Index n = 0;
  std::uint64_t seed = 0;
  double estimate = 0.0;
  double oracle = 0.0;
  double deviation = 0.0;   ///< estimate - oracle
  double bias_bound = 0.0;  ///< sqrt(I_S) + sqrt(I_T); 0 for X shift
  std::string failure;
};

std::vector<ConcentrationRow> run_concentration(const XShiftConcentration& spec);
std::vector<ConcentrationRow> run_concentration(const YShiftConcentration& spec);

struct ConcentrationSummary {
  Eigen::Index n = 0;
  double median_abs_deviation = 0.0;
  double median_deviation = 0.0;
  std::size_t trials = 0;
  std::size_t failures = 0;
};

/// One entry per n, in increasing n.
std::vector<ConcentrationSummary> summarize_concentration(const std::vector<ConcentrationRow>& rows);

/// Header n,seed,estimate,oracle,deviation,bias_bound
void write_concentration_csv(std::ostream& out, const std::vector<ConcentrationRow>& rows);

// ---------------------------------------------------------------------------
// Bound validation

/// Fully connected network, tanh between layers, linear output.
struct Mlp {
  std::vector<Matrix> weights;  ///< layer k maps width_k -> width_{k+1}; shape (out, in)
  std::vector<Vector> biases;

  static Mlp random(const std::vector<Eigen::Index>& widths, double scale, Rng& rng);

  Matrix evaluate(const Matrix& x) const;
  /// Product of spectral norms (tanh is 1-Lipschitz).
  double lipschitz_upper_bound() const;
};

/// Randomized tasks for the target-error bound. Per trial:
///   covariates  source N(0, I_d), target N(T u, I_d), ||T|| ~ U[0, max_offset],
///               u a random unit vector
///   labels      teacher MLP f; target labels f(x) + c, c ~ U[-max_label_shift,
///               max_label_shift]; optional Gaussian label noise
///   hypothesis  the teacher with every weight perturbed by N(0, perturbation^2)
struct BoundTaskSpec {
  Eigen::Index dimension = 2;
  Eigen::Index sample_size = 400;
  Eigen::Index hidden_units = 16;
  double max_offset = 2.0;
  double max_label_shift = 0.5;
  double label_noise = 0.0;
  double perturbation = 0.3;
  LossSpec loss = LossSpec::absolute_error();
  double beta = 1e-3;
  EstimatorKind estimator = EstimatorKind::Debiased;
  int num_splits = 1;
  unsigned threads = 0;

  void validate() const;
};

struct BoundTrial {
  std::uint64_t seed = 0;
  double offset = 0.0;
  double label_shift = 0.0;
  double l_h = 0.0;
  double source_error = 0.0;
  double target_error = 0.0;
  double s_cov = 0.0;
  double s_cpt = 0.0;
  double bound = 0.0;
  bool holds = false;
  std::string failure;
};

std::vector<BoundTrial> run_bound_validation(const BoundTaskSpec& task,
                                             const std::vector<std::uint64_t>& seeds);

/// Header seed,offset,label_shift,l_h,source_error,target_error,s_cov,s_cpt,bound,holds
/// followed by a summary line "# holds_rate,<rate>".
void write_bound_csv(std::ostream& out, const std::vector<BoundTrial>& trials);

double holds_rate(const std::vector<BoundTrial>& trials);

}  // namespace datashifts
