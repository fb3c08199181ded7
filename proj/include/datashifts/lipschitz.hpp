#pragma once

#include "datashifts/core.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace datashifts {

/// Loss catalog. Parameters:
///   AbsoluteError        |y - y'| (Euclidean norm for vector labels)
///   SquaredErrorBounded  (y - y')^2 with y, y' in [0, M]; `parameter` = M
///   CrossEntropyClamped  -y log y' - (1 - y) log(1 - y') with y in [0, 1] and
///                        y' in [a, 1 - a]; `parameter` = a
struct LossSpec {
  enum class Kind { AbsoluteError, SquaredErrorBounded, CrossEntropyClamped };
  Kind kind = Kind::AbsoluteError;
  double parameter = 0.0;

  static LossSpec absolute_error() { return {}; }
  static LossSpec squared_error_bounded(double m) { return {Kind::SquaredErrorBounded, m}; }
  static LossSpec cross_entropy_clamped(double a) { return {Kind::CrossEntropyClamped, a}; }

  void validate() const;
  std::string name() const;

  /// Loss for scalar label and output.
  double operator()(double y, double y_hat) const;
};

/// Lipschitz factors entering the bound.
struct LipschitzSpec {
  double l_h = 0.0;            ///< hypothesis
  double l_loss_label = 0.0;   ///< loss in its label argument
  double l_loss_output = 0.0;  ///< loss in its output argument

  void validate() const;
  bool operator==(const LipschitzSpec&) const = default;
};

/// (label constant, output constant) for a catalog loss.
std::pair<double, double> loss_lipschitz(const LossSpec& loss);

/// Samples `pair_samples` quadruples (y1, y2, y1', y2') from the loss domain
/// and checks
///   |l(y1, y1') - l(y2, y2')| <= L * |y1 - y2| + L' * |y1' - y2'| + 1e-9.
/// Half of the pairs are local perturbations, which probe the steepest
/// regions. The unbounded absolute-error domain is sampled in [-range, range].
bool verify_separate_lipschitz(const LossSpec& loss, std::int64_t pair_samples,
                               std::uint64_t seed, double label_constant,
                               double output_constant, double range = 10.0);

/// Same check with the catalog constants.
bool verify_separate_lipschitz(const LossSpec& loss, std::int64_t pair_samples,
                               std::uint64_t seed);

/// Product of per-layer spectral norms and activation constants: an upper
/// bound on the Lipschitz constant of x -> a_k(W_k ... a_1(W_1 x)).
/// `activation_constants` has one entry per hidden layer (norms.size() - 1),
/// or one per layer when the output also passes through an activation.
double layered_hypothesis_lipschitz(const std::vector<double>& weight_spectral_norms,
                                    const std::vector<double>& activation_constants);

/// Largest singular value.
double spectral_norm(const Matrix& weights);

}  // namespace datashifts
