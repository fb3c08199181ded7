#pragma once

#include "datashifts/core.hpp"

#include <stdexcept>

namespace datashifts {

/// Knobs for the entropic solver. `beta` is the entropic regularization
/// strength, in units of the cost.
struct SolverConfig {
  double beta = 1e-3;
  int max_iterations = 10000;
  /// L1 violation allowed on the row marginal; columns are matched exactly
  /// after every sweep.
  double marginal_tolerance = 1e-6;
  /// Updates are always carried out on log-potentials; kept as a field so the
  /// configuration round-trips through reports.
  bool log_domain = true;
  /// Anneal beta geometrically from the cost spread down to `beta` before the
  /// final sweeps. Does not change the fixed point.
  bool epsilon_scaling = true;

  /// Throws InvalidInput for nonpositive beta, tolerance or iteration cap.
  void validate() const;
};

/// Raised when Sinkhorn exhausts its iteration budget.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(double violation, int iterations);
  double marginal_violation() const { return violation_; }
  int iterations() const { return iterations_; }

 private:
  double violation_;
  int iterations_;
};

/// A coupling between two discrete measures together with its objective.
///
/// For entropic plans gamma_ij = exp((f_i + g_j - C_ij) / beta). Entries far
/// from the optimal matching underflow to zero in `coupling`; log_mass() gives
/// their exact logarithm.
struct TransportPlan {
  Matrix coupling;
  Vector row_marginal;
  Vector col_marginal;
  double beta = 0.0;
  double transport_cost = 0.0;  ///< sum_ij C_ij gamma_ij
  double entropy_term = 0.0;    ///< beta * KL(gamma | mu x nu)
  double objective = 0.0;       ///< transport_cost + entropy_term
  double marginal_violation = 0.0;
  int iterations = 0;

  /// Dual potentials (cost units); empty for exact plans.
  Vector row_potential;
  Vector col_potential;

  /// log gamma_ij recomputed from the potentials; finite for every entry when
  /// beta > 0. For exact plans this is log(coupling(i, j)).
  double log_mass(const CostMatrix& cost, Eigen::Index i, Eigen::Index j) const;
};

/// Scalar summary of an entropic solve, without the dense coupling.
struct EntropicValue {
  double transport_cost = 0.0;
  double entropy_term = 0.0;
  double objective = 0.0;
  double marginal_violation = 0.0;
  int iterations = 0;
};

/// Log-domain Sinkhorn for
///   min <C, gamma> + beta * KL(gamma | mu x nu)  s.t. gamma 1 = mu, gamma^T 1 = nu.
/// For uniform marginals the objective equals
///   <C, gamma> + beta * sum gamma log gamma + beta * log(n m).
/// Marginals must be strictly positive and sum to one.
TransportPlan sinkhorn(const CostMatrix& cost, const Vector& mu, const Vector& nu,
                       const SolverConfig& config);

/// Same fixed point as sinkhorn(), reporting only the scalar terms.
EntropicValue sinkhorn_value(const CostMatrix& cost, const Vector& mu, const Vector& nu,
                             const SolverConfig& config);

/// Exact transport plan (beta = 0) via the transportation simplex. Only for
/// oracle-scale instances: rows * cols <= kExactOracleMaxCells.
TransportPlan exact_transport(const CostMatrix& cost, const Vector& mu, const Vector& nu);

/// Optimal value of the unregularized transport linear program.
double exact_w1(const CostMatrix& cost, const Vector& mu, const Vector& nu);

inline constexpr Eigen::Index kExactOracleMaxCells = 10000;

/// Dispatch on beta: Sinkhorn for beta > 0, the exact solver for beta == 0
/// when the instance is small enough; otherwise rejected.
TransportPlan solve_transport(const CostMatrix& cost, const Vector& mu, const Vector& nu,
                              const SolverConfig& config);

/// Checks that `w` is a probability vector of length `n`.
void require_probability_vector(const Vector& w, Eigen::Index n, const std::string& what);

}  // namespace datashifts
