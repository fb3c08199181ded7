#include "datashifts/sinkhorn.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

namespace datashifts {

namespace {

// Annealing: each stage divides beta by this factor.
constexpr double kScalingFactor = 0.5;
// Sweeps spent at each intermediate beta.
constexpr int kStageSweeps = 4;
// An intermediate stage still this far from its marginals gets a few Newton
// steps, provided its plan is sparse enough to make them cheap.
constexpr double kStageTolerance = 5e-2;
constexpr int kStageNewtonSteps = 5;
constexpr std::size_t kStageNewtonDensity = 256;
constexpr int kStageCgSteps = 50;
// Plain sweeps at the target beta before switching to Newton steps.
constexpr int kWarmSweeps = 20;
// Entries whose log-mass is this far below the row maximum are left out of
// the sparse Hessian.
constexpr double kSparsityCutoff = 30.0;
// Direct factorization while nnz <= this multiple of the system size and the
// predicted factorization work per unknown stays below kMaxFactorWork.
constexpr std::size_t kDirectDensity = 16;
constexpr double kMaxFactorWork = 4096.0;
constexpr double kRidge = 1e-12;
constexpr double kCgTolerance = 1e-6;
// Newton steps move no potential by more than this many multiples of beta.
constexpr double kMaxStep = 10.0;
constexpr int kMaxHalvings = 10;
constexpr int kFallbackSweeps = 25;

// Log-sum-exp terms below this are clamped. exp(-700) is still a normal
// double, and vectorized exp slows down sharply on subnormal results.
constexpr double kLogFloor = -700.0;

struct Potentials {
  Vector f;
  Vector g;
  double violation = std::numeric_limits<double>::infinity();
  int iterations = 0;
};

using SparseMatrix = Eigen::SparseMatrix<double>;

// Exposes the column counts of L that the symbolic analysis computes, so the
// cost of a factorization is known before paying for it.
class ProbedLDLT : public Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower> {
 public:
  double factor_work() const {
    return m_nonZerosPerCol.cast<double>().squaredNorm();
  }
};

// Plan restricted to its non-negligible entries, in CSR layout.
struct SparsePlan {
  std::vector<Eigen::Index> row_start;
  std::vector<Eigen::Index> col;
  std::vector<double> mass;
  Vector row_sum;
  Vector col_sum;
};

class SinkhornEngine {
 public:
  SinkhornEngine(const Matrix& cost, const Vector& mu, const Vector& nu, const SolverConfig& config)
      : cost_(cost),
        mu_(mu),
        nu_(nu),
        config_(config),
        log_mu_(mu.array().log().matrix()),
        log_nu_(nu.array().log().matrix()),
        col_max_(cost.cols()),
        col_sum_(cost.cols()),
        scratch_(cost.cols()) {}

  Potentials run() {
    p_.f = Vector::Zero(cost_.rows());
    p_.g = Vector::Zero(cost_.cols());
    f_next_.resize(cost_.rows());

    const std::vector<double> betas = schedule();
    for (std::size_t stage = 0; stage + 1 < betas.size(); ++stage) {
      beta_ = betas[stage];
      update_columns(p_.f, p_.g);
      for (int sweep = 0; sweep < kStageSweeps; ++sweep) sweep_once();
      p_.violation = update_rows(p_.f, p_.g, f_next_);
      if (p_.violation > kStageTolerance) newton_phase(kStageTolerance, kStageNewtonSteps);
    }

    beta_ = config_.beta;
    update_columns(p_.f, p_.g);
    for (int sweep = 0;; ++sweep) {
      p_.violation = update_rows(p_.f, p_.g, f_next_);
      if (p_.violation <= config_.marginal_tolerance) return p_;
      check_budget();
      if (sweep >= kWarmSweeps) break;
      apply_row_update();
    }
    newton_phase(config_.marginal_tolerance, -1);
    return p_;
  }

 private:
  std::vector<double> schedule() const {
    std::vector<double> betas;
    if (config_.epsilon_scaling) {
      const double spread = cost_.maxCoeff() - cost_.minCoeff();
      for (double b = spread; b > config_.beta; b *= kScalingFactor) betas.push_back(b);
    }
    betas.push_back(config_.beta);
    return betas;
  }

  void check_budget() const {
    if (p_.iterations >= config_.max_iterations || !std::isfinite(p_.violation)) {
      throw ConvergenceError(p_.violation, p_.iterations);
    }
  }

  void sweep_once() {
    p_.violation = update_rows(p_.f, p_.g, f_next_);
    apply_row_update();
  }

  void apply_row_update() {
    ++p_.iterations;
    p_.f.swap(f_next_);
    update_columns(p_.f, p_.g);
  }

  // g_j <- beta log nu_j - beta log sum_i exp((f_i - C_ij) / beta)
  // Streams over the row-major cost so every column reduction runs in row order.
  void update_columns(const Vector& f, Vector& g) {
    const double inv_beta = 1.0 / beta_;
    col_max_.setConstant(-std::numeric_limits<double>::infinity());
    for (Eigen::Index i = 0; i < cost_.rows(); ++i) {
      col_max_ = col_max_.max(f[i] - cost_.row(i).transpose().array());
    }
    col_sum_.setZero();
    for (Eigen::Index i = 0; i < cost_.rows(); ++i) {
      col_sum_ +=
          ((f[i] - cost_.row(i).transpose().array() - col_max_) * inv_beta).max(kLogFloor).exp();
    }
    g = (beta_ * log_nu_.array() - col_max_ - beta_ * col_sum_.log()).matrix();
  }

  // Writes the row update into f_next and returns the L1 row-marginal
  // violation of the plan defined by (f, g).
  double update_rows(const Vector& f, const Vector& g, Vector& f_next) {
    const double inv_beta = 1.0 / beta_;
    double violation = 0.0;
    for (Eigen::Index i = 0; i < cost_.rows(); ++i) {
      scratch_ = g.array() - cost_.row(i).transpose().array();
      const double row_max = scratch_.maxCoeff();
      const double log_sum = std::log(((scratch_ - row_max) * inv_beta).max(kLogFloor).exp().sum());
      violation += std::abs(std::exp((f[i] + row_max) * inv_beta + log_sum) - mu_[i]);
      f_next[i] = beta_ * log_mu_[i] - row_max - beta_ * log_sum;
    }
    return violation;
  }

  // Gives up (nullopt) once more than `max_entries` entries survive.
  std::optional<SparsePlan> sparse_plan(std::size_t max_entries) {
    const double inv_beta = 1.0 / beta_;
    SparsePlan sp;
    sp.row_start.reserve(cost_.rows() + 1);
    sp.row_start.push_back(0);
    sp.row_sum = Vector::Zero(cost_.rows());
    sp.col_sum = Vector::Zero(cost_.cols());
    for (Eigen::Index i = 0; i < cost_.rows(); ++i) {
      scratch_ = (p_.f[i] + p_.g.array() - cost_.row(i).transpose().array()) * inv_beta;
      const double cutoff = scratch_.maxCoeff() - kSparsityCutoff;
      for (Eigen::Index j = 0; j < cost_.cols(); ++j) {
        if (scratch_[j] < cutoff || scratch_[j] < kLogFloor) continue;
        const double w = std::exp(scratch_[j]);
        sp.col.push_back(j);
        sp.mass.push_back(w);
        sp.row_sum[i] += w;
        sp.col_sum[j] += w;
      }
      sp.row_start.push_back(static_cast<Eigen::Index>(sp.col.size()));
      if (sp.mass.size() > max_entries) return std::nullopt;
    }
    return sp;
  }

  // y = H x with H = [[diag(r), P], [P^T, diag(c)]] + ridge I.
  static void hessian_apply(const SparsePlan& sp, double ridge, const Vector& x, Vector& y) {
    const Eigen::Index n = sp.row_sum.size();
    const Eigen::Index m = sp.col_sum.size();
    y.head(n) = (sp.row_sum.array() + ridge) * x.head(n).array();
    y.tail(m) = (sp.col_sum.array() + ridge) * x.tail(m).array();
    for (Eigen::Index i = 0; i < n; ++i) {
      double acc = 0.0;
      for (Eigen::Index k = sp.row_start[i]; k < sp.row_start[i + 1]; ++k) {
        acc += sp.mass[k] * x[n + sp.col[k]];
        y[n + sp.col[k]] += sp.mass[k] * x[i];
      }
      y[i] += acc;
    }
  }

  // Direct solve when cheap, otherwise at most `cg_steps` CG steps (a
  // truncated direction is still a usable search direction).
  static Vector newton_direction(const SparsePlan& sp, const Vector& rhs, int cg_steps) {
    const auto dim = static_cast<std::size_t>(rhs.size());
    if (sp.mass.size() <= kDirectDensity * dim) {
      if (auto x = direct_direction(sp, rhs)) return *x;
    }
    Vector x;
    iterative_direction(sp, rhs, cg_steps, x);
    return x;
  }

  // Sparse LDL^T, skipped when the symbolic analysis predicts heavy fill
  // (plans in high dimension look like random graphs). The plan graph may
  // split into components, each contributing a null direction; the ridge
  // pins them.
  static std::optional<Vector> direct_direction(const SparsePlan& sp, const Vector& rhs) {
    const Eigen::Index n = sp.row_sum.size();
    const Eigen::Index m = sp.col_sum.size();
    const double ridge = kRidge * std::max(sp.row_sum.maxCoeff(), sp.col_sum.maxCoeff());
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(n + m + sp.mass.size());
    for (Eigen::Index i = 0; i < n; ++i) entries.emplace_back(i, i, sp.row_sum[i] + ridge);
    for (Eigen::Index j = 0; j < m; ++j) entries.emplace_back(n + j, n + j, sp.col_sum[j] + ridge);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index k = sp.row_start[i]; k < sp.row_start[i + 1]; ++k) {
        entries.emplace_back(n + sp.col[k], i, sp.mass[k]);
      }
    }
    SparseMatrix h(n + m, n + m);
    h.setFromTriplets(entries.begin(), entries.end());
    ProbedLDLT solver;
    solver.analyzePattern(h);
    if (solver.factor_work() > kMaxFactorWork * static_cast<double>(n + m)) return std::nullopt;
    solver.factorize(h);
    if (solver.info() != Eigen::Success) return std::nullopt;
    return Vector(solver.solve(rhs));
  }

  // Jacobi-preconditioned conjugate gradients; well conditioned while the
  // plan is dense.
  // Returns whether the residual target was met within `max_steps`.
  static bool iterative_direction(const SparsePlan& sp, const Vector& rhs, int max_steps,
                                  Vector& x) {
    const Eigen::Index dim = rhs.size();
    const double ridge = kRidge * std::max(sp.row_sum.maxCoeff(), sp.col_sum.maxCoeff());
    Vector diag(dim);
    diag << sp.row_sum.array() + ridge, sp.col_sum.array() + ridge;

    x = Vector::Zero(dim);
    Vector r = rhs;
    Vector z = r.cwiseQuotient(diag);
    Vector d = z;
    Vector hd(dim);
    double rz = r.dot(z);
    const double stop = kCgTolerance * rhs.norm();
    for (int k = 0; k < max_steps; ++k) {
      if (r.norm() <= stop) return true;
      hessian_apply(sp, ridge, d, hd);
      const double alpha = rz / d.dot(hd);
      x += alpha * d;
      r -= alpha * hd;
      z = r.cwiseQuotient(diag);
      const double rz_next = r.dot(z);
      d = z + (rz_next / rz) * d;
      rz = rz_next;
    }
    return r.norm() <= stop;
  }

  // Newton steps on the dual, each followed by a column update so the column
  // marginal stays exact. A step is accepted once it lowers the row
  // violation or raises the dual; if no step size does, plain sweeps take
  // over for a while. Stops at `tol`, or after `max_steps` steps when that is
  // nonnegative; bounded runs also give up on dense plans.
  void newton_phase(double tol, int max_steps) {
    const Eigen::Index n = cost_.rows();
    const Eigen::Index m = cost_.cols();
    Vector trial_f(n), trial_g(m), scratch_f(n);
    // After a column update the plan has unit mass, so the dual objective is
    // <f, mu> + <g, nu> - beta.
    auto dual = [&](const Vector& f, const Vector& g) { return f.dot(mu_) + g.dot(nu_); };
    for (int step_count = 0; max_steps < 0 || step_count < max_steps; ++step_count) {
      const double dual_now = dual(p_.f, p_.g);
      // Bounded runs only take directly solvable steps.
      const bool bounded = max_steps >= 0;
      const auto plan = sparse_plan(bounded ? kStageNewtonDensity * static_cast<std::size_t>(n + m)
                                            : std::numeric_limits<std::size_t>::max());
      if (!plan) return;
      const SparsePlan& sp = *plan;
      Vector rhs(n + m);
      // Column residual is zero after the column update.
      rhs.head(n) = -beta_ * (sp.row_sum - mu_);
      rhs.tail(m) = -beta_ * (sp.col_sum - nu_);
      const Vector step = newton_direction(
          sp, rhs, bounded ? kStageCgSteps : static_cast<int>(std::min<Eigen::Index>(2 * (n + m), 5000)));

      // The quadratic model is only trustworthy while exponents move by a few
      // units of beta.
      const double largest = step.cwiseAbs().maxCoeff();
      double scale = largest > kMaxStep * beta_ ? kMaxStep * beta_ / largest : 1.0;
      bool accepted = false;
      for (int h = 0; h <= kMaxHalvings; ++h, scale *= 0.5) {
        trial_f = p_.f + scale * step.head(n);
        trial_g = p_.g + scale * step.tail(m);
        update_columns(trial_f, trial_g);
        const double v = update_rows(trial_f, trial_g, scratch_f);
        if (std::isfinite(v) && (v < p_.violation || dual(trial_f, trial_g) > dual_now)) {
          p_.f = trial_f;
          p_.g = trial_g;
          f_next_ = scratch_f;
          p_.violation = v;
          accepted = true;
          break;
        }
      }
      ++p_.iterations;
      if (p_.violation <= tol) return;
      check_budget();
      if (!accepted) {
        for (int k = 0; k < kFallbackSweeps; ++k) {
          p_.violation = update_rows(p_.f, p_.g, f_next_);
          if (p_.violation <= tol) return;
          check_budget();
          apply_row_update();
        }
        p_.violation = update_rows(p_.f, p_.g, f_next_);
        if (p_.violation <= tol) return;
      }
    }
  }

  const Matrix& cost_;
  const Vector& mu_;
  const Vector& nu_;
  const SolverConfig& config_;
  const Vector log_mu_;
  const Vector log_nu_;
  double beta_ = 1.0;
  Potentials p_;
  Vector f_next_;
  Eigen::ArrayXd col_max_;
  Eigen::ArrayXd col_sum_;
  Eigen::ArrayXd scratch_;
};

Potentials solve_potentials(const Matrix& cost, const Vector& mu, const Vector& nu,
                            const SolverConfig& config) {
  return SinkhornEngine(cost, mu, nu, config).run();
}

void validate_problem(const CostMatrix& cost, const Vector& mu, const Vector& nu) {
  if (cost.rows() < 1 || cost.cols() < 1) throw InvalidInput("cost matrix must be nonempty");
  require_finite(cost.values, "cost matrix");
  require_probability_vector(mu, cost.rows(), "row marginal");
  require_probability_vector(nu, cost.cols(), "column marginal");
}

void require_positive(const Vector& w, const std::string& what) {
  if ((w.array() <= 0.0).any()) {
    throw InvalidInput(what + " must be strictly positive for the entropic solver");
  }
}

}  // namespace

void SolverConfig::validate() const {
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw InvalidInput("beta must be positive and finite for Sinkhorn (got " +
                       std::to_string(beta) + ")");
  }
  if (!(marginal_tolerance > 0.0)) throw InvalidInput("marginal_tolerance must be positive");
  if (max_iterations < 1) throw InvalidInput("max_iterations must be at least 1");
  if (!log_domain) throw InvalidInput("only log-domain Sinkhorn is supported");
}

ConvergenceError::ConvergenceError(double violation, int iterations)
    : std::runtime_error([&] {
        std::ostringstream msg;
        msg << "Sinkhorn did not converge after " << iterations
            << " iterations; last L1 marginal violation " << violation;
        return msg.str();
      }()),
      violation_(violation),
      iterations_(iterations) {}

void require_probability_vector(const Vector& w, Eigen::Index n, const std::string& what) {
  if (w.size() != n) {
    throw InvalidInput(what + " has length " + std::to_string(w.size()) + ", expected " +
                       std::to_string(n));
  }
  if (!w.allFinite() || (w.array() < 0.0).any()) {
    throw InvalidInput(what + " must be finite and nonnegative");
  }
  if (std::abs(w.sum() - 1.0) > 1e-9) throw InvalidInput(what + " must sum to one");
}

double TransportPlan::log_mass(const CostMatrix& cost, Eigen::Index i, Eigen::Index j) const {
  if (beta > 0.0) return (row_potential[i] + col_potential[j] - cost.values(i, j)) / beta;
  return std::log(coupling(i, j));
}

namespace {

// Walks the plan row by row. `sink` receives each row of gamma.
template <typename RowSink>
EntropicValue summarize(const Matrix& cost, const Vector& mu, const Vector& nu, double beta,
                        const Potentials& p, RowSink&& sink) {
  const double inv_beta = 1.0 / beta;
  const Eigen::ArrayXd log_nu = nu.array().log();
  Eigen::ArrayXd log_gamma(cost.cols()), gamma(cost.cols());
  double transport = 0.0;
  double kl = 0.0;
  for (Eigen::Index i = 0; i < cost.rows(); ++i) {
    log_gamma = (p.f[i] + p.g.array() - cost.row(i).transpose().array()) * inv_beta;
    gamma = log_gamma.exp();
    transport += (gamma * cost.row(i).transpose().array()).sum();
    kl += (gamma * (log_gamma - std::log(mu[i]) - log_nu)).sum();
    sink(i, gamma);
  }
  EntropicValue v;
  v.transport_cost = transport;
  // KL between two probability vectors; clamp rounding below zero.
  v.entropy_term = std::max(0.0, beta * kl);
  v.objective = v.transport_cost + v.entropy_term;
  v.marginal_violation = p.violation;
  v.iterations = p.iterations;
  return v;
}

}  // namespace

TransportPlan sinkhorn(const CostMatrix& cost, const Vector& mu, const Vector& nu,
                       const SolverConfig& config) {
  config.validate();
  validate_problem(cost, mu, nu);
  require_positive(mu, "row marginal");
  require_positive(nu, "column marginal");

  Potentials p = solve_potentials(cost.values, mu, nu, config);
  TransportPlan plan;
  plan.coupling.resize(cost.rows(), cost.cols());
  const EntropicValue v =
      summarize(cost.values, mu, nu, config.beta, p, [&](Eigen::Index i, const Eigen::ArrayXd& row) {
        plan.coupling.row(i) = row.transpose().matrix();
      });
  plan.row_marginal = mu;
  plan.col_marginal = nu;
  plan.beta = config.beta;
  plan.transport_cost = v.transport_cost;
  plan.entropy_term = v.entropy_term;
  plan.objective = v.objective;
  plan.marginal_violation = v.marginal_violation;
  plan.iterations = v.iterations;
  plan.row_potential = std::move(p.f);
  plan.col_potential = std::move(p.g);
  return plan;
}

EntropicValue sinkhorn_value(const CostMatrix& cost, const Vector& mu, const Vector& nu,
                             const SolverConfig& config) {
  config.validate();
  validate_problem(cost, mu, nu);
  require_positive(mu, "row marginal");
  require_positive(nu, "column marginal");
  const Potentials p = solve_potentials(cost.values, mu, nu, config);
  return summarize(cost.values, mu, nu, config.beta, p, [](Eigen::Index, const Eigen::ArrayXd&) {});
}

TransportPlan solve_transport(const CostMatrix& cost, const Vector& mu, const Vector& nu,
                              const SolverConfig& config) {
  if (config.beta == 0.0) {
    if (cost.rows() * cost.cols() > kExactOracleMaxCells) {
      throw InvalidInput("beta = 0 is only supported for instances with at most " +
                         std::to_string(kExactOracleMaxCells) + " cost entries");
    }
    return exact_transport(cost, mu, nu);
  }
  return sinkhorn(cost, mu, nu, config);
}

}  // namespace datashifts
