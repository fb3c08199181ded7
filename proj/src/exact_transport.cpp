// Transportation simplex (MODI / stepping-stone) for small dense instances.
// Used as the beta = 0 reference for the entropic solver.

#include "datashifts/sinkhorn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace datashifts {

namespace {

struct BasicCell {
  Eigen::Index row;
  Eigen::Index col;
  double flow;
};

class TransportationSimplex {
 public:
  TransportationSimplex(const Matrix& cost, const Vector& supply, const Vector& demand)
      : cost_(cost), n_(cost.rows()), m_(cost.cols()), in_basis_(n_ * m_, -1) {
    north_west_corner(supply, demand);
  }

  void solve() {
    const double scale = std::max(1.0, cost_.cwiseAbs().maxCoeff());
    const double tol = 1e-12 * scale;
    const long max_pivots = 50 * static_cast<long>(n_ * m_) + 1000;
    int degenerate_streak = 0;
    for (long pivot = 0; pivot < max_pivots; ++pivot) {
      compute_potentials();
      // Dantzig pricing; after a long run of degenerate pivots switch to the
      // first improving cell (Bland) to rule out cycling.
      const bool bland = degenerate_streak > static_cast<int>(n_ + m_);
      Eigen::Index enter_row = -1, enter_col = -1;
      double best = -tol;
      for (Eigen::Index i = 0; i < n_ && !(bland && enter_row >= 0); ++i) {
        for (Eigen::Index j = 0; j < m_; ++j) {
          if (in_basis_[i * m_ + j] >= 0) continue;
          const double reduced = cost_(i, j) - u_[i] - v_[j];
          if (reduced < best) {
            best = reduced;
            enter_row = i;
            enter_col = j;
            if (bland) break;
          }
        }
      }
      if (enter_row < 0) return;
      const double theta = pivot_on(enter_row, enter_col);
      degenerate_streak = theta > 0.0 ? 0 : degenerate_streak + 1;
    }
    throw std::runtime_error("transportation simplex exceeded its pivot budget");
  }

  Matrix plan() const {
    Matrix out = Matrix::Zero(n_, m_);
    for (const auto& c : basis_) out(c.row, c.col) += std::max(0.0, c.flow);
    return out;
  }

 private:
  void add_cell(Eigen::Index i, Eigen::Index j, double flow) {
    in_basis_[i * m_ + j] = static_cast<int>(basis_.size());
    basis_.push_back({i, j, flow});
  }

  // Yields exactly n + m - 1 basic cells (zero flows kept for degeneracy).
  void north_west_corner(const Vector& supply, const Vector& demand) {
    std::vector<double> a(supply.data(), supply.data() + n_);
    std::vector<double> b(demand.data(), demand.data() + m_);
    Eigen::Index i = 0, j = 0;
    while (true) {
      const double q = std::min(a[i], b[j]);
      add_cell(i, j, q);
      a[i] -= q;
      b[j] -= q;
      if (i == n_ - 1 && j == m_ - 1) break;
      const bool row_done = a[i] <= b[j];
      if ((row_done && i < n_ - 1) || j == m_ - 1) {
        ++i;
      } else {
        ++j;
      }
    }
  }

  // Node ids: rows 0..n-1, columns n..n+m-1.
  void build_adjacency() {
    adjacency_.assign(n_ + m_, {});
    for (std::size_t k = 0; k < basis_.size(); ++k) {
      adjacency_[basis_[k].row].push_back(static_cast<int>(k));
      adjacency_[n_ + basis_[k].col].push_back(static_cast<int>(k));
    }
  }

  void compute_potentials() {
    build_adjacency();
    u_.assign(n_, 0.0);
    v_.assign(m_, 0.0);
    std::vector<char> seen(n_ + m_, 0);
    std::vector<Eigen::Index> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      const Eigen::Index node = stack.back();
      stack.pop_back();
      for (int k : adjacency_[node]) {
        const auto& c = basis_[k];
        const Eigen::Index other = node < n_ ? n_ + c.col : c.row;
        if (seen[other]) continue;
        seen[other] = 1;
        if (node < n_) {
          v_[c.col] = cost_(c.row, c.col) - u_[c.row];
        } else {
          u_[c.row] = cost_(c.row, c.col) - v_[c.col];
        }
        stack.push_back(other);
      }
    }
  }

  // Tree path of basic-cell indices from row node `r` to column node `c`.
  std::vector<int> tree_path(Eigen::Index r, Eigen::Index c) const {
    const Eigen::Index target = n_ + c;
    std::vector<int> via(n_ + m_, -1);
    std::vector<Eigen::Index> parent(n_ + m_, -1);
    std::vector<char> seen(n_ + m_, 0);
    std::vector<Eigen::Index> stack{r};
    seen[r] = 1;
    while (!stack.empty()) {
      const Eigen::Index node = stack.back();
      stack.pop_back();
      if (node == target) break;
      for (int k : adjacency_[node]) {
        const auto& cell = basis_[k];
        const Eigen::Index other = node < n_ ? n_ + cell.col : cell.row;
        if (seen[other]) continue;
        seen[other] = 1;
        parent[other] = node;
        via[other] = k;
        stack.push_back(other);
      }
    }
    std::vector<int> path;
    for (Eigen::Index node = target; node != r; node = parent[node]) path.push_back(via[node]);
    std::reverse(path.begin(), path.end());
    return path;
  }

  double pivot_on(Eigen::Index enter_row, Eigen::Index enter_col) {
    // Path alternates starting at the entering row; odd positions (1st, 3rd,
    // ...) lose flow.
    const std::vector<int> path = tree_path(enter_row, enter_col);
    double theta = std::numeric_limits<double>::infinity();
    int leaving = -1;
    for (std::size_t k = 0; k < path.size(); k += 2) {
      const auto& c = basis_[path[k]];
      const double flow = c.flow;
      const bool better = flow < theta ||
                          (flow == theta && leaving >= 0 &&
                           c.row * m_ + c.col < basis_[leaving].row * m_ + basis_[leaving].col);
      if (better) {
        theta = flow;
        leaving = path[k];
      }
    }
    theta = std::max(0.0, theta);
    for (std::size_t k = 0; k < path.size(); ++k) {
      basis_[path[k]].flow += (k % 2 == 0) ? -theta : theta;
    }
    auto& out = basis_[leaving];
    in_basis_[out.row * m_ + out.col] = -1;
    out = {enter_row, enter_col, theta};
    in_basis_[enter_row * m_ + enter_col] = leaving;
    return theta;
  }

  const Matrix& cost_;
  Eigen::Index n_;
  Eigen::Index m_;
  std::vector<BasicCell> basis_;
  std::vector<int> in_basis_;
  std::vector<std::vector<int>> adjacency_;
  std::vector<double> u_;
  std::vector<double> v_;
};

}  // namespace

TransportPlan exact_transport(const CostMatrix& cost, const Vector& mu, const Vector& nu) {
  if (cost.rows() < 1 || cost.cols() < 1) throw InvalidInput("cost matrix must be nonempty");
  if (cost.rows() * cost.cols() > kExactOracleMaxCells) {
    throw InvalidInput("instance has " + std::to_string(cost.rows() * cost.cols()) +
                       " cost entries; the exact solver accepts at most " +
                       std::to_string(kExactOracleMaxCells));
  }
  require_finite(cost.values, "cost matrix");
  require_probability_vector(mu, cost.rows(), "row marginal");
  require_probability_vector(nu, cost.cols(), "column marginal");

  TransportationSimplex simplex(cost.values, mu, nu);
  simplex.solve();

  TransportPlan plan;
  plan.coupling = simplex.plan();
  plan.row_marginal = mu;
  plan.col_marginal = nu;
  plan.beta = 0.0;
  plan.transport_cost = (plan.coupling.array() * cost.values.array()).sum();
  plan.entropy_term = 0.0;
  plan.objective = plan.transport_cost;
  plan.marginal_violation = (plan.coupling.rowwise().sum() - mu).cwiseAbs().sum() +
                            (plan.coupling.colwise().sum().transpose() - nu).cwiseAbs().sum();
  return plan;
}

double exact_w1(const CostMatrix& cost, const Vector& mu, const Vector& nu) {
  return exact_transport(cost, mu, nu).objective;
}

}  // namespace datashifts
