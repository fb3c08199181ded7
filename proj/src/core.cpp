#include "datashifts/core.hpp"

#include <cmath>
#include <sstream>

namespace datashifts {

void require_finite(const Matrix& m, const std::string& what) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (!std::isfinite(m(i, j))) {
        std::ostringstream msg;
        msg << what << ": non-finite entry at row " << i << ", column " << j;
        throw InvalidInput(msg.str());
      }
    }
  }
}

LabeledSample::LabeledSample(Matrix covariates, std::optional<Matrix> labels, Domain domain)
    : covariates_(std::move(covariates)), labels_(std::move(labels)), domain_(domain) {
  if (covariates_.rows() < 1) throw InvalidInput("sample must contain at least one row");
  if (covariates_.cols() < 1) throw InvalidInput("sample must have at least one covariate column");
  require_finite(covariates_, "covariates");
  if (labels_) {
    if (labels_->rows() != covariates_.rows()) {
      throw InvalidInput("label row count " + std::to_string(labels_->rows()) +
                         " does not match covariate row count " +
                         std::to_string(covariates_.rows()));
    }
    if (labels_->cols() < 1) throw InvalidInput("labels must have at least one column");
    require_finite(*labels_, "labels");
  }
}

LabeledSample LabeledSample::subset(const std::vector<Eigen::Index>& indices) const {
  Matrix x(static_cast<Eigen::Index>(indices.size()), dimension());
  std::optional<Matrix> y;
  if (labels_) y = Matrix(x.rows(), labels_->cols());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const auto r = static_cast<Eigen::Index>(k);
    if (indices[k] < 0 || indices[k] >= size()) {
      throw InvalidInput("subset index " + std::to_string(indices[k]) + " out of range");
    }
    x.row(r) = covariates_.row(indices[k]);
    if (y) y->row(r) = labels_->row(indices[k]);
  }
  return LabeledSample(std::move(x), std::move(y), domain_);
}

EmpiricalMeasure empirical_measure(const LabeledSample& sample) {
  const auto n = sample.size();
  return {sample.covariates(), Vector::Constant(n, 1.0 / static_cast<double>(n))};
}

Metric Metric::minkowski(double p) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw InvalidInput("Minkowski order must be finite and >= 1");
  return {Kind::Minkowski, p};
}

double Metric::distance(const double* a, const double* b, Eigen::Index dim) const {
  if (kind == Kind::Euclidean) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < dim; ++k) {
      const double d = a[k] - b[k];
      s += d * d;
    }
    return std::sqrt(s);
  }
  if (p == 1.0) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < dim; ++k) s += std::abs(a[k] - b[k]);
    return s;
  }
  double s = 0.0;
  for (Eigen::Index k = 0; k < dim; ++k) s += std::pow(std::abs(a[k] - b[k]), p);
  return std::pow(s, 1.0 / p);
}

std::string Metric::name() const {
  if (kind == Kind::Euclidean) return "euclidean";
  std::ostringstream s;
  s << "minkowski(" << p << ")";
  return s.str();
}

CostMatrix cost_matrix(const Matrix& a, const Matrix& b, const Metric& metric) {
  if (a.cols() != b.cols()) {
    throw InvalidInput("dimension mismatch: " + std::to_string(a.cols()) + " vs " +
                       std::to_string(b.cols()) + " columns");
  }
  require_finite(a, "cost_matrix lhs");
  require_finite(b, "cost_matrix rhs");

  CostMatrix out{Matrix(a.rows(), b.rows()), metric};
  if (metric.kind == Metric::Kind::Euclidean) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      out.values.row(i) = (b.rowwise() - a.row(i)).rowwise().norm().transpose();
    }
    return out;
  }
  const Eigen::Index dim = a.cols();
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const double* ai = a.row(i).data();
    double* out_row = out.values.row(i).data();
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      out_row[j] = metric.distance(ai, b.row(j).data(), dim);
    }
  }
  return out;
}

}  // namespace datashifts
