#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace datashifts {

/// Row-major dense matrix: one row per observation.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Raised when a caller hands us data or parameters that violate a precondition.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Domain { Source, Target };

/// Covariates plus optional labels for one domain.
///
/// Construction validates shape and finiteness; the object is immutable
/// afterwards, so it can be shared freely between threads.
class LabeledSample {
 public:
  LabeledSample(Matrix covariates, std::optional<Matrix> labels = std::nullopt,
                Domain domain = Domain::Source);

  const Matrix& covariates() const { return covariates_; }
  const std::optional<Matrix>& labels() const { return labels_; }
  bool has_labels() const { return labels_.has_value(); }
  Domain domain() const { return domain_; }

  Eigen::Index size() const { return covariates_.rows(); }
  Eigen::Index dimension() const { return covariates_.cols(); }
  Eigen::Index label_dimension() const { return labels_ ? labels_->cols() : 0; }

  /// Rows picked by `indices`, in that order. Labels follow the covariates.
  LabeledSample subset(const std::vector<Eigen::Index>& indices) const;

 private:
  Matrix covariates_;
  std::optional<Matrix> labels_;
  Domain domain_;
};

/// Discrete probability measure supported on the rows of `points`.
struct EmpiricalMeasure {
  Matrix points;
  Vector weights;
};

EmpiricalMeasure empirical_measure(const LabeledSample& sample);

/// Distance on R^d. Minkowski with p = 2 coincides with Euclidean.
struct Metric {
  enum class Kind { Euclidean, Minkowski };
  Kind kind = Kind::Euclidean;
  double p = 2.0;

  static Metric euclidean() { return {}; }
  static Metric minkowski(double p);

  double distance(const double* a, const double* b, Eigen::Index dim) const;
  std::string name() const;
};

/// Metric used for labels: Euclidean (absolute difference for scalar labels).
inline Metric default_label_metric() { return Metric::euclidean(); }

struct CostMatrix {
  Matrix values;
  Metric metric;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
};

/// Pairwise distances between the rows of `a` and the rows of `b`.
CostMatrix cost_matrix(const Matrix& a, const Matrix& b, const Metric& metric = Metric::euclidean());

/// Throws InvalidInput unless every entry is finite.
void require_finite(const Matrix& m, const std::string& what);

}  // namespace datashifts
