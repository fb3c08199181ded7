#pragma once

#include "datashifts/core.hpp"

#include <functional>

namespace datashifts {

/// Known conditional law Y | X = x for synthetic tasks:
///   y = mean(x) + noise, with independent noise per label coordinate.
struct ConditionalLaw {
  enum class Noise { None, Gaussian, Uniform };

  using MeanFunction = std::function<Vector(const Eigen::Ref<const Eigen::RowVectorXd>&)>;

  MeanFunction mean;
  Eigen::Index label_dimension = 1;
  Noise noise = Noise::None;
  /// Standard deviation for Gaussian noise, half-width for Uniform noise.
  double scale = 0.0;

  static ConditionalLaw deterministic(MeanFunction f, Eigen::Index label_dimension = 1);
  static ConditionalLaw gaussian(MeanFunction f, double sigma, Eigen::Index label_dimension = 1);
  static ConditionalLaw uniform(MeanFunction f, double half_width,
                                Eigen::Index label_dimension = 1);

  /// Draws labels for every row of `x`.
  template <typename Rng>
  Matrix sample(const Matrix& x, Rng& rng) const;

  /// Evaluates the mean for every row of `x`.
  Matrix means(const Matrix& x) const;

  void validate() const;
};

/// Weighted average over `x_points` of W1(Y_S | x, Y_T | x) with Euclidean
/// label distance.
///
/// Laws in the same noise family with the same scale are translates of each
/// other, so W1 is the distance between means. Otherwise only scalar labels
/// are supported, via the quantile integral of |F_S^{-1} - F_T^{-1}|.
double total_point_shift_oracle(const ConditionalLaw& source, const ConditionalLaw& target,
                                const Matrix& x_points, const Vector& weights);

/// W1 between two scalar conditional laws at a single point.
double conditional_w1(const ConditionalLaw& source, const ConditionalLaw& target,
                      const Eigen::Ref<const Eigen::RowVectorXd>& x);

/// Weighted average of E ||y - E[y | x]||^2, the least achievable squared
/// error under this law.
double irreducible_error_oracle(const ConditionalLaw& law, const Matrix& x_points,
                                const Vector& weights);

}  // namespace datashifts

#include "datashifts/oracles_impl.hpp"
