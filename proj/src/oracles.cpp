#include "datashifts/oracles.hpp"

#include "datashifts/sinkhorn.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

namespace datashifts {

namespace {

// Standard-noise quantile at u (complement uc = 1 - u, passed separately so
// the tails keep full precision).
double noise_quantile(const ConditionalLaw& law, double u, double uc) {
  switch (law.noise) {
    case ConditionalLaw::Noise::None:
      return 0.0;
    case ConditionalLaw::Noise::Gaussian: {
      // The integrator may land exactly on an endpoint; the mass cut off by
      // clamping is below 1e-300.
      constexpr double tiny = std::numeric_limits<double>::min();
      u = std::max(u, tiny);
      uc = std::max(uc, tiny);
      static const boost::math::normal standard;
      return u < 0.5 ? law.scale * boost::math::quantile(standard, u)
                     : -law.scale * boost::math::quantile(standard, uc);
    }
    case ConditionalLaw::Noise::Uniform:
      return u < 0.5 ? law.scale * (2.0 * u - 1.0) : law.scale * (1.0 - 2.0 * uc);
  }
  return 0.0;
}

void require_weights(const Matrix& x_points, const Vector& weights) {
  if (x_points.rows() < 1) throw InvalidInput("oracle needs at least one covariate point");
  require_finite(x_points, "covariate points");
  require_probability_vector(weights, x_points.rows(), "oracle weights");
}

double scalar_mean(const ConditionalLaw& law, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  const Vector m = law.mean(x);
  if (m.size() != 1) throw InvalidInput("conditional mean must return one value per point");
  return m[0];
}

}  // namespace

ConditionalLaw ConditionalLaw::deterministic(MeanFunction f, Eigen::Index label_dimension) {
  return {std::move(f), label_dimension, Noise::None, 0.0};
}

ConditionalLaw ConditionalLaw::gaussian(MeanFunction f, double sigma,
                                        Eigen::Index label_dimension) {
  return {std::move(f), label_dimension, Noise::Gaussian, sigma};
}

ConditionalLaw ConditionalLaw::uniform(MeanFunction f, double half_width,
                                       Eigen::Index label_dimension) {
  return {std::move(f), label_dimension, Noise::Uniform, half_width};
}

void ConditionalLaw::validate() const {
  if (!mean) throw InvalidInput("conditional law has no mean function");
  if (label_dimension < 1) throw InvalidInput("label dimension must be at least 1");
  if (!std::isfinite(scale) || scale < 0.0) throw InvalidInput("noise scale must be finite and >= 0");
  if (noise != Noise::None && scale == 0.0) {
    throw InvalidInput("noisy conditional law needs a positive scale");
  }
}

Matrix ConditionalLaw::means(const Matrix& x) const {
  validate();
  Matrix out(x.rows(), label_dimension);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Vector m = mean(x.row(i));
    if (m.size() != label_dimension) {
      throw InvalidInput("conditional mean returned " + std::to_string(m.size()) +
                         " values, expected " + std::to_string(label_dimension));
    }
    out.row(i) = m.transpose();
  }
  return out;
}

double conditional_w1(const ConditionalLaw& source, const ConditionalLaw& target,
                      const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  source.validate();
  target.validate();
  if (source.label_dimension != 1 || target.label_dimension != 1) {
    throw InvalidInput("conditional_w1 handles scalar labels only");
  }
  const double shift = scalar_mean(source, x) - scalar_mean(target, x);
  if (source.noise == target.noise && source.scale == target.scale) return std::abs(shift);

  auto diff = [&](double u, double uc) {
    return shift + noise_quantile(source, u, uc) - noise_quantile(target, u, uc);
  };
  // Bracket the sign changes of the quantile difference on a grid that is
  // dense in the Gaussian tails, then integrate each sign-constant piece.
  const boost::math::normal standard;
  std::vector<double> grid;
  for (int k = -170; k <= 170; ++k) grid.push_back(boost::math::cdf(standard, 0.05 * k));
  std::vector<double> cuts{0.0};
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    const double a = grid[k], b = grid[k + 1];
    const double fa = diff(a, 1.0 - a), fb = diff(b, 1.0 - b);
    if (fa == 0.0) {
      if (a > cuts.back()) cuts.push_back(a);
    } else if (fa * fb < 0.0) {
      boost::math::tools::eps_tolerance<double> tol(50);
      std::uintmax_t iters = 200;
      const auto root = boost::math::tools::toms748_solve(
          [&](double u) { return diff(u, 1.0 - u); }, a, b, fa, fb, tol, iters);
      cuts.push_back(0.5 * (root.first + root.second));
    }
  }
  cuts.push_back(1.0);

  boost::math::quadrature::tanh_sinh<double> integrator;
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double a = cuts[k], b = cuts[k + 1];
    if (b <= a) continue;
    const double mid = 0.5 * (a + b);
    const double sign = diff(mid, 1.0 - mid) < 0.0 ? -1.0 : 1.0;
    total += integrator.integrate(
        [&](double u, double to_end) {
          // to_end is b - u on the upper half, which keeps 1 - u exact near 1.
          const double uc = (b == 1.0 && u > mid) ? to_end : 1.0 - u;
          return sign * diff(u, uc);
        },
        a, b);
  }
  return total;
}

double total_point_shift_oracle(const ConditionalLaw& source, const ConditionalLaw& target,
                                const Matrix& x_points, const Vector& weights) {
  source.validate();
  target.validate();
  require_weights(x_points, weights);
  if (source.label_dimension != target.label_dimension) {
    throw InvalidInput("source and target conditional laws have different label dimensions");
  }
  const bool translates = source.noise == target.noise && source.scale == target.scale;
  if (!translates && source.label_dimension != 1) {
    throw InvalidInput(
        "point shift oracle supports differing noise laws for scalar labels only");
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < x_points.rows(); ++i) {
    if (weights[i] == 0.0) continue;
    double w1;
    if (translates) {
      w1 = (source.mean(x_points.row(i)) - target.mean(x_points.row(i))).norm();
    } else {
      w1 = conditional_w1(source, target, x_points.row(i));
    }
    total += weights[i] * w1;
  }
  return total;
}

double irreducible_error_oracle(const ConditionalLaw& law, const Matrix& x_points,
                                const Vector& weights) {
  law.validate();
  require_weights(x_points, weights);
  const double k = static_cast<double>(law.label_dimension);
  // The noise does not depend on x, so the weighted average is the per-point
  // variance.
  switch (law.noise) {
    case ConditionalLaw::Noise::None:
      return 0.0;
    case ConditionalLaw::Noise::Gaussian:
      return k * law.scale * law.scale;
    case ConditionalLaw::Noise::Uniform:
      return k * law.scale * law.scale / 3.0;
  }
  return 0.0;
}

}  // namespace datashifts
