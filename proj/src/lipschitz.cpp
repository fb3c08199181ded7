#include "datashifts/lipschitz.hpp"

#include "datashifts/seeding.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <random>

namespace datashifts {

void LossSpec::validate() const {
  switch (kind) {
    case Kind::AbsoluteError:
      return;
    case Kind::SquaredErrorBounded:
      if (!(parameter > 0.0) || !std::isfinite(parameter)) {
        throw InvalidInput("squared-error bound M must be positive and finite");
      }
      return;
    case Kind::CrossEntropyClamped:
      if (!(parameter > 0.0 && parameter < 0.5)) {
        throw InvalidInput("cross-entropy clamp a must lie in (0, 0.5)");
      }
      return;
  }
}

std::string LossSpec::name() const {
  switch (kind) {
    case Kind::AbsoluteError:
      return "absolute";
    case Kind::SquaredErrorBounded:
      return "squared";
    case Kind::CrossEntropyClamped:
      return "cross-entropy";
  }
  return "";
}

double LossSpec::operator()(double y, double y_hat) const {
  switch (kind) {
    case Kind::AbsoluteError:
      return std::abs(y - y_hat);
    case Kind::SquaredErrorBounded:
      return (y - y_hat) * (y - y_hat);
    case Kind::CrossEntropyClamped: {
      const double p = std::clamp(y_hat, parameter, 1.0 - parameter);
      return -y * std::log(p) - (1.0 - y) * std::log1p(-p);
    }
  }
  return 0.0;
}

void LipschitzSpec::validate() const {
  for (double v : {l_h, l_loss_label, l_loss_output}) {
    if (!std::isfinite(v) || v < 0.0) {
      throw InvalidInput("Lipschitz constants must be finite and nonnegative");
    }
  }
}

std::pair<double, double> loss_lipschitz(const LossSpec& loss) {
  loss.validate();
  switch (loss.kind) {
    case LossSpec::Kind::AbsoluteError:
      return {1.0, 1.0};
    case LossSpec::Kind::SquaredErrorBounded:
      return {2.0 * loss.parameter, 2.0 * loss.parameter};
    case LossSpec::Kind::CrossEntropyClamped: {
      const double a = loss.parameter;
      return {std::log((1.0 - a) / a), 1.0 / a};
    }
  }
  return {0.0, 0.0};
}

bool verify_separate_lipschitz(const LossSpec& loss, std::int64_t pair_samples,
                               std::uint64_t seed, double label_constant,
                               double output_constant, double range) {
  loss.validate();
  double y_lo = -range, y_hi = range, o_lo = -range, o_hi = range;
  if (loss.kind == LossSpec::Kind::SquaredErrorBounded) {
    y_lo = o_lo = 0.0;
    y_hi = o_hi = loss.parameter;
  } else if (loss.kind == LossSpec::Kind::CrossEntropyClamped) {
    y_lo = 0.0;
    y_hi = 1.0;
    o_lo = loss.parameter;
    o_hi = 1.0 - loss.parameter;
  }

  Rng rng(derive_seed(seed, 0));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto pick = [&](double lo, double hi) {
    // Endpoints get extra weight; the steepest slopes sit there.
    const double u = unit(rng);
    if (u < 0.05) return lo;
    if (u < 0.10) return hi;
    return lo + (hi - lo) * unit(rng);
  };
  auto nudge = [&](double v, double lo, double hi) {
    const double step = (hi - lo) * std::pow(10.0, -6.0 * unit(rng));
    return std::clamp(v + (unit(rng) < 0.5 ? -step : step), lo, hi);
  };

  for (std::int64_t k = 0; k < pair_samples; ++k) {
    const double y1 = pick(y_lo, y_hi);
    const double o1 = pick(o_lo, o_hi);
    double y2, o2;
    if (k % 2 == 0) {
      y2 = pick(y_lo, y_hi);
      o2 = pick(o_lo, o_hi);
    } else {
      y2 = unit(rng) < 0.5 ? y1 : nudge(y1, y_lo, y_hi);
      o2 = unit(rng) < 0.5 ? o1 : nudge(o1, o_lo, o_hi);
    }
    const double lhs = std::abs(loss(y1, o1) - loss(y2, o2));
    const double rhs = label_constant * std::abs(y1 - y2) + output_constant * std::abs(o1 - o2);
    if (lhs > rhs + 1e-9) return false;
  }
  return true;
}

bool verify_separate_lipschitz(const LossSpec& loss, std::int64_t pair_samples,
                               std::uint64_t seed) {
  const auto [l, lp] = loss_lipschitz(loss);
  return verify_separate_lipschitz(loss, pair_samples, seed, l, lp);
}

double layered_hypothesis_lipschitz(const std::vector<double>& weight_spectral_norms,
                                    const std::vector<double>& activation_constants) {
  const std::size_t layers = weight_spectral_norms.size();
  if (layers == 0) throw InvalidInput("at least one layer norm is required");
  if (activation_constants.size() + 1 != layers && activation_constants.size() != layers) {
    throw InvalidInput("expected " + std::to_string(layers - 1) + " or " +
                       std::to_string(layers) + " activation constants, got " +
                       std::to_string(activation_constants.size()));
  }
  double product = 1.0;
  for (double v : weight_spectral_norms) {
    if (!std::isfinite(v) || v < 0.0) throw InvalidInput("layer norms must be finite and >= 0");
    product *= v;
  }
  for (double v : activation_constants) {
    if (!std::isfinite(v) || v < 0.0) {
      throw InvalidInput("activation constants must be finite and >= 0");
    }
    product *= v;
  }
  return product;
}

double spectral_norm(const Matrix& weights) {
  if (weights.size() == 0) throw InvalidInput("weight matrix is empty");
  require_finite(weights, "weight matrix");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(weights);
  return svd.singularValues()(0);
}

}  // namespace datashifts
