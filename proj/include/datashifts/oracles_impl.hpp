#pragma once

#include <random>

namespace datashifts {

template <typename Rng>
Matrix ConditionalLaw::sample(const Matrix& x, Rng& rng) const {
  Matrix y = means(x);
  if (noise == Noise::Gaussian) {
    std::normal_distribution<double> draw(0.0, scale);
    for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] += draw(rng);
  } else if (noise == Noise::Uniform) {
    std::uniform_real_distribution<double> draw(-scale, scale);
    for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] += draw(rng);
  }
  return y;
}

}  // namespace datashifts
