#pragma once

#include <cmath>
#include <complex>
#include <random>

#include "pointerlab/pointerlab.hpp"

namespace testing_support {

using namespace pointerlab;

/// Desk-scale grid: n points over `widths` fiducial widths.
inline Grid fiducial_grid(std::size_t n = 256, double widths = 20.0, double D = 1.0, double m = 1.0) {
  return Grid(n, widths * equilibrium_width(D, m, fiducial_alpha(D, m)));
}

/// Random normalized Gaussian-enveloped state with a smooth random phase.
inline WaveFunction random_smooth_state(const Grid& g, std::mt19937_64& rng, double width = 1.0) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double c1 = u(rng), c2 = u(rng), c3 = u(rng), x0 = 0.5 * u(rng);
  return WaveFunction::from_function(g, [&](double x) {
                           const double y = (x - x0) / width;
                           return std::exp(-0.5 * y * y) * (1.0 + 0.3 * c1 * y) *
                                  std::exp(kI * (c2 * y + 0.2 * c3 * y * y));
                         })
      .normalized();
}

}  // namespace testing_support
