#pragma once

// Gaussian pointer states
//   psi_G(x) = (a_R / 2 pi)^{1/4} exp(-a (x - xb)^2 / 4 + i pb (x - xb)),  a = a_R + i a_I,
// and their second-moment (correlation) matrices.

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

#include "pointerlab/numerics.hpp"

namespace pointerlab {

/// Complex Gaussian width parameter, units of inverse length squared.
class AlphaParam {
public:
  AlphaParam(double re, double im) : re_(re), im_(im) {
    if (!(re > 0.0) || !std::isfinite(re) || !std::isfinite(im))
      throw std::invalid_argument("alpha: real part must be > 0 for a normalizable state");
  }

  double re() const noexcept { return re_; }
  double im() const noexcept { return im_; }
  double abs2() const noexcept { return re_ * re_ + im_ * im_; }
  cplx value() const noexcept { return {re_, im_}; }

  AlphaParam scaled(double s) const { return {re_ * s, im_ * s}; }

private:
  double re_;
  double im_;
};

/// Phase-space center (x_bar, p_bar).
struct PhasePoint {
  double x_bar = 0.0;
  double p_bar = 0.0;
};

namespace detail {

inline void require_positive_model(double D, double m) {
  if (!(D > 0.0) || !(m > 0.0)) throw std::invalid_argument("D and m must be > 0");
}

inline WaveFunction gaussian_unchecked(const Grid& grid, const AlphaParam& alpha, const PhasePoint& gamma) {
  const double pref = std::pow(alpha.re() / (2.0 * std::numbers::pi), 0.25);
  const cplx a = alpha.value();
  return WaveFunction::from_function(grid, [&](double x) {
    const double dx = x - gamma.x_bar;
    return pref * std::exp(-a * dx * dx / 4.0 + kI * gamma.p_bar * dx);
  });
}

}  // namespace detail

/// Stationary parameter of the Hilbert-Schmidt optimal drift: (1 - i) sqrt(2 D m).
inline AlphaParam fiducial_alpha(double D, double m) {
  detail::require_positive_model(D, m);
  const double s = std::sqrt(2.0 * D * m);
  return {s, -s};
}

/// Predictability-sieve optimum: 3^{1/4} (sqrt3 - i) sqrt(D m).
inline AlphaParam sieve_alpha(double D, double m) {
  detail::require_positive_model(D, m);
  const double s = std::pow(3.0, 0.25) * std::sqrt(D * m);
  return {std::sqrt(3.0) * s, -s};
}

/// Exact width sigma = a_R^{-1/2}.
inline double equilibrium_width(double D, double m, const AlphaParam& alpha) {
  detail::require_positive_model(D, m);
  return 1.0 / std::sqrt(alpha.re());
}

/// Normalized pointer state centred at gamma. The width must be resolved by at
/// least 8 grid points and the packet must sit >= 5 widths from the boundary.
inline WaveFunction make_pointer_state(const Grid& grid, const AlphaParam& alpha, const PhasePoint& gamma) {
  const double sigma = 1.0 / std::sqrt(alpha.re());
  if (sigma < 8.0 * grid.spacing()) throw std::invalid_argument("pointer state width not resolved by the grid");
  if (std::abs(gamma.x_bar) + 5.0 * sigma > 0.5 * grid.length())
    throw std::invalid_argument("pointer state center too close to the boundary");
  return detail::gaussian_unchecked(grid, alpha, gamma).normalized();
}

/// Symmetrized second moments of a pointer state:
/// C = (1/a_R) [[1, -a_I/2], [-a_I/2, |a|^2/4]].
inline SymMatrix2 correlation_matrix(const AlphaParam& alpha) {
  const double inv = 1.0 / alpha.re();
  return {inv, -0.5 * alpha.im() * inv, 0.25 * alpha.abs2() * inv};
}

struct GaussianFit {
  AlphaParam alpha;
  PhasePoint gamma;
  double fidelity;  // |<psi_fit|psi>|^2
};

/// Moment-matched Gaussian: inverts the correlation matrix map using <x>, <p>, C_xx, C_xp.
inline GaussianFit fit_gaussian(const WaveFunction& psi) {
  const double xm = expectation(psi, Observable::X);
  const double pm = expectation(psi, Observable::P);
  const double cxx = expectation(psi, Observable::X2) - xm * xm;
  const double cxp = expectation(psi, Observable::SymXP) - xm * pm;
  if (!(cxx > 0.0)) throw NumericalError("fit_gaussian: nonpositive position variance");
  const AlphaParam alpha(1.0 / cxx, -2.0 * cxp / cxx);
  const PhasePoint gamma{xm, pm};
  const WaveFunction fit = detail::gaussian_unchecked(psi.grid(), alpha, gamma).normalized();
  return {alpha, gamma, std::min(1.0, overlap2(fit, psi))};
}

}  // namespace pointerlab
