#pragma once

// Robustness criteria for pointer states:
//  - Hilbert-Schmidt speed v of a candidate pure-state drift and the drift minimizing it;
//  - the predictability sieve as a constrained maximization of a_R;
//  - proportionality of quantum (C) and diffusive (D) uncertainties.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "pointerlab/integrators.hpp"
#include "pointerlab/master.hpp"
#include "pointerlab/phasespace.hpp"
#include "pointerlab/pointer_gaussian.hpp"

namespace pointerlab {

/// v = || d(psi psi^dagger)/dt - L(psi psi^dagger) ||_HS for a candidate derivative dpsi_dt.
/// Dense N x N evaluation; meant for coarse grids.
inline double hs_speed(const WaveFunction& psi, const WaveFunction& dpsi_dt, const ModelParams& params) {
  require_same_grid(psi.grid(), dpsi_dt.grid());
  const auto& a = psi.amplitudes();
  const auto& d = dpsi_dt.amplitudes();
  const CMatrix dp = d * a.adjoint() + a * d.adjoint();
  const DensityMatrix lp = liouvillian(DensityMatrix::pure(psi), params);
  return hs_norm(psi.grid(), dp - lp.entries());
}

/// Nonlinear drift -(i/2m) p^2 psi - (D/2)[(x - <x>)^2 - sigma^2] psi.
inline WaveFunction drift_rhs(const WaveFunction& psi, const ModelParams& params) {
  check_boundary(psi);
  const Grid& g = psi.grid();
  const double h = g.spacing();
  const Eigen::ArrayXd x = g.positions();
  const Eigen::ArrayXd dens = psi.amplitudes().array().abs2();
  const double norm = dens.sum() * h;
  const double xm = (x * dens).sum() * h / norm;
  const Eigen::ArrayXd y2 = (x - xm).square();
  const double var = (y2 * dens).sum() * h / norm;
  const WaveFunction kin = apply_kinetic(psi, params.m);
  CVector out = -kI * kin.amplitudes();
  out.array() -= (0.5 * params.D) * (y2 - var) * psi.amplitudes().array();
  return {g, std::move(out)};
}

/// General minimizer of v: (L P) psi - <L P> psi with P = psi psi^dagger, evaluated
/// with dense matrices. Differs from drift_rhs only by a multiple of i psi.
inline WaveFunction optimal_drift_dense(const WaveFunction& psi, const ModelParams& params) {
  const double h = psi.grid().spacing();
  const DensityMatrix lp = liouvillian(DensityMatrix::pure(psi), params);
  const CVector lpsi = lp.entries() * psi.amplitudes() * h;
  const cplx mean = psi.amplitudes().dot(lpsi) * h;
  return {psi.grid(), lpsi - mean * psi.amplitudes()};
}

/// d(psi psi^dagger) = dpsi psi^dagger + psi dpsi^dagger, as a kernel matrix.
inline CMatrix projector_derivative(const WaveFunction& psi, const WaveFunction& dpsi) {
  require_same_grid(psi.grid(), dpsi.grid());
  return dpsi.amplitudes() * psi.amplitudes().adjoint() + psi.amplitudes() * dpsi.amplitudes().adjoint();
}

struct DriftSeries {
  std::vector<double> times;
  std::vector<GaussianFit> fits;
  std::vector<WaveFunction> states;  // only when keep_states is set; the final state is always kept
};

struct DriftOptions {
  std::size_t record_every = 0;  // 0: initial and final only
  bool keep_states = false;
};

/// RK4 integration of the nonlinear drift with renormalization after every step.
inline DriftSeries evolve_drift(const WaveFunction& psi0, const ModelParams& params, double t_final, double dt,
                                const DriftOptions& opts = {}) {
  const Grid& g = psi0.grid();
  check_step(g, params, dt);
  check_normalized(psi0);
  const std::size_t steps = step_count(t_final, dt);
  const double h = steps > 0 ? t_final / static_cast<double>(steps) : 0.0;
  auto rhs = [&](const CVector& v) -> CVector { return drift_rhs(WaveFunction(g, v), params).amplitudes(); };

  DriftSeries series;
  auto record = [&](std::size_t step, const WaveFunction& psi, bool last) {
    series.times.push_back(static_cast<double>(step) * h);
    series.fits.push_back(fit_gaussian(psi));
    if (opts.keep_states || last) series.states.push_back(psi);
  };

  CVector amp = psi0.amplitudes();
  record(0, psi0, steps == 0);
  for (std::size_t s = 1; s <= steps; ++s) {
    amp = rk4_step(amp, h, rhs);
    amp /= std::sqrt(amp.squaredNorm() * g.spacing());
    const bool on_stride = opts.record_every > 0 && s % opts.record_every == 0;
    if (on_stride || s == steps) record(s, WaveFunction(g, amp), s == steps);
  }
  return series;
}

/// q(a) = a_R^4 + 2 a_R^2 a_I^2 + 16 D m a_R a_I + a_I^4; admissible (det D >= 0) iff q <= 0.
inline double det_condition(const AlphaParam& alpha, const ModelParams& params) {
  const double r = alpha.re(), i = alpha.im();
  return r * r * r * r + 2.0 * r * r * i * i + 16.0 * params.D * params.m * r * i + i * i * i * i;
}

struct SieveResult {
  AlphaParam alpha;
  double phi;                  // polar angle of alpha
  double radius;               // dimensionless |alpha| / sqrt(D m)
  double constraint_residual;  // R^2 + 8 sin 2 phi
  double scan_best;            // best a_R / sqrt(Dm) seen by the brute-force scan
};

/// Maximizes a_R = sqrt(Dm) R cos(phi) on the constraint curve R^2 = -8 sin 2phi,
/// phi in (-pi/2, 0): uniform scan, then golden-section refinement around the best node.
inline SieveResult sieve_optimize(const ModelParams& params, std::size_t resolution = 10000) {
  if (!(params.D > 0.0)) throw std::invalid_argument("sieve_optimize: D must be > 0");
  if (resolution < 3) throw std::invalid_argument("sieve_optimize: resolution too small");
  const double lo = -std::numbers::pi / 2.0;
  auto radius = [](double phi) { return std::sqrt(std::max(0.0, -8.0 * std::sin(2.0 * phi))); };
  auto objective = [&](double phi) { return radius(phi) * std::cos(phi); };

  const double step = (std::numbers::pi / 2.0) / static_cast<double>(resolution + 1);
  std::size_t best = 1;
  double best_val = -1.0;
  for (std::size_t i = 1; i <= resolution; ++i) {
    const double v = objective(lo + step * static_cast<double>(i));
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  const double a = lo + step * static_cast<double>(best - 1);
  const double b = lo + step * static_cast<double>(best + 1);
  const ScalarOptimum opt = golden_section_maximize(objective, a, b, 1e-13);

  const double phi = opt.arg;
  const double r = radius(phi);
  const double scale = std::sqrt(params.D * params.m);
  return {AlphaParam(scale * r * std::cos(phi), scale * r * std::sin(phi)), phi, r,
          r * r + 8.0 * std::sin(2.0 * phi), best_val};
}

struct ProportionalityResult {
  bool is_proportional;
  double constant;  // c in C = c D
  double residual;  // max pairwise relative ratio spread, or relative fit residual
};

/// Tests C(alpha) = c D(alpha) entrywise.
inline ProportionalityResult proportionality_check(const AlphaParam& alpha, const ModelParams& params,
                                                   double tol = 1e-9) {
  const SymMatrix2 c = correlation_matrix(alpha);
  const SymMatrix2 d = diffusion_matrix(alpha, params).entries;
  const double tiny = 1e-300;
  if (std::abs(d.xx) > tiny && std::abs(d.xp) > tiny && std::abs(d.pp) > tiny) {
    const double r[3] = {c.xx / d.xx, c.xp / d.xp, c.pp / d.pp};
    double spread = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = i + 1; j < 3; ++j)
        spread = std::max(spread, std::abs(r[i] - r[j]) / std::max(std::abs(r[i]), std::abs(r[j])));
    return {spread <= tol, (r[0] + r[1] + r[2]) / 3.0, spread};
  }
  // Zero entries: least-squares c minimizing ||C - c D||_F (off-diagonal counted twice).
  const double dd = d.xx * d.xx + 2.0 * d.xp * d.xp + d.pp * d.pp;
  const double cd = c.xx * d.xx + 2.0 * c.xp * d.xp + c.pp * d.pp;
  const double k = dd > 0.0 ? cd / dd : 0.0;
  const SymMatrix2 res = c - d * k;
  const double cn = std::sqrt(c.xx * c.xx + 2.0 * c.xp * c.xp + c.pp * c.pp);
  const double rn = std::sqrt(res.xx * res.xx + 2.0 * res.xp * res.xp + res.pp * res.pp) / cn;
  return {rn <= tol, k, rn};
}

}  // namespace pointerlab
