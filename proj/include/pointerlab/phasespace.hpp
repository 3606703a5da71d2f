#pragma once

// Phase-space layer: pointer-state diffusion matrix, Gaussian-closed Fokker-Planck
// evolution of the pointer weight f(x_bar, p_bar; t), Ito-Langevin center steps,
// and reconstruction rho = \int f(G) P(G) dG.

#include <cmath>
#include <cstddef>
#include <random>
#include <stdexcept>
#include <vector>

#include "pointerlab/integrators.hpp"
#include "pointerlab/master.hpp"
#include "pointerlab/pointer_gaussian.hpp"

namespace pointerlab {

/// Diffusion of pointer centers for pointer width parameter alpha:
///   D_xx = -a_I/(m a_R),  D_xp = |a|^2/(4 m a_R),  D_pp = D.
struct DiffusionMatrix {
  SymMatrix2 entries;

  static constexpr double admissibility_tol = 1e-12;

  double det() const noexcept { return entries.det(); }
  bool admissible() const noexcept {
    return det() >= -admissibility_tol && entries.xx >= -admissibility_tol && entries.pp >= -admissibility_tol;
  }
};

inline DiffusionMatrix diffusion_matrix(const AlphaParam& alpha, const ModelParams& params) {
  const double ma = params.m * alpha.re();
  return {{-alpha.im() / ma, alpha.abs2() / (4.0 * ma), params.D}};
}

/// Time-dependent coefficient matrix of the Fourier-space solution
///   f~(G~; t) = exp[-(t/2) G~^T G(t) G~] f~(x~ - p~ t/m, p~; 0),
/// obtained by integrating the diffusion form along the free-flow characteristics.
inline SymMatrix2 gmatrix(double t, const DiffusionMatrix& dmat, double m) {
  if (!(t >= 0.0)) throw std::invalid_argument("gmatrix: t must be >= 0");
  const auto& d = dmat.entries;
  return {d.pp, -d.xp - d.pp * t / (2.0 * m), d.xx + d.xp * t / m + d.pp * t * t / (3.0 * m * m)};
}

/// Gaussian pointer weight: mean center and covariance over (x_bar, p_bar).
struct GaussianWeight {
  PhasePoint mean;
  SymMatrix2 cov;
};

/// Exact Gaussian solution: free-flow transport of the mean, sheared covariance
/// plus the accumulated diffusion t * [[G22, -G12], [-G12, G11]].
inline GaussianWeight evolve_weight(const GaussianWeight& w0, const DiffusionMatrix& dmat, double m, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("evolve_weight: t must be >= 0");
  const double s = t / m;
  const auto& c = w0.cov;
  // F C F^T with F = [[1, t/m], [0, 1]].
  const SymMatrix2 transported{c.xx + 2.0 * s * c.xp + s * s * c.pp, c.xp + s * c.pp, c.pp};
  const SymMatrix2 g = gmatrix(t, dmat, m);
  const SymMatrix2 diffused{t * g.pp, -t * g.xp, t * g.xx};
  return {{w0.mean.x_bar + w0.mean.p_bar * s, w0.mean.p_bar}, transported + diffused};
}

/// Same covariance via RK4 on dS/dt = A S + S A^T + D with A = [[0, 1/m], [0, 0]].
inline SymMatrix2 covariance_moment_ode(const SymMatrix2& cov0, const DiffusionMatrix& dmat, double m, double t,
                                        std::size_t steps = 64) {
  using Vec3 = Eigen::Vector3d;  // (xx, xp, pp)
  const auto& d = dmat.entries;
  auto rhs = [&](const Vec3& s) -> Vec3 {
    return Vec3(2.0 * s[1] / m + d.xx, s[2] / m + d.xp, d.pp);
  };
  Vec3 s(cov0.xx, cov0.xp, cov0.pp);
  if (steps == 0 || t == 0.0) return cov0;
  const double h = t / static_cast<double>(steps);
  for (std::size_t i = 0; i < steps; ++i) s = rk4_step(s, h, rhs);
  return {s[0], s[1], s[2]};
}

/// Symmetric square root S of a positive semidefinite 2x2 matrix (S S = M).
/// Zero eigenvalues are kept exactly zero, so rank-1 matrices stay rank-1.
inline SymMatrix2 symmetric_sqrt(const SymMatrix2& mat) {
  const auto e = mat.eigen();
  const double scale = std::max(1.0, std::abs(e.hi));
  if (e.lo < -DiffusionMatrix::admissibility_tol * scale) throw NumericalError("inadmissible alpha");
  const double shi = std::sqrt(std::max(e.hi, 0.0));
  const double slo = std::sqrt(std::max(e.lo, 0.0));
  // v = (vx, vp) for hi, w = (-vp, vx) for lo.
  const double vx = e.vx, vp = e.vp;
  return {shi * vx * vx + slo * vp * vp, (shi - slo) * vx * vp, shi * vp * vp + slo * vx * vx};
}

/// One Ito-Langevin step dG = (p_bar/m, 0) dt + dX, dX ~ N(0, Dmat dt).
template <class Urbg>
PhasePoint langevin_step(const PhasePoint& gamma, const DiffusionMatrix& dmat, double m, double dt, Urbg& rng) {
  if (!(dt > 0.0)) throw std::invalid_argument("langevin_step: dt must be > 0");
  const SymMatrix2 root = symmetric_sqrt(dmat.entries);
  std::normal_distribution<double> normal;
  const double g1 = normal(rng);
  const double g2 = normal(rng);
  const double sdt = std::sqrt(dt);
  return {gamma.x_bar + gamma.p_bar * dt / m + sdt * (root.xx * g1 + root.xp * g2),
          gamma.p_bar + sdt * (root.xp * g1 + root.pp * g2)};
}

struct ReconstructOptions {
  std::size_t nodes_per_axis = 64;
  double box_sigmas = 7.0;        // half-width of the quadrature box in weight standard deviations
  double trace_tol = 1e-6;
  double degenerate_variance = 1e-14;
};

/// rho = \int f(G) P(G) dG for a Gaussian weight, by tensor trapezoid quadrature
/// in the principal axes of the weight covariance. Axes with (numerically) zero
/// variance collapse to a single node, so a point mass returns the pure projector.
inline DensityMatrix reconstruct_rho(const GaussianWeight& weight, const AlphaParam& alpha, const Grid& grid,
                                     const ReconstructOptions& opts = {}) {
  if (opts.nodes_per_axis < 2) throw std::invalid_argument("reconstruct: need at least 2 nodes per axis");
  const auto e = weight.cov.eigen();
  const double scale = std::max(1.0, std::abs(e.hi));
  if (e.lo < -1e-12 * scale) throw std::invalid_argument("reconstruct: weight covariance is not positive semidefinite");

  struct Axis {
    std::vector<double> u;
    std::vector<double> w;
  };
  auto make_axis = [&](double variance) {
    Axis a;
    if (variance <= opts.degenerate_variance) {
      a.u = {0.0};
      a.w = {1.0};
      return a;
    }
    const std::size_t n = opts.nodes_per_axis;
    const double du = 2.0 * opts.box_sigmas / static_cast<double>(n - 1);
    const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    for (std::size_t i = 0; i < n; ++i) {
      const double u = -opts.box_sigmas + du * static_cast<double>(i);
      a.u.push_back(u);
      a.w.push_back(du * inv_sqrt_2pi * std::exp(-0.5 * u * u));
    }
    return a;
  };
  const Axis hi = make_axis(e.hi);
  const Axis lo = make_axis(e.lo);
  const double shi = std::sqrt(std::max(e.hi, 0.0));
  const double slo = std::sqrt(std::max(e.lo, 0.0));

  const auto n_nodes = static_cast<Eigen::Index>(hi.u.size() * lo.u.size());
  CMatrix columns(static_cast<Eigen::Index>(grid.n_points()), n_nodes);
  Eigen::Index col = 0;
  for (std::size_t a = 0; a < hi.u.size(); ++a) {
    for (std::size_t b = 0; b < lo.u.size(); ++b, ++col) {
      const double ua = shi * hi.u[a];
      const double ub = slo * lo.u[b];
      const PhasePoint g{weight.mean.x_bar + ua * e.vx - ub * e.vp, weight.mean.p_bar + ua * e.vp + ub * e.vx};
      const WaveFunction psi = detail::gaussian_unchecked(grid, alpha, g);
      columns.col(col) = std::sqrt(hi.w[a] * lo.w[b]) * psi.amplitudes();
    }
  }
  DensityMatrix rho(grid, columns * columns.adjoint());
  if (std::abs(rho.trace() - 1.0) > opts.trace_tol) throw NumericalError("reconstruct: under-resolved quadrature");
  return rho.normalized();
}

}  // namespace pointerlab
