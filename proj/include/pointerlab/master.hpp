#pragma once

// Free particle under position-coupled Markovian decoherence:
//   d rho/dt = L rho = -(i/2m)[p^2, rho] - (D/2)[x, [x, rho]].

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "pointerlab/integrators.hpp"
#include "pointerlab/numerics.hpp"

namespace pointerlab {

struct ModelParams {
  double m = 1.0;
  double D = 1.0;

  ModelParams() = default;
  ModelParams(double mass, double strength) : m(mass), D(strength) {
    if (!(m > 0.0) || !std::isfinite(m)) throw std::invalid_argument("model: m must be > 0");
    // D = 0 is the closed-system limit.
    if (!(D >= 0.0) || !std::isfinite(D)) throw std::invalid_argument("model: D must be >= 0");
  }

  /// Nominal decoherence time sqrt(m/D).
  double decoherence_time() const { return std::sqrt(m / D); }
};

/// Largest RK4 step accepted by the master and drift integrators:
/// 0.1 * min(m h^2, 4 / (D L^2)).
inline double max_stable_dt(const Grid& g, const ModelParams& p) {
  const double h = g.spacing();
  double bound = p.m * h * h;
  if (p.D > 0.0) bound = std::min(bound, 4.0 / (p.D * g.length() * g.length()));
  return 0.1 * bound;
}

inline void check_step(const Grid& g, const ModelParams& p, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
  if (dt > max_stable_dt(g, p) * (1.0 + 1e-12)) throw NumericalError("dt too large");
}

namespace detail {

/// (x_j - x_k)^2 on the grid.
inline Eigen::MatrixXd separation_squared(const Grid& g) {
  const Eigen::ArrayXd x = g.positions();
  const auto n = x.size();
  Eigen::MatrixXd out(n, n);
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index j = 0; j < n; ++j) out(j, k) = (x[j] - x[k]) * (x[j] - x[k]);
  return out;
}

/// L rho assuming rho is Hermitian, so that rho K = (K rho)^dagger.
struct HermitianLiouvillian {
  Grid grid;
  ModelParams params;
  Eigen::MatrixXd sep2;

  HermitianLiouvillian(const Grid& g, const ModelParams& p) : grid(g), params(p), sep2(separation_squared(g)) {}

  CMatrix operator()(const CMatrix& rho) const {
    const CMatrix krho = kinetic_columns(grid, rho, params.m);
    CMatrix out = -kI * (krho - krho.adjoint());
    out.array() -= (0.5 * params.D) * sep2.array() * rho.array();
    return out;
  }
};

}  // namespace detail

/// L rho for an arbitrary (not necessarily Hermitian) kernel matrix.
inline DensityMatrix liouvillian(const DensityMatrix& rho, const ModelParams& params) {
  check_boundary(rho);
  const Grid& g = rho.grid();
  const CMatrix krho = kinetic_columns(g, rho.entries(), params.m);
  const CMatrix rhok = kinetic_columns(g, rho.entries().adjoint(), params.m).adjoint();
  CMatrix out = -kI * (krho - rhok);
  out.array() -= (0.5 * params.D) * detail::separation_squared(g).array() * rho.entries().array();
  return {g, std::move(out)};
}

struct MasterOptions {
  std::size_t record_every = 0;  // 0: record the initial and final states only
  bool monitor_positivity = true;
  double positivity_tol = 1e-8;
};

struct MasterSeries {
  std::vector<double> times;
  std::vector<DensityMatrix> states;
  std::vector<std::string> warnings;

  const DensityMatrix& final_state() const { return states.back(); }
};

/// Observer receives (t, rho) at every recorded step.
using MasterObserver = std::function<void(double, const DensityMatrix&)>;

/// Integrates the master equation with RK4 from rho0 up to t_final. The step is
/// shrunk so that an integer number of steps lands exactly on t_final.
inline MasterSeries evolve_master(const DensityMatrix& rho0, const ModelParams& params, double t_final, double dt,
                                  const MasterOptions& opts = {}, const MasterObserver& observer = {}) {
  const Grid& g = rho0.grid();
  check_step(g, params, dt);
  check_boundary(rho0);
  const std::size_t steps = step_count(t_final, dt);
  const double h = steps > 0 ? t_final / static_cast<double>(steps) : 0.0;

  const detail::HermitianLiouvillian rhs(g, params);
  MasterSeries series;
  auto record = [&](std::size_t step, const CMatrix& rho) {
    const double t = static_cast<double>(step) * h;
    DensityMatrix state(g, rho);
    if (opts.monitor_positivity) {
      const double ratio = state.min_eigenvalue_ratio();
      if (ratio < -opts.positivity_tol)
        series.warnings.push_back("positivity loss at t=" + std::to_string(t) + " (min/max eigenvalue " +
                                  std::to_string(ratio) + ")");
    }
    if (observer) observer(t, state);
    series.times.push_back(t);
    series.states.push_back(std::move(state));
  };

  CMatrix rho = 0.5 * (rho0.entries() + rho0.entries().adjoint());
  record(0, rho);
  for (std::size_t s = 1; s <= steps; ++s) {
    rho = rk4_step(rho, h, rhs);
    rho = 0.5 * (rho + rho.adjoint()).eval();
    if (boundary_mass(DensityMatrix(g, rho)) > Tolerance::boundary_mass)
      throw NumericalError("boundary contamination");
    const bool on_stride = opts.record_every > 0 && s % opts.record_every == 0;
    if (on_stride || s == steps) record(s, rho);
  }
  return series;
}

/// Initial production rate of S = 1 - tr rho^2 from a pure state psi.
/// d tr rho^2/dt = 2 tr(rho L rho) and tr(P [x,[x,P]]) = 2 var_x give 2 D var_x.
inline double entropy_rate_initial(const WaveFunction& psi, const ModelParams& params) {
  return 2.0 * params.D * variance_x(psi);
}

/// [S(delta) - S(0)] / delta from the master-equation evolution of the projector.
/// delta defaults to 1e-3 / (D var_x).
inline double entropy_rate_finite_difference(const WaveFunction& psi, const ModelParams& params,
                                             double delta = 0.0) {
  if (!(delta > 0.0)) delta = 1e-3 / (params.D * variance_x(psi));
  const DensityMatrix rho0 = DensityMatrix::pure(psi);
  const double dt = std::min(max_stable_dt(psi.grid(), params), delta / 10.0);
  MasterOptions opts;
  opts.monitor_positivity = false;
  const auto series = evolve_master(rho0, params, delta, dt, opts);
  return (linear_entropy(series.final_state()) - linear_entropy(rho0)) / delta;
}

}  // namespace pointerlab
