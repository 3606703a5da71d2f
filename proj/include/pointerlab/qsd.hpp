#pragma once

// Quantum state diffusion for the position-coupled free particle:
//   d psi = -(i/2m) p^2 psi dt - (D/2)(x - <x>)^2 psi dt + (x - <x>) psi dz,
// with complex Ito increments dz, M[dz dz*] = D dt.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <random>
#include <stdexcept>
#include <thread>
#include <vector>

#include "pointerlab/master.hpp"
#include "pointerlab/phasespace.hpp"
#include "pointerlab/pointer_gaussian.hpp"
#include "pointerlab/rng.hpp"

namespace pointerlab {

enum class NoiseMode { Standard, AlphaGeneral };

struct NoiseSpec {
  NoiseMode mode = NoiseMode::Standard;
  AlphaParam alpha{1.0, 0.0};  // used in AlphaGeneral mode
  double D = 1.0;
  std::uint64_t seed = 0;
};

/// Draws dz increments for a fixed spec.
///  Standard:     dz = sqrt(D dt / 2) (g1 + i g2).
///  AlphaGeneral: (dxi, dpi) ~ N(0, Dmat(alpha) dt), dz = (alpha/2) dxi + i dpi.
class NoiseSampler {
public:
  NoiseSampler(const NoiseSpec& spec, double m) : spec_(spec) {
    if (!(spec.D >= 0.0)) throw std::invalid_argument("noise: D must be >= 0");
    if (spec.mode == NoiseMode::AlphaGeneral) {
      const DiffusionMatrix dmat = diffusion_matrix(spec.alpha, ModelParams(m, spec.D));
      if (!dmat.admissible()) throw NumericalError("inadmissible alpha");
      root_ = symmetric_sqrt(dmat.entries);
    }
  }

  template <class Urbg>
  cplx operator()(double dt, Urbg& rng) const {
    const double g1 = normal_(rng);
    const double g2 = normal_(rng);
    if (spec_.mode == NoiseMode::Standard) return std::sqrt(spec_.D * dt / 2.0) * cplx(g1, g2);
    const double s = std::sqrt(dt);
    const double dxi = s * (root_.xx * g1 + root_.xp * g2);
    const double dpi = s * (root_.xp * g1 + root_.pp * g2);
    return 0.5 * spec_.alpha.value() * dxi + kI * dpi;
  }

  const NoiseSpec& spec() const noexcept { return spec_; }

private:
  NoiseSpec spec_;
  SymMatrix2 root_{};
  mutable std::normal_distribution<double> normal_;
};

/// One increment; m enters only through the diffusion matrix in AlphaGeneral mode.
template <class Urbg>
cplx sample_dz(const NoiseSpec& spec, double dt, Urbg& rng, double m = 1.0) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
  return NoiseSampler(spec, m)(dt, rng);
}

/// Stepper for the Ito-Schroedinger equation. The position-space Euler-Maruyama
/// increment is applied first, then the kinetic part exactly in k-space
/// (exp(-i k^2 dt / 2m)), then the state is renormalized.
class QsdStepper {
public:
  QsdStepper(const Grid& grid, const ModelParams& params, double dt)
      : grid_(grid), params_(params), dt_(dt), x_(grid.positions()),
        phase_(static_cast<Eigen::Index>(grid.n_points())), work_(phase_.size()), spec_(phase_.size()) {
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
    const double inv_n = 1.0 / static_cast<double>(grid.n_points());
    for (std::size_t j = 0; j < grid.n_points(); ++j) {
      const double k = grid.k(j);
      phase_[static_cast<Eigen::Index>(j)] = std::exp(-kI * (dt * k * k / (2.0 * params.m))) * inv_n;
    }
  }

  double dt() const noexcept { return dt_; }
  const Grid& grid() const noexcept { return grid_; }

  /// Advances `amp` in place with increment dz. Returns the squared norm before renormalization.
  double step(CVector& amp, cplx dz) {
    const double h = grid_.spacing();
    const Eigen::ArrayXd dens = amp.array().abs2();
    const double norm0 = dens.sum() * h;
    const double xm = (x_ * dens).sum() * h / norm0;
    const Eigen::ArrayXd y = x_ - xm;
    work_.array() = amp.array() * (1.0 - (0.5 * params_.D * dt_) * y.square() + y.cast<cplx>() * dz);

    const int n = static_cast<int>(grid_.n_points());
    fft::transform(work_.data(), spec_.data(), n, 1, fft::Direction::Forward);
    spec_.array() *= phase_.array();
    fft::transform(spec_.data(), amp.data(), n, 1, fft::Direction::Backward);

    const double norm1 = amp.squaredNorm() * h;
    if (!(norm1 >= 1e-6) || !std::isfinite(norm1)) throw NumericalError("numerical blowup, reduce dt");
    amp /= std::sqrt(norm1);
    return norm1;
  }

private:
  Grid grid_;
  ModelParams params_;
  double dt_;
  Eigen::ArrayXd x_;
  CVector phase_;
  CVector work_;
  CVector spec_;
};

/// Single QSD step with a given increment (Ito: <x> taken at the start of the step).
inline WaveFunction qsd_step(const WaveFunction& psi, const ModelParams& params, cplx dz, double dt) {
  check_normalized(psi);
  check_boundary(psi);
  QsdStepper stepper(psi.grid(), params, dt);
  CVector amp = psi.amplitudes();
  stepper.step(amp, dz);
  return {psi.grid(), std::move(amp)};
}

template <class Urbg>
WaveFunction qsd_step(const WaveFunction& psi, const ModelParams& params, const NoiseSpec& spec, double dt,
                      Urbg& rng) {
  return qsd_step(psi, params, sample_dz(spec, dt, rng, params.m), dt);
}

struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<PhasePoint> centers;
  std::vector<double> variances;
  std::vector<double> gaussian_fidelity;
  std::vector<WaveFunction> snapshots;
  std::optional<WaveFunction> final_state;  // in the (possibly shifted) grid frame
  double final_offset = 0.0;                // lab x = grid x + offset
  std::uint64_t seed = 0;
};

struct TrajectoryOptions {
  std::size_t record_stride = 100;
  std::size_t snapshot_stride = 0;  // 0: no intermediate snapshots
  bool keep_final = true;
  // Shift the state by whole grid cells when |<x>| exceeds length/8. The
  // dynamics is translation invariant, so this is exact on the periodic grid.
  bool recenter = false;
};

/// Integrates one trajectory with the noise stream seeded from spec.seed.
inline TrajectoryRecord run_trajectory(const WaveFunction& psi0, const ModelParams& params, const NoiseSpec& spec,
                                       double t_final, double dt, const TrajectoryOptions& opts = {}) {
  const Grid& g = psi0.grid();
  check_step(g, params, dt);
  check_normalized(psi0);
  check_boundary(psi0);
  if (opts.record_stride == 0) throw std::invalid_argument("record_stride must be >= 1");
  const std::size_t steps = step_count(t_final, dt);
  const double h = steps > 0 ? t_final / static_cast<double>(steps) : dt;

  QsdStepper stepper(g, params, h);
  NoiseSampler sampler(spec, params.m);
  Engine rng = make_engine(spec.seed);

  TrajectoryRecord rec;
  rec.seed = spec.seed;
  double offset = 0.0;
  auto record = [&](std::size_t step, const WaveFunction& psi) {
    const GaussianFit fit = fit_gaussian(psi);
    rec.times.push_back(static_cast<double>(step) * h);
    rec.centers.push_back({fit.gamma.x_bar + offset, fit.gamma.p_bar});
    rec.variances.push_back(1.0 / fit.alpha.re());
    rec.gaussian_fidelity.push_back(fit.fidelity);
  };

  CVector amp = psi0.amplitudes();
  record(0, psi0);
  const double recenter_at = g.length() / 8.0;
  const Eigen::ArrayXd x = g.positions();
  for (std::size_t s = 1; s <= steps; ++s) {
    stepper.step(amp, sampler(h, rng));
    WaveFunction psi(g, amp);
    if (boundary_mass(psi) > Tolerance::boundary_mass) throw NumericalError("boundary contamination");
    if (opts.recenter) {
      const double xm = (x * amp.array().abs2()).sum() * g.spacing();
      if (std::abs(xm) > recenter_at) {
        const auto cells = static_cast<long long>(std::llround(xm / g.spacing()));
        psi = shift_cells(psi, cells);
        amp = psi.amplitudes();
        offset += static_cast<double>(cells) * g.spacing();
      }
    }
    if (s % opts.record_stride == 0 || s == steps) record(s, psi);
    if (opts.snapshot_stride > 0 && s % opts.snapshot_stride == 0) rec.snapshots.push_back(psi);
  }
  if (opts.keep_final) rec.final_state = WaveFunction(g, amp);
  rec.final_offset = offset;
  return rec;
}

/// Runs n_traj trajectories; trajectory i uses seed derive_seed(master_seed, i).
/// Results are ordered by index regardless of thread count.
inline std::vector<TrajectoryRecord> run_ensemble(const WaveFunction& psi0, const ModelParams& params,
                                                  const NoiseSpec& base, std::uint64_t master_seed,
                                                  std::size_t n_traj, double t_final, double dt,
                                                  const TrajectoryOptions& opts = {}, unsigned threads = 1) {
  if (n_traj == 0) throw std::invalid_argument("n_traj must be >= 1");
  std::vector<std::optional<TrajectoryRecord>> slots(n_traj);
  std::vector<std::exception_ptr> errors(n_traj);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n_traj; i = next++) {
      try {
        NoiseSpec spec = base;
        spec.seed = derive_seed(master_seed, i);
        slots[i] = run_trajectory(psi0, params, spec, t_final, dt, opts);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned n_workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n_traj)));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n_workers; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::vector<TrajectoryRecord> out;
  out.reserve(n_traj);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

/// (1/M) sum psi psi^dagger, trace-normalized. Summation order is the input order.
inline DensityMatrix ensemble_average(const std::vector<WaveFunction>& states) {
  if (states.size() < 2) throw std::invalid_argument("ensemble_average: need at least 2 states");
  const Grid& g = states.front().grid();
  CMatrix cols(static_cast<Eigen::Index>(g.n_points()), static_cast<Eigen::Index>(states.size()));
  for (std::size_t i = 0; i < states.size(); ++i) {
    require_same_grid(g, states[i].grid());
    cols.col(static_cast<Eigen::Index>(i)) = states[i].amplitudes();
  }
  cols /= std::sqrt(static_cast<double>(states.size()));
  return DensityMatrix(g, cols * cols.adjoint()).normalized();
}

/// Bootstrap estimate of the HS sampling error of ensemble_average: RMS over
/// resamples of || mean_resampled - mean ||_HS, computed from the Gram matrix
/// |<psi_i|psi_j>|^2 so no resampled density matrix is formed.
inline double bootstrap_hs_bound(const std::vector<WaveFunction>& states, std::size_t resamples,
                                 std::uint64_t seed) {
  const std::size_t n = states.size();
  if (n < 2) throw std::invalid_argument("bootstrap: need at least 2 states");
  const Grid& g = states.front().grid();
  CMatrix cols(static_cast<Eigen::Index>(g.n_points()), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) cols.col(static_cast<Eigen::Index>(i)) = states[i].amplitudes();
  const double h = g.spacing();
  const Eigen::MatrixXd gram = (cols.adjoint() * cols * h).cwiseAbs2();

  Engine rng = make_engine(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  Eigen::VectorXd c(static_cast<Eigen::Index>(n));
  double acc = 0.0;
  for (std::size_t b = 0; b < resamples; ++b) {
    c.setConstant(-1.0 / static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) c[static_cast<Eigen::Index>(pick(rng))] += 1.0 / static_cast<double>(n);
    acc += c.dot(gram * c);
  }
  return std::sqrt(acc / static_cast<double>(resamples));
}

}  // namespace pointerlab
