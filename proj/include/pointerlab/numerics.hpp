#pragma once

// Discretized Hilbert-space arithmetic on a periodic 1D grid (hbar = 1).
//
// Wave functions are sampled amplitudes psi(x_j); density matrices are kernel
// samples rho(x_j, x_k). Integrals carry the grid spacing h explicitly:
//   <a|b> = sum conj(a_j) b_j h,   tr A = sum A_jj h,   tr AB = sum A_jk B_kj h^2.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pointerlab/errors.hpp"
#include "pointerlab/fft.hpp"

namespace pointerlab {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

inline constexpr cplx kI{0.0, 1.0};

/// Tolerances shared by the state guards.
struct Tolerance {
  static constexpr double norm = 1e-8;
  static constexpr double boundary_mass = 1e-6;
  static constexpr double boundary_fraction = 0.05;
  static constexpr double nyquist_mass = 1e-10;
  static constexpr double nyquist_band = 0.9;
};

class Grid {
public:
  Grid(std::size_t n_points, double length, bool periodic = true)
      : n_(n_points), length_(length), periodic_(periodic) {
    if (n_points < 4) throw std::invalid_argument("grid: n_points must be >= 4");
    if (n_points % 2 != 0) throw std::invalid_argument("grid: n_points must be even");
    if (!(length > 0.0) || !std::isfinite(length)) throw std::invalid_argument("grid: length must be > 0");
  }

  std::size_t n_points() const noexcept { return n_; }
  double length() const noexcept { return length_; }
  bool periodic() const noexcept { return periodic_; }
  double spacing() const noexcept { return length_ / static_cast<double>(n_); }

  /// x_j = (j - n/2) h, symmetric about the origin.
  double x(std::size_t j) const noexcept {
    return (static_cast<double>(j) - static_cast<double>(n_) / 2.0) * spacing();
  }

  double dk() const noexcept { return 2.0 * std::numbers::pi / length_; }
  double k_nyquist() const noexcept { return std::numbers::pi / spacing(); }

  /// Wavenumber of DFT bin j (standard FFT ordering, Nyquist bin negative).
  double k(std::size_t j) const noexcept {
    const auto n = static_cast<long long>(n_);
    const auto jj = static_cast<long long>(j);
    return static_cast<double>(jj < n / 2 ? jj : jj - n) * dk();
  }

  Eigen::ArrayXd positions() const {
    Eigen::ArrayXd out(static_cast<Eigen::Index>(n_));
    for (std::size_t j = 0; j < n_; ++j) out[static_cast<Eigen::Index>(j)] = x(j);
    return out;
  }

  Eigen::ArrayXd wavenumbers() const {
    Eigen::ArrayXd out(static_cast<Eigen::Index>(n_));
    for (std::size_t j = 0; j < n_; ++j) out[static_cast<Eigen::Index>(j)] = k(j);
    return out;
  }

  friend bool operator==(const Grid& a, const Grid& b) noexcept {
    return a.n_ == b.n_ && a.length_ == b.length_ && a.periodic_ == b.periodic_;
  }

private:
  std::size_t n_;
  double length_;
  bool periodic_;
};

inline void require_same_grid(const Grid& a, const Grid& b) {
  if (!(a == b)) throw std::invalid_argument("grid mismatch");
}

class WaveFunction {
public:
  WaveFunction(Grid grid, CVector amplitudes) : grid_(grid), amp_(std::move(amplitudes)) {
    if (static_cast<std::size_t>(amp_.size()) != grid_.n_points())
      throw std::invalid_argument("wave function size does not match grid");
  }

  template <class F>
  static WaveFunction from_function(const Grid& grid, F&& f) {
    CVector amp(static_cast<Eigen::Index>(grid.n_points()));
    for (std::size_t j = 0; j < grid.n_points(); ++j) amp[static_cast<Eigen::Index>(j)] = f(grid.x(j));
    return {grid, std::move(amp)};
  }

  const Grid& grid() const noexcept { return grid_; }
  const CVector& amplitudes() const noexcept { return amp_; }
  cplx operator[](std::size_t j) const { return amp_[static_cast<Eigen::Index>(j)]; }
  std::size_t size() const noexcept { return grid_.n_points(); }

  double norm_squared() const { return amp_.squaredNorm() * grid_.spacing(); }

  WaveFunction normalized() const {
    const double n2 = norm_squared();
    if (!(n2 > 0.0) || !std::isfinite(n2)) throw NumericalError("cannot normalize a zero or non-finite state");
    return {grid_, amp_ / std::sqrt(n2)};
  }

private:
  Grid grid_;
  CVector amp_;
};

inline cplx inner(const WaveFunction& a, const WaveFunction& b) {
  require_same_grid(a.grid(), b.grid());
  return a.amplitudes().dot(b.amplitudes()) * a.grid().spacing();
}

/// Squared overlap |<a|b>|^2 of two normalized states.
inline double overlap2(const WaveFunction& a, const WaveFunction& b) { return std::norm(inner(a, b)); }

class DensityMatrix {
public:
  DensityMatrix(Grid grid, CMatrix entries) : grid_(grid), rho_(std::move(entries)) {
    const auto n = static_cast<Eigen::Index>(grid_.n_points());
    if (rho_.rows() != n || rho_.cols() != n) throw std::invalid_argument("density matrix size does not match grid");
  }

  /// Projector psi psi^dagger.
  static DensityMatrix pure(const WaveFunction& psi) {
    return {psi.grid(), psi.amplitudes() * psi.amplitudes().adjoint()};
  }

  const Grid& grid() const noexcept { return grid_; }
  const CMatrix& entries() const noexcept { return rho_; }

  double trace() const { return rho_.diagonal().sum().real() * grid_.spacing(); }

  DensityMatrix normalized() const {
    const double tr = trace();
    if (!(tr > 0.0)) throw NumericalError("cannot normalize a density matrix with nonpositive trace");
    return {grid_, rho_ / tr};
  }

  /// Max elementwise |rho - rho^dagger| in operator units (entries times h).
  double hermiticity_error() const {
    return (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff() * grid_.spacing();
  }

  /// Smallest over largest eigenvalue of the Hermitian part.
  double min_eigenvalue_ratio() const {
    const CMatrix herm = 0.5 * (rho_ + rho_.adjoint()) * grid_.spacing();
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(herm, Eigen::EigenvaluesOnly);
    const auto& ev = solver.eigenvalues();
    return ev.minCoeff() / ev.maxCoeff();
  }

private:
  Grid grid_;
  CMatrix rho_;
};

/// Real symmetric 2x2 matrix over phase space (x, p).
struct SymMatrix2 {
  double xx = 0.0;
  double xp = 0.0;
  double pp = 0.0;

  double det() const noexcept { return xx * pp - xp * xp; }
  double trace() const noexcept { return xx + pp; }

  SymMatrix2 operator+(const SymMatrix2& o) const noexcept { return {xx + o.xx, xp + o.xp, pp + o.pp}; }
  SymMatrix2 operator-(const SymMatrix2& o) const noexcept { return {xx - o.xx, xp - o.xp, pp - o.pp}; }
  SymMatrix2 operator*(double s) const noexcept { return {xx * s, xp * s, pp * s}; }

  double max_abs_diff(const SymMatrix2& o) const noexcept {
    return std::max({std::abs(xx - o.xx), std::abs(xp - o.xp), std::abs(pp - o.pp)});
  }

  /// Eigenvalues (ascending) and the unit eigenvector of the larger one.
  struct Eigen2 {
    double lo;
    double hi;
    double vx;  // eigenvector of `hi`
    double vp;
  };

  Eigen2 eigen() const noexcept {
    const double mean = 0.5 * (xx + pp);
    const double half_diff = 0.5 * (xx - pp);
    const double r = std::hypot(half_diff, xp);
    // Eigenvector angle of the larger eigenvalue.
    const double theta = 0.5 * std::atan2(2.0 * xp, xx - pp);
    return {mean - r, mean + r, std::cos(theta), std::sin(theta)};
  }
};

// ---------------------------------------------------------------------------
// Guards

inline void check_normalized(const WaveFunction& psi, double tol = Tolerance::norm) {
  if (std::abs(psi.norm_squared() - 1.0) > tol) throw NumericalError("unnormalized");
}

inline void check_normalized(const DensityMatrix& rho, double tol = Tolerance::norm) {
  if (std::abs(rho.trace() - 1.0) > tol) throw NumericalError("unnormalized");
}

/// Probability mass in the outer 5% of the grid on either side.
template <class DiagonalMass>
double edge_mass(const Grid& grid, DiagonalMass&& mass_at) {
  const std::size_t n = grid.n_points();
  const auto band = static_cast<std::size_t>(std::ceil(Tolerance::boundary_fraction * static_cast<double>(n)));
  double total = 0.0;
  for (std::size_t j = 0; j < band; ++j) total += mass_at(j) + mass_at(n - 1 - j);
  return total * grid.spacing();
}

inline double boundary_mass(const WaveFunction& psi) {
  return edge_mass(psi.grid(), [&](std::size_t j) { return std::norm(psi[j]); });
}

inline double boundary_mass(const DensityMatrix& rho) {
  const auto& e = rho.entries();
  return edge_mass(rho.grid(), [&](std::size_t j) {
    const auto i = static_cast<Eigen::Index>(j);
    return std::abs(e(i, i).real());
  });
}

template <class State>
void check_boundary(const State& s) {
  if (boundary_mass(s) > Tolerance::boundary_mass) throw NumericalError("boundary contamination");
}

// ---------------------------------------------------------------------------
// Spectral machinery

namespace detail {

inline bool in_nyquist_band(const Grid& g, std::size_t j) {
  return std::abs(g.k(j)) >= Tolerance::nyquist_band * g.k_nyquist();
}

/// Fraction of spectral weight in the top 10% of |k| for a batch of columns.
inline double nyquist_fraction(const Grid& g, const cplx* spectrum, int howmany) {
  const std::size_t n = g.n_points();
  double band = 0.0, total = 0.0;
  for (int c = 0; c < howmany; ++c) {
    const cplx* col = spectrum + static_cast<std::size_t>(c) * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double w = std::norm(col[j]);
      total += w;
      if (in_nyquist_band(g, j)) band += w;
    }
  }
  return total > 0.0 ? band / total : 0.0;
}

inline void check_nyquist(const Grid& g, const cplx* spectrum, int howmany) {
  if (nyquist_fraction(g, spectrum, howmany) > Tolerance::nyquist_mass) throw NumericalError("Nyquist contamination");
}

inline void require_periodic(const Grid& g) {
  if (!g.periodic()) throw std::invalid_argument("spectral operators require a periodic grid");
}

/// Applies a diagonal multiplier in k-space to each column of `cols` (n x howmany, column-major).
/// The multiplier receives the bin index. Optionally guards against Nyquist-band content.
template <class Multiplier>
void spectral_multiply(const Grid& g, const cplx* in, cplx* out, int howmany, Multiplier&& mult,
                       bool guard_nyquist) {
  require_periodic(g);
  const int n = static_cast<int>(g.n_points());
  std::vector<cplx> spec(static_cast<std::size_t>(n) * howmany);
  fft::transform(in, spec.data(), n, howmany, fft::Direction::Forward);
  if (guard_nyquist) check_nyquist(g, spec.data(), howmany);
  const double inv_n = 1.0 / n;
  for (int c = 0; c < howmany; ++c) {
    cplx* col = spec.data() + static_cast<std::size_t>(c) * n;
    for (int j = 0; j < n; ++j) col[j] *= mult(static_cast<std::size_t>(j)) * inv_n;
  }
  fft::transform(spec.data(), out, n, howmany, fft::Direction::Backward);
}

}  // namespace detail

/// (p^2/2m) psi via forward FFT, multiplication by k^2/2m, inverse FFT.
inline WaveFunction apply_kinetic(const WaveFunction& psi, double m) {
  if (!(m > 0.0)) throw std::invalid_argument("mass must be > 0");
  const Grid& g = psi.grid();
  CVector out(psi.amplitudes().size());
  detail::spectral_multiply(
      g, psi.amplitudes().data(), out.data(), 1,
      [&](std::size_t j) { return cplx(g.k(j) * g.k(j) / (2.0 * m), 0.0); }, true);
  return {g, std::move(out)};
}

/// p psi by spectral differentiation; the Nyquist bin is dropped.
inline WaveFunction apply_momentum(const WaveFunction& psi) {
  const Grid& g = psi.grid();
  const std::size_t nyq = g.n_points() / 2;
  CVector out(psi.amplitudes().size());
  detail::spectral_multiply(
      g, psi.amplitudes().data(), out.data(), 1,
      [&](std::size_t j) { return cplx(j == nyq ? 0.0 : g.k(j), 0.0); }, true);
  return {g, std::move(out)};
}

/// Exact free evolution exp(-i t p^2/2m) psi.
inline WaveFunction free_propagate(const WaveFunction& psi, double m, double t) {
  const Grid& g = psi.grid();
  CVector out(psi.amplitudes().size());
  detail::spectral_multiply(
      g, psi.amplitudes().data(), out.data(), 1,
      [&](std::size_t j) { return std::exp(-kI * (t * g.k(j) * g.k(j) / (2.0 * m))); }, false);
  return {g, std::move(out)};
}

/// K M for the kinetic matrix K = p^2/2m acting on every column of a square kernel matrix.
inline CMatrix kinetic_columns(const Grid& g, const CMatrix& mat, double m, bool guard_nyquist = true) {
  CMatrix out(mat.rows(), mat.cols());
  detail::spectral_multiply(
      g, mat.data(), out.data(), static_cast<int>(mat.cols()),
      [&](std::size_t j) { return cplx(g.k(j) * g.k(j) / (2.0 * m), 0.0); }, guard_nyquist);
  return out;
}

/// p M column-wise (Nyquist bin dropped).
inline CMatrix momentum_columns(const Grid& g, const CMatrix& mat) {
  const std::size_t nyq = g.n_points() / 2;
  CMatrix out(mat.rows(), mat.cols());
  detail::spectral_multiply(
      g, mat.data(), out.data(), static_cast<int>(mat.cols()),
      [&](std::size_t j) { return cplx(j == nyq ? 0.0 : g.k(j), 0.0); }, true);
  return out;
}

// ---------------------------------------------------------------------------
// Observables

enum class Observable { X, P, X2, P2, SymXP };

/// <O> for a normalized pure state. p-observables use spectral differentiation.
inline double expectation(const WaveFunction& psi, Observable obs) {
  check_normalized(psi);
  check_boundary(psi);
  const Grid& g = psi.grid();
  const double h = g.spacing();
  const auto& a = psi.amplitudes();
  const Eigen::ArrayXd x = g.positions();
  const Eigen::ArrayXd dens = a.array().abs2();
  switch (obs) {
    case Observable::X: return (x * dens).sum() * h;
    case Observable::X2: return (x * x * dens).sum() * h;
    case Observable::P: return inner(psi, apply_momentum(psi)).real();
    case Observable::P2: {
      // <p^2> = sum k^2 |psi_k|^2, including the Nyquist bin.
      return 2.0 * inner(psi, apply_kinetic(psi, 1.0)).real();
    }
    case Observable::SymXP: {
      const WaveFunction ppsi = apply_momentum(psi);
      return (a.conjugate().array() * x * ppsi.amplitudes().array()).sum().real() * h;
    }
  }
  throw std::invalid_argument("unknown observable");
}

/// tr(O rho) for a trace-normalized density matrix.
inline double expectation(const DensityMatrix& rho, Observable obs) {
  check_normalized(rho);
  check_boundary(rho);
  const Grid& g = rho.grid();
  const double h = g.spacing();
  const Eigen::ArrayXd x = g.positions();
  const Eigen::ArrayXd diag = rho.entries().diagonal().real().array();
  switch (obs) {
    case Observable::X: return (x * diag).sum() * h;
    case Observable::X2: return (x * x * diag).sum() * h;
    case Observable::P: return momentum_columns(g, rho.entries()).diagonal().sum().real() * h;
    case Observable::P2: return 2.0 * kinetic_columns(g, rho.entries(), 1.0).diagonal().sum().real() * h;
    case Observable::SymXP: {
      // Re tr(x p rho): row j of p rho weighted by x_j.
      const CMatrix prho = momentum_columns(g, rho.entries());
      return (x * prho.diagonal().real().array()).sum() * h;
    }
  }
  throw std::invalid_argument("unknown observable");
}

/// Position variance <x^2> - <x>^2.
template <class State>
double variance_x(const State& s) {
  const double m1 = expectation(s, Observable::X);
  return expectation(s, Observable::X2) - m1 * m1;
}

template <class State>
double variance_p(const State& s) {
  const double m1 = expectation(s, Observable::P);
  return expectation(s, Observable::P2) - m1 * m1;
}

/// tr(A B) for two kernels on the same grid.
inline cplx trace_product(const DensityMatrix& a, const DensityMatrix& b) {
  require_same_grid(a.grid(), b.grid());
  const double h = a.grid().spacing();
  return a.entries().cwiseProduct(b.entries().transpose()).sum() * h * h;
}

inline double purity(const DensityMatrix& rho) { return trace_product(rho, rho).real(); }

/// S = 1 - tr rho^2.
inline double linear_entropy(const DensityMatrix& rho) { return 1.0 - purity(rho); }

/// Hilbert-Schmidt distance sqrt(tr (a-b)^dagger (a-b)).
inline double hs_distance(const DensityMatrix& a, const DensityMatrix& b) {
  require_same_grid(a.grid(), b.grid());
  return (a.entries() - b.entries()).norm() * a.grid().spacing();
}

/// Hilbert-Schmidt norm of a kernel matrix on grid g.
inline double hs_norm(const Grid& g, const CMatrix& a) { return a.norm() * g.spacing(); }

/// Integer circular shift of a state by `cells` grid points towards negative x.
inline WaveFunction shift_cells(const WaveFunction& psi, long long cells) {
  const auto n = static_cast<long long>(psi.size());
  long long s = cells % n;
  if (s < 0) s += n;
  CVector out(psi.amplitudes().size());
  for (long long j = 0; j < n; ++j) out[j] = psi.amplitudes()[(j + s) % n];
  return {psi.grid(), std::move(out)};
}

}  // namespace pointerlab
