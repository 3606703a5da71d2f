#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>

namespace pointerlab {

/// One classical RK4 step for y' = f(y) on any vector-space-like State
/// (needs State + State and double * State).
template <class State, class Rhs>
State rk4_step(const State& y, double dt, Rhs&& f) {
  const State k1 = f(y);
  const State k2 = f(y + (0.5 * dt) * k1);
  const State k3 = f(y + (0.5 * dt) * k2);
  const State k4 = f(y + dt * k3);
  return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Number of equal steps covering [0, t_final] with step no larger than dt.
inline std::size_t step_count(double t_final, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
  if (!(t_final >= 0.0)) throw std::invalid_argument("t_final must be >= 0");
  return static_cast<std::size_t>(std::ceil(t_final / dt - 1e-9));
}

struct ScalarOptimum {
  double arg;
  double value;
  int iterations;
};

/// Golden-section search for the maximum of a unimodal f on [a, b].
template <class F>
ScalarOptimum golden_section_maximize(F&& f, double a, double b, double tol = 1e-12, int max_iter = 500) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  int it = 0;
  for (; it < max_iter && std::abs(b - a) > tol; ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  const double x = 0.5 * (a + b);
  return {x, f(x), it};
}

}  // namespace pointerlab
