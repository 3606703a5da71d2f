#pragma once

#include <cmath>
#include <stdexcept>

namespace pointerlab::cli {

/// CGS context for restoring hbar in the dimensionless results.
struct UnitContext {
  double hbar = 1.0546e-27;  // erg s
  double mass_cgs = 1e-14;   // g
  double D_cgs = 1e32;       // cm^-2 s^-1
};

struct PhysicalScales {
  double sigma0_cm;
  double t_D_s;
};

/// sigma0 = (D m / hbar)^{-1/4} and t_D = sqrt(m / (hbar D)). With hbar restored the
/// master equation reads d rho/dt = -(i/hbar)[p^2/2m, rho] - (D/2)[x,[x,rho]], so the
/// balance hbar/(m sigma^2) ~ D sigma^2 fixes both scales.
inline PhysicalScales convert_units(const UnitContext& ctx) {
  if (!(ctx.hbar > 0.0) || !(ctx.mass_cgs > 0.0) || !(ctx.D_cgs > 0.0))
    throw std::invalid_argument("units: hbar, mass and D must be > 0");
  return {std::pow(ctx.D_cgs * ctx.mass_cgs / ctx.hbar, -0.25), std::sqrt(ctx.mass_cgs / (ctx.hbar * ctx.D_cgs))};
}

}  // namespace pointerlab::cli
