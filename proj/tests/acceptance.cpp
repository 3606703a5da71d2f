// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero if any fail.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "pointerlab/cli/app.hpp"
#include "pointerlab/pointerlab.hpp"

using namespace pointerlab;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

unsigned worker_count() { return std::max(1u, std::thread::hardware_concurrency()); }

const ModelParams kUnit(1.0, 1.0);

// 1. Sieve optimum from the constrained scan vs the closed form.
Verdict sieve_optimum() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> logu(std::log(0.05), std::log(20.0));
  double worst = 0.0;
  for (int i = 0; i < 5; ++i) {
    const ModelParams p(std::exp(logu(rng)), std::exp(logu(rng)));
    const AlphaParam got = sieve_optimize(p).alpha;
    const AlphaParam want = sieve_alpha(p.D, p.m);
    worst = std::max(worst, std::abs(got.value() - want.value()) / std::abs(want.value()));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {worst <= 1e-6 && secs < 1.0, fmt("max rel err %.2e over 5 (D,m), %.3f s", worst, secs)};
}

// 2. det D vanishes at the sieve optimum; q(alpha) = -16 m^2 a_R^2 det D(alpha).
Verdict determinant_boundary() {
  double det_worst = 0.0;
  for (auto [D, m] : {std::pair{1.0, 1.0}, std::pair{0.3, 2.0}, std::pair{5.0, 0.1}}) {
    const ModelParams p(m, D);
    det_worst = std::max(det_worst, std::abs(diffusion_matrix(sieve_alpha(D, m), p).det()));
  }
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double rel_worst = 0.0;
  int admissible = 0;
  for (int i = 0; i < 100; ++i) {
    const ModelParams p(0.1 + 5.0 * u(rng), 0.1 + 5.0 * u(rng));
    const double phi = -std::numbers::pi / 2.0 * (0.02 + 0.96 * u(rng));
    const double r = std::sqrt(-8.0 * std::sin(2.0 * phi) * (0.05 + 0.9 * u(rng)));
    const double s = std::sqrt(p.D * p.m);
    const AlphaParam a(s * r * std::cos(phi), s * r * std::sin(phi));
    const DiffusionMatrix dm = diffusion_matrix(a, p);
    admissible += dm.admissible();
    const double q = det_condition(a, p);
    const double rhs = -16.0 * p.m * p.m * a.re() * a.re() * dm.det();
    rel_worst = std::max(rel_worst, std::abs(q - rhs) / std::max(std::abs(q), std::abs(rhs)));
  }
  return {det_worst <= 1e-9 && rel_worst <= 1e-9 && admissible == 100,
          fmt("|det D(alpha_s)| = %.2e, q identity max rel err %.2e, %d/100 admissible", det_worst, rel_worst,
              admissible)};
}

// 3. The fiducial state is stationary under the drift.
Verdict stationarity() {
  const Grid g(256, 20.0 * std::pow(2.0, -0.25));
  const auto psi = make_pointer_state(g, fiducial_alpha(1, 1), {});
  const auto drift = drift_rhs(psi, kUnit);
  const double proj = hs_norm(g, projector_derivative(psi, drift));
  const CVector want = -kI * std::sqrt(1.0 / 8.0) * psi.amplitudes();
  const double state = (drift.amplitudes() - want).norm() * std::sqrt(g.spacing());
  return {proj <= 1e-6 && state <= 1e-6, fmt("projector-derivative HS %.2e, state residual %.2e", proj, state)};
}

// 4. Drift flow pulls a mis-sized Gaussian onto the fiducial width parameter.
Verdict drift_convergence() {
  const AlphaParam fid = fiducial_alpha(1, 1);
  std::string detail;
  bool ok = true;
  for (double factor : {2.0, 0.5}) {
    const Grid g(512, factor > 1.0 ? 20.0 : 30.0);
    const auto psi0 = make_pointer_state(g, AlphaParam(factor * fid.re(), 0.0), {});
    const double dt = max_stable_dt(g, kUnit);
    const auto fit = evolve_drift(psi0, kUnit, 10.0, dt).fits.back();
    const double err = std::abs(fit.alpha.value() - fid.value()) / std::abs(fid.value());
    ok = ok && err <= 0.01;
    detail += fmt("a_R x%.1f: alpha(10) = %.5f%+.5fi, rel err %.2e; ", factor, fit.alpha.re(), fit.alpha.im(), err);
  }
  return {ok, detail.substr(0, detail.size() - 2)};
}

// 5. C and D are proportional at the fiducial alpha.
Verdict proportionality() {
  bool ok = true;
  std::string detail;
  for (auto [D, m] : {std::pair{1.0, 1.0}, std::pair{0.5, 2.0}}) {
    const ModelParams p(m, D);
    const auto r = proportionality_check(fiducial_alpha(D, m), p);
    ok = ok && r.is_proportional && r.residual <= 1e-9;
    detail += fmt("D=%g m=%g: c = %.7f (sqrt(m/2D) = %.7f, m/2D = %.7f), spread %.1e; ", D, m, r.constant,
                  std::sqrt(m / (2 * D)), m / (2 * D), r.residual);
  }
  return {ok, detail.substr(0, detail.size() - 2)};
}

// 6. Finite-difference initial entropy production against D sigma^2.
Verdict entropy_rate() {
  const Grid g(512, 20.0);
  const double sigma0 = std::pow(2.0, -0.25);
  bool ok = true;
  double worst_alt = 0.0;
  std::string detail;
  for (double s : {0.5 * sigma0, sigma0, 2.0 * sigma0}) {
    const auto psi = make_pointer_state(g, AlphaParam(1.0 / (s * s), 0.0), {});
    const double fd = entropy_rate_finite_difference(psi, kUnit);
    const double ratio = fd / (kUnit.D * s * s);
    ok = ok && std::abs(ratio - 1.0) <= 0.01;
    worst_alt = std::max(worst_alt, std::abs(fd / (2.0 * kUnit.D * s * s) - 1.0));
    detail += fmt("sigma=%.4f FD/(D sigma^2)=%.4f; ", s, ratio);
  }
  detail += fmt("FD vs 2 D sigma^2 max rel dev %.2e", worst_alt);
  return {ok, detail};
}

// 7. Closed-form weight evolution vs the moment ODE, and Langevin increment covariance.
Verdict fokker_planck() {
  double worst = 0.0;
  for (const auto& a : {fiducial_alpha(1, 1), sieve_alpha(1, 1), AlphaParam(2.0, -1.5)}) {
    const DiffusionMatrix dm = diffusion_matrix(a, kUnit);
    const GaussianWeight w0{{0.3, -0.2}, {0.5, 0.1, 0.4}};
    for (int k = 0; k <= 20; ++k) {
      const double t = 0.5 * k;
      const SymMatrix2 closed = evolve_weight(w0, dm, 1.0, t).cov;
      const SymMatrix2 ode = covariance_moment_ode(w0.cov, dm, 1.0, t, 256);
      worst = std::max(worst, closed.max_abs_diff(ode) / std::max(1.0, std::abs(closed.xx)));
    }
  }
  const DiffusionMatrix dm = diffusion_matrix(fiducial_alpha(1, 1), kUnit);
  const double dt = 1e-2;
  const int n = 100000;
  std::mt19937_64 rng(17);
  double sxx = 0, sxp = 0, spp = 0;
  for (int i = 0; i < n; ++i) {
    const PhasePoint g = langevin_step({0.0, 0.0}, dm, 1.0, dt, rng);
    sxx += g.x_bar * g.x_bar;
    sxp += g.x_bar * g.p_bar;
    spp += g.p_bar * g.p_bar;
  }
  const SymMatrix2 want = dm.entries * dt;
  const double z_xx = std::abs(sxx / n - want.xx) / std::sqrt(2.0 * want.xx * want.xx / n);
  const double z_xp = std::abs(sxp / n - want.xp) / std::sqrt((want.xx * want.pp + want.xp * want.xp) / n);
  const double z_pp = std::abs(spp / n - want.pp) / std::sqrt(2.0 * want.pp * want.pp / n);
  const double z = std::max({z_xx, z_xp, z_pp});
  return {worst <= 1e-9 && z <= 3.0, fmt("closed form vs ODE max err %.2e on t in [0,10]; Langevin max |z| = %.2f", worst, z)};
}

// 8. Reconstruction commutes with evolution.
Verdict reconstruction() {
  const auto start = std::chrono::steady_clock::now();
  const Grid g(256, 32.0);
  const AlphaParam a = fiducial_alpha(1, 1);
  const double t = 2.0;
  const GaussianWeight w0{{0.0, 0.0}, {0.0, 0.0, 0.0}};
  const DensityMatrix rho0 = reconstruct_rho(w0, a, g);
  MasterOptions opts;
  opts.monitor_positivity = false;
  const DensityMatrix evolved = evolve_master(rho0, kUnit, t, max_stable_dt(g, kUnit), opts).final_state();
  const DensityMatrix other = reconstruct_rho(evolve_weight(w0, diffusion_matrix(a, kUnit), 1.0, t), a, g);
  const double d = hs_distance(evolved, other);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {d <= 1e-3 && secs < 120.0, fmt("HS distance %.2e at t = 2, %.1f s", d, secs)};
}

// 9. QSD ensemble mean reproduces the master equation in both noise modes.
Verdict unraveling() {
  const Grid g(256, 24.0);
  const AlphaParam a = fiducial_alpha(1, 1);
  const auto psi0 = make_pointer_state(g, a, {});
  const double dt = max_stable_dt(g, kUnit);
  MasterOptions mopts;
  mopts.monitor_positivity = false;
  const DensityMatrix rho = evolve_master(DensityMatrix::pure(psi0), kUnit, 1.0, dt, mopts).final_state();
  bool ok = true;
  std::string detail;
  for (NoiseMode mode : {NoiseMode::Standard, NoiseMode::AlphaGeneral}) {
    NoiseSpec spec;
    spec.mode = mode;
    spec.alpha = a;
    spec.D = kUnit.D;
    TrajectoryOptions topts;
    topts.record_stride = 1000000;
    const auto runs = run_ensemble(psi0, kUnit, spec, 9, 1000, 1.0, dt, topts, worker_count());
    std::vector<WaveFunction> finals;
    for (const auto& r : runs) finals.push_back(*r.final_state);
    const double d = hs_distance(ensemble_average(finals), rho);
    const double bound = bootstrap_hs_bound(finals, 200, 99);
    ok = ok && d <= 3.0 * bound;
    detail += fmt("%s: HS %.4f vs 3x bootstrap %.4f; ", mode == NoiseMode::Standard ? "standard" : "alpha_general", d,
                  3.0 * bound);
  }
  return {ok, detail.substr(0, detail.size() - 2)};
}

// 10. Cat states localize onto pointer states with unbiased branch selection.
Verdict localization() {
  // Wide enough that recentering a partially split cat keeps the minor lump off the boundary band.
  const Grid g(384, 32.0);
  const AlphaParam a = fiducial_alpha(1, 1);
  const double s0 = 1.0 / std::sqrt(a.re());
  const auto lump = [&](double x) { return make_pointer_state(g, a, {x, 0.0}).amplitudes(); };
  const WaveFunction cat = WaveFunction(g, lump(5.0 * s0) + lump(-5.0 * s0)).normalized();
  NoiseSpec spec;
  spec.D = kUnit.D;
  TrajectoryOptions opts;
  opts.record_stride = 200;
  opts.recenter = true;
  opts.keep_final = false;
  const std::size_t n = 400;
  const auto runs = run_ensemble(cat, kUnit, spec, 10, n, 10.0, max_stable_dt(g, kUnit), opts, worker_count());
  std::vector<double> fid, var;
  int plus = 0, undecided = 0;
  for (const auto& r : runs) {
    fid.push_back(r.gaussian_fidelity.back());
    var.push_back(r.variances.back());
    const auto it = std::find_if(r.gaussian_fidelity.begin(), r.gaussian_fidelity.end(),
                                 [](double f) { return f >= 0.99; });
    if (it == r.gaussian_fidelity.end()) {
      ++undecided;
      continue;
    }
    plus += r.centers[static_cast<std::size_t>(it - r.gaussian_fidelity.begin())].x_bar > 0.0;
  }
  auto median = [](std::vector<double> v) {
    std::nth_element(v.begin(), v.begin() + static_cast<long>(v.size() / 2), v.end());
    return v[v.size() / 2];
  };
  const double med_fid = median(fid), med_var = median(var);
  const double decided = static_cast<double>(n - static_cast<std::size_t>(undecided));
  const double z = std::abs(plus - decided / 2.0) / (0.5 * std::sqrt(decided));
  const double var_err = std::abs(med_var * std::sqrt(2.0) - 1.0);
  return {med_fid >= 0.99 && z <= 3.0 && undecided == 0 && var_err <= 0.1,
          fmt("median fidelity %.5f; branches +%d/-%d (undecided %d, |z| = %.2f); median var_x %.4f vs %.4f", med_fid,
              plus, static_cast<int>(decided) - plus, undecided, z, med_var, 1.0 / std::sqrt(2.0))};
}

// 11. Noise increment moments in both modes.
Verdict noise_moments() {
  const double dt = 1e-3;
  const int n = 1000000;
  bool ok = true;
  std::string detail;
  for (NoiseMode mode : {NoiseMode::Standard, NoiseMode::AlphaGeneral}) {
    NoiseSpec spec;
    spec.mode = mode;
    spec.alpha = fiducial_alpha(1, 1);
    spec.D = 1.0;
    NoiseSampler sampler(spec, 1.0);
    Engine rng = make_engine(mode == NoiseMode::Standard ? 21 : 22);
    cplx sum = 0.0, sum_zz = 0.0, sum_zz2 = 0.0;
    double sum_a = 0.0, sum_a2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const cplx z = sampler(dt, rng);
      sum += z;
      sum_a += std::norm(z);
      sum_a2 += std::norm(z) * std::norm(z);
      sum_zz += z * z;
      sum_zz2 += std::norm(z * z);
    }
    const double mean_a = sum_a / n;
    const double se_a = std::sqrt((sum_a2 / n - mean_a * mean_a) / n);
    const double se_zz = std::sqrt(sum_zz2.real() / n / n);
    const double z_a = std::abs(mean_a - spec.D * dt) / se_a;
    const double z_zz = std::abs(sum_zz / static_cast<double>(n)) / se_zz;
    const double z_mean = std::abs(sum / static_cast<double>(n)) / std::sqrt(spec.D * dt / n);
    ok = ok && z_a <= 3.0 && z_zz <= 3.0 && z_mean <= 3.0;
    detail += fmt("%s: |z| <dz dz*> %.2f, <dz dz> %.2f, <dz> %.2f; ",
                  mode == NoiseMode::Standard ? "standard" : "alpha_general", z_a, z_zz, z_mean);
  }
  return {ok, detail.substr(0, detail.size() - 2)};
}

// 12. Order-of-magnitude physical scales for a dust particle.
Verdict units() {
  const auto s = cli::convert_units(cli::UnitContext{});
  const bool ok = std::abs(std::log10(s.sigma0_cm / 1e-11)) <= 1.0 && std::abs(std::log10(s.t_D_s / 1e-10)) <= 1.0;
  return {ok, fmt("sigma0 = %.3e cm, t_D = %.3e s", s.sigma0_cm, s.t_D_s)};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

// 13. Re-running every subcommand from its manifest reproduces every artifact byte for byte.
Verdict determinism() {
  const fs::path root = fs::temp_directory_path() / "pointerlab_acceptance_rerun";
  fs::remove_all(root);
  fs::create_directories(root);
  cli::RunConfig c;
  c.time.t_final = 0.2;
  c.time.record_stride = 20;
  c.ensemble.n_traj = 8;
  c.reconstruct_nodes = {16, 32};
  { std::ofstream(root / "run.json") << cli::json(c).dump(2); }
  const std::string tool = POINTERLAB_TOOL_PATH;
  std::size_t files = 0, mismatches = 0;
  std::string failures;
  for (const std::string sub : {"evolve-master", "evolve-drift", "qsd", "fokker-planck", "reconstruct", "sieve",
                                "robustness", "units"}) {
    const fs::path a = root / (sub + "_a"), b = root / (sub + "_b");
    const std::string first =
        tool + " " + sub + " --config " + (root / "run.json").string() + " --seed 4242 --threads 3 --out " + a.string();
    const std::string again = tool + " " + sub + " --config " + (a / "manifest.json").string() + " --out " + b.string();
    if (std::system((first + " > /dev/null").c_str()) != 0 || std::system((again + " > /dev/null").c_str()) != 0) {
      failures += sub + " (run failed) ";
      ++mismatches;
      continue;
    }
    for (const auto& e : fs::directory_iterator(a)) {
      ++files;
      if (!fs::exists(b / e.path().filename()) || slurp(e.path()) != slurp(b / e.path().filename())) {
        ++mismatches;
        failures += sub + "/" + e.path().filename().string() + " ";
      }
    }
  }
  return {mismatches == 0 && files > 0,
          fmt("%zu artifacts over 8 subcommands, %zu mismatches %s", files, mismatches, failures.c_str())};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"sieve optimum", sieve_optimum},
      {"determinant boundary", determinant_boundary},
      {"stationarity", stationarity},
      {"drift convergence", drift_convergence},
      {"proportionality", proportionality},
      {"entropy rate", entropy_rate},
      {"Fokker-Planck consistency", fokker_planck},
      {"reconstruction identity", reconstruction},
      {"unraveling", unraveling},
      {"localization", localization},
      {"noise moments", noise_moments},
      {"units", units},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += !v.pass;
    std::printf("%s %2zu %s: %s [%.1f s]\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, v.detail.c_str(),
                secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
