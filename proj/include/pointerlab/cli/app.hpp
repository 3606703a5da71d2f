#pragma once

// Subcommand implementations for the `pointerlab` executable. Every subcommand
// writes its artifacts plus manifest.json into the output directory; the same
// config and seed always produce byte-identical files.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "pointerlab/cli/config.hpp"
#include "pointerlab/cli/units.hpp"
#include "pointerlab/master.hpp"
#include "pointerlab/phasespace.hpp"
#include "pointerlab/pointer_gaussian.hpp"
#include "pointerlab/qsd.hpp"
#include "pointerlab/robustness.hpp"

namespace pointerlab::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kInternal = 1, kInvalidConfig = 2, kNumericalGuard = 3 };

struct RunOptions {
  std::filesystem::path out_dir;   // empty: config.outputs.directory
  std::string format;              // empty: config.outputs.formats.front()
  unsigned threads = 1;
  std::optional<std::uint64_t> seed;
};

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"evolve-master", "evolve-drift", "qsd",    "fokker-planck",
                                              "reconstruct",   "sieve",        "robustness", "units"};
  return names;
}

/// Column-labelled numeric table; labels carry units in brackets.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class ArtifactWriter {
public:
  ArtifactWriter(std::filesystem::path dir, std::string table_format)
      : dir_(std::move(dir)), format_(std::move(table_format)) {
    std::filesystem::create_directories(dir_);
  }

  /// Writes `stem`.csv or `stem`.json depending on the table format.
  void table(const std::string& stem, const Table& t) {
    std::ostringstream os;
    if (format_ == "json") {
      json j{{"columns", t.columns}, {"rows", t.rows}};
      os << j.dump(2) << '\n';
      write(stem + ".json", os.str());
      return;
    }
    for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
    os << '\n';
    for (const auto& r : t.rows) {
      for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << format_number(r[i]);
      os << '\n';
    }
    write(stem + ".csv", os.str());
  }

  void document(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

  const std::map<std::string, std::string>& hashes() const noexcept { return hashes_; }

private:
  void write(const std::string& name, const std::string& content) {
    std::ofstream f(dir_ / name, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + (dir_ / name).string());
    f << content;
    hashes_[name] = fnv1a_hex(content);
  }

  std::filesystem::path dir_;
  std::string format_;
  std::map<std::string, std::string> hashes_;
};

// ---------------------------------------------------------------------------
// Resolution of config defaults into library objects

struct Resolved {
  ModelParams params;
  Grid grid;
  AlphaParam alpha;
  double dt;
};

inline AlphaParam resolve_alpha(const RunConfig& c) {
  switch (c.alpha.mode) {
    case AlphaMode::Fiducial: return fiducial_alpha(c.model.D, c.model.m);
    case AlphaMode::Sieve: return sieve_alpha(c.model.D, c.model.m);
    case AlphaMode::Explicit: return {c.alpha.re, c.alpha.im};
  }
  return fiducial_alpha(c.model.D, c.model.m);
}

inline Resolved resolve(const RunConfig& c) {
  const ModelParams params(c.model.m, c.model.D);
  const double sigma0 = equilibrium_width(c.model.D, c.model.m, fiducial_alpha(c.model.D, c.model.m));
  const double length = c.grid.length > 0.0 ? c.grid.length : 20.0 * sigma0;
  const Grid grid(c.grid.n_points, length);
  const double dt = c.time.dt > 0.0 ? c.time.dt : max_stable_dt(grid, params);
  return {params, grid, resolve_alpha(c), dt};
}

inline WaveFunction initial_state(const RunConfig& c, const Resolved& r) {
  const auto& in = c.initial;
  if (in.kind == "cat") {
    const WaveFunction a = make_pointer_state(r.grid, r.alpha, {in.x - 0.5 * in.separation, in.p});
    const WaveFunction b = make_pointer_state(r.grid, r.alpha, {in.x + 0.5 * in.separation, in.p});
    return WaveFunction(r.grid, a.amplitudes() + b.amplitudes()).normalized();
  }
  if (in.kind == "gaussian") return make_pointer_state(r.grid, AlphaParam(1.0 / (in.width * in.width), 0.0), {in.x, in.p});
  return make_pointer_state(r.grid, r.alpha, {in.x, in.p});
}

inline json alpha_json(const AlphaParam& a) { return {{"re", a.re()}, {"im", a.im()}}; }
inline json sym_json(const SymMatrix2& s) { return json::array({json::array({s.xx, s.xp}), json::array({s.xp, s.pp})}); }

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---------------------------------------------------------------------------
// Subcommands

namespace detail {

inline json cmd_evolve_master(const RunConfig& c, const Resolved& r, ArtifactWriter& out, std::ostream& log) {
  const DensityMatrix rho0 = DensityMatrix::pure(initial_state(c, r));
  Table t{{"t[time]", "linear_entropy[1]", "purity[1]", "mean_x[length]", "mean_p[momentum]", "var_x[length^2]",
           "var_p[momentum^2]"},
          {}};
  MasterOptions opts;
  opts.record_every = c.time.record_stride;
  auto observer = [&](double time, const DensityMatrix& rho) {
    const DensityMatrix n = rho.normalized();
    t.rows.push_back({time, linear_entropy(rho), purity(rho), expectation(n, Observable::X),
                      expectation(n, Observable::P), variance_x(n), variance_p(n)});
  };
  const MasterSeries series = evolve_master(rho0, r.params, c.time.t_final, r.dt, opts, observer);
  out.table("master", t);
  const DensityMatrix& fin = series.final_state();
  json summary{{"t_final", c.time.t_final},
               {"dt", r.dt},
               {"final_trace", fin.trace()},
               {"final_hermiticity_error", fin.hermiticity_error()},
               {"final_linear_entropy", linear_entropy(fin)},
               {"warnings", series.warnings}};
  out.document("master_summary.json", summary);
  log << "evolve-master: S(t_final) = " << format_number(linear_entropy(fin)) << "\n";
  return summary;
}

inline json cmd_evolve_drift(const RunConfig& c, const Resolved& r, ArtifactWriter& out, std::ostream& log) {
  DriftOptions opts;
  opts.record_every = c.time.record_stride;
  const DriftSeries s = evolve_drift(initial_state(c, r), r.params, c.time.t_final, r.dt, opts);
  Table t{{"t[time]", "alpha_re[length^-2]", "alpha_im[length^-2]", "fidelity[1]", "mean_x[length]",
           "mean_p[momentum]", "var_x[length^2]"},
          {}};
  for (std::size_t i = 0; i < s.times.size(); ++i) {
    const auto& f = s.fits[i];
    t.rows.push_back({s.times[i], f.alpha.re(), f.alpha.im(), f.fidelity, f.gamma.x_bar, f.gamma.p_bar,
                      1.0 / f.alpha.re()});
  }
  out.table("drift", t);
  const AlphaParam target = fiducial_alpha(c.model.D, c.model.m);
  const AlphaParam fin = s.fits.back().alpha;
  const double rel = std::abs(fin.value() - target.value()) / std::abs(target.value());
  json summary{{"final_alpha", alpha_json(fin)},
               {"fiducial_alpha", alpha_json(target)},
               {"relative_error", rel},
               {"final_fidelity", s.fits.back().fidelity}};
  out.document("drift_summary.json", summary);
  log << "evolve-drift: alpha(t_final) = " << format_number(fin.re()) << " " << format_number(fin.im())
      << "i, relative error to fiducial " << format_number(rel) << "\n";
  return summary;
}

inline json cmd_qsd(const RunConfig& c, const Resolved& r, ArtifactWriter& out, std::ostream& log,
                    unsigned threads) {
  NoiseSpec spec;
  spec.mode = c.noise.mode == "alpha_general" ? NoiseMode::AlphaGeneral : NoiseMode::Standard;
  spec.alpha = r.alpha;
  spec.D = c.model.D;
  TrajectoryOptions opts;
  opts.record_stride = c.time.record_stride;
  opts.recenter = true;
  const auto records = run_ensemble(initial_state(c, r), r.params, spec, c.ensemble.master_seed,
                                    c.ensemble.n_traj, c.time.t_final, r.dt, opts, threads);

  std::vector<double> fid, var, xs, ps;
  std::vector<std::uint64_t> seeds;
  std::size_t plus = 0, minus = 0, undecided = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& rec = records[i];
    Table t{{"t[time]", "mean_x[length]", "mean_p[momentum]", "var_x[length^2]", "fidelity[1]"}, {}};
    for (std::size_t k = 0; k < rec.times.size(); ++k)
      t.rows.push_back(
          {rec.times[k], rec.centers[k].x_bar, rec.centers[k].p_bar, rec.variances[k], rec.gaussian_fidelity[k]});
    char stem[32];
    std::snprintf(stem, sizeof stem, "traj_%05zu", i);
    out.table(stem, t);
    fid.push_back(rec.gaussian_fidelity.back());
    var.push_back(rec.variances.back());
    xs.push_back(rec.centers.back().x_bar);
    ps.push_back(rec.centers.back().p_bar);
    seeds.push_back(rec.seed);
    // Branch: sign of <x> relative to the initial center when the state first looks Gaussian.
    const auto it = std::find_if(rec.gaussian_fidelity.begin(), rec.gaussian_fidelity.end(),
                                 [](double f) { return f >= 0.99; });
    if (it == rec.gaussian_fidelity.end()) {
      ++undecided;
    } else {
      const auto k = static_cast<std::size_t>(it - rec.gaussian_fidelity.begin());
      (rec.centers[k].x_bar >= c.initial.x ? plus : minus)++;
    }
  }
  const double n = static_cast<double>(records.size());
  double mx = 0, mp = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i] / n, mp += ps[i] / n;
  SymMatrix2 cov{};
  for (std::size_t i = 0; i < xs.size(); ++i) {
    cov.xx += (xs[i] - mx) * (xs[i] - mx);
    cov.xp += (xs[i] - mx) * (ps[i] - mp);
    cov.pp += (ps[i] - mp) * (ps[i] - mp);
  }
  if (records.size() > 1) cov = cov * (1.0 / (n - 1.0));
  json summary{{"n_traj", records.size()},
               {"mode", c.noise.mode},
               {"master_seed", c.ensemble.master_seed},
               {"alpha", alpha_json(r.alpha)},
               {"dt", r.dt},
               {"t_final", c.time.t_final},
               {"median_final_fidelity", median(fid)},
               {"median_final_var_x", median(var)},
               {"stationary_var_x", 1.0 / std::sqrt(2.0 * c.model.D * c.model.m)},
               {"final_center_mean", {mx, mp}},
               {"final_center_covariance", sym_json(cov)},
               {"branches", {{"plus", plus}, {"minus", minus}, {"undecided", undecided}}},
               {"seeds", seeds}};
  out.document("ensemble_summary.json", summary);
  log << "qsd: " << records.size() << " trajectories, median final fidelity " << format_number(median(fid))
      << ", median var_x " << format_number(median(var)) << "\n";
  return summary;
}

inline json cmd_fokker_planck(const RunConfig& c, const Resolved& r, ArtifactWriter& out, std::ostream& log) {
  const DiffusionMatrix dmat = diffusion_matrix(r.alpha, r.params);
  const GaussianWeight w0{{c.initial.x, c.initial.p}, {}};
  Table t{{"t[time]", "mean_x[length]", "mean_p[momentum]", "cov_xx[length^2]", "cov_xp[length*momentum]",
           "cov_pp[momentum^2]", "ode_max_diff[1]"},
          {}};
  const std::size_t steps = step_count(c.time.t_final, r.dt);
  const double h = c.time.t_final / static_cast<double>(std::max<std::size_t>(steps, 1));
  std::vector<std::size_t> marks;
  for (std::size_t s = 0; s <= steps; s += c.time.record_stride) marks.push_back(s);
  if (marks.back() != steps) marks.push_back(steps);
  for (std::size_t s : marks) {
    const double time = static_cast<double>(s) * h;
    const GaussianWeight w = evolve_weight(w0, dmat, c.model.m, time);
    const SymMatrix2 ode = covariance_moment_ode(w0.cov, dmat, c.model.m, time);
    t.rows.push_back({time, w.mean.x_bar, w.mean.p_bar, w.cov.xx, w.cov.xp, w.cov.pp, w.cov.max_abs_diff(ode)});
  }
  out.table("fokker_planck", t);
  json summary{{"alpha", alpha_json(r.alpha)},
               {"diffusion_matrix", sym_json(dmat.entries)},
               {"det", dmat.det()},
               {"admissible", dmat.admissible()}};
  out.document("fokker_planck_summary.json", summary);
  log << "fokker-planck: det D = " << format_number(dmat.det()) << (dmat.admissible() ? "" : " (inadmissible)")
      << "\n";
  return summary;
}

inline json cmd_reconstruct(const RunConfig& c, const Resolved& r, ArtifactWriter& out, std::ostream& log) {
  const DiffusionMatrix dmat = diffusion_matrix(r.alpha, r.params);
  const GaussianWeight w0{{c.initial.x, c.initial.p}, {}};
  const DensityMatrix rho0 = reconstruct_rho(w0, r.alpha, r.grid);
  MasterOptions mopts;
  mopts.monitor_positivity = false;
  const DensityMatrix master = evolve_master(rho0, r.params, c.time.t_final, r.dt, mopts).final_state();
  const GaussianWeight wt = evolve_weight(w0, dmat, c.model.m, c.time.t_final);
  Table t{{"nodes_per_axis[1]", "hs_distance[1]"}, {}};
  double last = 0.0;
  for (std::size_t nodes : c.reconstruct_nodes) {
    ReconstructOptions ro;
    ro.nodes_per_axis = nodes;
    ro.trace_tol = 1e-2;  // coarse rows are part of the convergence table
    last = hs_distance(reconstruct_rho(wt, r.alpha, r.grid, ro), master);
    t.rows.push_back({static_cast<double>(nodes), last});
  }
  out.table("reconstruct", t);
  json summary{{"t_final", c.time.t_final}, {"weight_covariance", sym_json(wt.cov)}, {"final_hs_distance", last}};
  out.document("reconstruct_summary.json", summary);
  log << "reconstruct: HS distance at finest quadrature " << format_number(last) << "\n";
  return summary;
}

inline json cmd_sieve(const RunConfig& c, const Resolved& r, ArtifactWriter& out, std::ostream& log) {
  const SieveResult s = sieve_optimize(r.params, c.sieve_resolution);
  const AlphaParam exact = sieve_alpha(c.model.D, c.model.m);
  const DiffusionMatrix dmat = diffusion_matrix(s.alpha, r.params);
  const double rel = std::abs(s.alpha.value() - exact.value()) / std::abs(exact.value());
  json summary{{"alpha", alpha_json(s.alpha)},
               {"closed_form", alpha_json(exact)},
               {"relative_error", rel},
               {"phi", s.phi},
               {"radius", s.radius},
               {"constraint_residual", s.constraint_residual},
               {"det_D", dmat.det()},
               {"det_condition", det_condition(s.alpha, r.params)}};
  out.document("sieve.json", summary);
  char line[160];
  std::snprintf(line, sizeof line, "alpha_s = %.7f %c %.7fi\n", s.alpha.re(), s.alpha.im() < 0 ? '-' : '+',
                std::abs(s.alpha.im()));
  log << line << "constraint residual = " << format_number(s.constraint_residual)
      << "\ndet D = " << format_number(dmat.det()) << "\n";
  return summary;
}

inline json cmd_robustness(const RunConfig& c, const Resolved& r, ArtifactWriter& out, std::ostream& log) {
  json rows = json::array();
  const std::vector<std::pair<std::string, AlphaParam>> candidates{
      {"fiducial", fiducial_alpha(c.model.D, c.model.m)},
      {"sieve", sieve_alpha(c.model.D, c.model.m)},
      {"config", r.alpha}};
  for (const auto& [name, alpha] : candidates) {
    const WaveFunction psi = make_pointer_state(r.grid, alpha, {c.initial.x, c.initial.p});
    const WaveFunction zero(r.grid, CVector::Zero(static_cast<Eigen::Index>(r.grid.n_points())));
    const double v_drift = hs_speed(psi, drift_rhs(psi, r.params), r.params);
    const double v_static = hs_speed(psi, zero, r.params);
    const ProportionalityResult prop = proportionality_check(alpha, r.params);
    rows.push_back({{"name", name},
                    {"alpha", alpha_json(alpha)},
                    {"v_optimal_drift", v_drift},
                    {"v_frozen", v_static},
                    {"det_condition", det_condition(alpha, r.params)},
                    {"det_D", diffusion_matrix(alpha, r.params).det()},
                    {"proportional", prop.is_proportional},
                    {"proportionality_constant", prop.constant},
                    {"proportionality_residual", prop.residual}});
    log << name << ": v(optimal drift) = " << format_number(v_drift) << ", v(frozen) = " << format_number(v_static)
        << "\n";
  }
  json summary{{"states", rows}};
  out.document("robustness.json", summary);
  return summary;
}

inline json cmd_units(const RunConfig& c, ArtifactWriter& out, std::ostream& log) {
  const PhysicalScales s = convert_units(c.units);
  json summary{{"hbar_erg_s", c.units.hbar},
               {"mass_g", c.units.mass_cgs},
               {"D_cm-2_s-1", c.units.D_cgs},
               {"sigma0_cm", s.sigma0_cm},
               {"t_D_s", s.t_D_s}};
  out.document("units.json", summary);
  log << "sigma0 = " << format_number(s.sigma0_cm) << " cm, t_D = " << format_number(s.t_D_s) << " s\n";
  return summary;
}

}  // namespace detail

/// Reads a RunConfig or a manifest (whose "config" member is used) from disk.
inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config", "cannot open " + path.string());
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config", std::string("invalid JSON: ") + e.what());
  }
  if (j.is_object() && j.contains("config") && j.contains("config_hash")) return parse_config(j.at("config"));
  return parse_config(j);
}

/// Runs one subcommand; returns the process exit code.
inline int run(const std::string& subcommand, RunConfig config, const RunOptions& opts, std::ostream& log,
               std::ostream& err) {
  try {
    if (std::find(subcommands().begin(), subcommands().end(), subcommand) == subcommands().end())
      throw ConfigError("subcommand", "unknown subcommand '" + subcommand + "'");
    if (opts.seed) config.ensemble.master_seed = *opts.seed;
    if (!opts.format.empty()) config.outputs.formats = {opts.format};
    validate(config);
    const std::filesystem::path dir = opts.out_dir.empty() ? std::filesystem::path(config.outputs.directory)
                                                           : opts.out_dir;
    ArtifactWriter out(dir, config.outputs.formats.front());

    if (subcommand == "units") {
      detail::cmd_units(config, out, log);
    } else {
      const Resolved r = resolve(config);
      if (subcommand == "evolve-master") detail::cmd_evolve_master(config, r, out, log);
      else if (subcommand == "evolve-drift") detail::cmd_evolve_drift(config, r, out, log);
      else if (subcommand == "qsd") detail::cmd_qsd(config, r, out, log, std::max(1u, opts.threads));
      else if (subcommand == "fokker-planck") detail::cmd_fokker_planck(config, r, out, log);
      else if (subcommand == "reconstruct") detail::cmd_reconstruct(config, r, out, log);
      else if (subcommand == "sieve") detail::cmd_sieve(config, r, out, log);
      else if (subcommand == "robustness") detail::cmd_robustness(config, r, out, log);
    }

    const json manifest{{"tool", "pointerlab"},
                        {"version", kVersion},
                        {"subcommand", subcommand},
                        {"config", config},
                        {"config_hash", config_hash(config)},
                        {"seed", config.ensemble.master_seed},
                        {"artifacts", out.hashes()}};
    std::ofstream(dir / "manifest.json", std::ios::binary | std::ios::trunc) << manifest.dump(2) << '\n';
    return kOk;
  } catch (const ConfigError& e) {
    err << "invalid config: " << e.what() << "\n";
    return kInvalidConfig;
  } catch (const NumericalError& e) {
    err << "numerical guard: " << e.what() << "\n";
    return kNumericalGuard;
  } catch (const std::invalid_argument& e) {
    err << "invalid config: " << e.what() << "\n";
    return kInvalidConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kInternal;
  }
}

}  // namespace pointerlab::cli
