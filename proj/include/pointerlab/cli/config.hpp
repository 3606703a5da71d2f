#pragma once

// Run configuration for the command-line driver and its JSON form.

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "pointerlab/cli/units.hpp"
#include "pointerlab/errors.hpp"

namespace pointerlab::cli {

using json = nlohmann::json;

enum class AlphaMode { Fiducial, Sieve, Explicit };

struct RunConfig {
  struct Model {
    double m = 1.0;
    double D = 1.0;
  } model;

  struct GridSpec {
    std::size_t n_points = 256;
    double length = 0.0;  // 0: 20 fiducial widths
  } grid;

  struct Time {
    double dt = 0.0;  // 0: largest stable step
    double t_final = 0.5;  // keeps master-equation runs inside the default 20 sigma0 box
    std::size_t record_stride = 100;
  } time;

  struct Alpha {
    AlphaMode mode = AlphaMode::Fiducial;
    double re = 0.0;
    double im = 0.0;
  } alpha;

  struct Initial {
    std::string kind = "pointer";  // pointer | cat | gaussian
    double x = 0.0;
    double p = 0.0;
    double separation = 0.0;  // cat: distance between the two lumps
    double width = 0.0;       // gaussian: position standard deviation (real alpha)
  } initial;

  struct Noise {
    std::string mode = "standard";  // standard | alpha_general
  } noise;

  struct Ensemble {
    std::size_t n_traj = 100;
    std::uint64_t master_seed = 1;
  } ensemble;

  struct Outputs {
    std::string directory = "out";
    std::vector<std::string> formats{"csv"};
  } outputs;

  UnitContext units;

  std::vector<std::size_t> reconstruct_nodes{16, 24, 32, 48, 64};
  std::size_t sieve_resolution = 20000;
};

inline std::string to_string(AlphaMode m) {
  switch (m) {
    case AlphaMode::Fiducial: return "fiducial";
    case AlphaMode::Sieve: return "sieve";
    case AlphaMode::Explicit: return "explicit";
  }
  return "fiducial";
}

inline void to_json(json& j, const RunConfig& c) {
  j = json{
      {"model", {{"m", c.model.m}, {"D", c.model.D}}},
      {"grid", {{"n_points", c.grid.n_points}, {"length", c.grid.length}}},
      {"time", {{"dt", c.time.dt}, {"t_final", c.time.t_final}, {"record_stride", c.time.record_stride}}},
      {"alpha", {{"mode", to_string(c.alpha.mode)}, {"re", c.alpha.re}, {"im", c.alpha.im}}},
      {"initial",
       {{"kind", c.initial.kind},
        {"x", c.initial.x},
        {"p", c.initial.p},
        {"separation", c.initial.separation},
        {"width", c.initial.width}}},
      {"noise", {{"mode", c.noise.mode}}},
      {"ensemble", {{"n_traj", c.ensemble.n_traj}, {"master_seed", c.ensemble.master_seed}}},
      {"outputs", {{"directory", c.outputs.directory}, {"formats", c.outputs.formats}}},
      {"units", {{"hbar", c.units.hbar}, {"mass_cgs", c.units.mass_cgs}, {"D_cgs", c.units.D_cgs}}},
      {"reconstruct", {{"nodes", c.reconstruct_nodes}}},
      {"sieve", {{"resolution", c.sieve_resolution}}},
  };
}

namespace detail {

template <class T>
void read(const json& j, const char* section, const char* key, T& out) {
  if (!j.contains(section)) return;
  const json& s = j.at(section);
  if (!s.is_object()) throw ConfigError(section, "must be an object");
  if (!s.contains(key)) return;
  try {
    out = s.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string(section) + "." + key, std::string("wrong type (") + e.what() + ")");
  }
}

inline void require(bool ok, const std::string& field, const std::string& msg) {
  if (!ok) throw ConfigError(field, msg);
}

}  // namespace detail

/// Checks physical positivity and enumerations; throws ConfigError naming the field.
inline void validate(const RunConfig& c) {
  using detail::require;
  require(c.model.m > 0.0 && std::isfinite(c.model.m), "model.m", "m must be > 0");
  require(c.model.D > 0.0 && std::isfinite(c.model.D), "model.D", "D must be > 0");
  require(c.grid.n_points >= 16 && c.grid.n_points % 2 == 0, "grid.n_points", "n_points must be even and >= 16");
  require(c.grid.length >= 0.0 && std::isfinite(c.grid.length), "grid.length", "length must be > 0 (or 0 for default)");
  require(c.time.dt >= 0.0 && std::isfinite(c.time.dt), "time.dt", "dt must be > 0 (or 0 for automatic)");
  require(c.time.t_final > 0.0 && std::isfinite(c.time.t_final), "time.t_final", "t_final must be > 0");
  require(c.time.record_stride >= 1, "time.record_stride", "record_stride must be >= 1");
  if (c.alpha.mode == AlphaMode::Explicit)
    require(c.alpha.re > 0.0 && std::isfinite(c.alpha.im), "alpha.re", "explicit alpha must have re > 0");
  require(c.initial.kind == "pointer" || c.initial.kind == "cat" || c.initial.kind == "gaussian", "initial.kind",
          "kind must be pointer, cat or gaussian");
  if (c.initial.kind == "cat") require(c.initial.separation > 0.0, "initial.separation", "separation must be > 0");
  if (c.initial.kind == "gaussian") require(c.initial.width > 0.0, "initial.width", "width must be > 0");
  require(c.noise.mode == "standard" || c.noise.mode == "alpha_general", "noise.mode",
          "mode must be standard or alpha_general");
  require(c.ensemble.n_traj >= 1, "ensemble.n_traj", "n_traj must be ≥ 1");
  for (const auto& f : c.outputs.formats)
    require(f == "csv" || f == "json", "outputs.formats", "format must be csv or json");
  require(c.units.hbar > 0.0 && c.units.mass_cgs > 0.0 && c.units.D_cgs > 0.0, "units",
          "hbar, mass_cgs and D_cgs must be > 0");
  for (auto n : c.reconstruct_nodes) require(n >= 2, "reconstruct.nodes", "node counts must be >= 2");
  require(c.sieve_resolution >= 10000, "sieve.resolution", "resolution must be >= 10000");
}

inline void from_json(const json& j, RunConfig& c) {
  if (!j.is_object()) throw ConfigError("config", "must be a JSON object");
  using detail::read;
  read(j, "model", "m", c.model.m);
  read(j, "model", "D", c.model.D);
  // Negative counts are caught before the unsigned conversion.
  for (auto [sec, key] : {std::pair{"grid", "n_points"}, std::pair{"time", "record_stride"},
                          std::pair{"ensemble", "n_traj"}}) {
    if (j.contains(sec) && j.at(sec).is_object() && j.at(sec).contains(key) &&
        j.at(sec).at(key).is_number_integer() && j.at(sec).at(key).get<long long>() < 0) {
      const std::string k = key;
      throw ConfigError(std::string(sec) + "." + k, k == "n_traj" ? "n_traj must be ≥ 1" : k + " must be positive");
    }
  }
  read(j, "grid", "n_points", c.grid.n_points);
  read(j, "grid", "length", c.grid.length);
  read(j, "time", "dt", c.time.dt);
  read(j, "time", "t_final", c.time.t_final);
  read(j, "time", "record_stride", c.time.record_stride);
  std::string mode = to_string(c.alpha.mode);
  read(j, "alpha", "mode", mode);
  if (mode == "fiducial") c.alpha.mode = AlphaMode::Fiducial;
  else if (mode == "sieve") c.alpha.mode = AlphaMode::Sieve;
  else if (mode == "explicit") c.alpha.mode = AlphaMode::Explicit;
  else throw ConfigError("alpha.mode", "mode must be fiducial, sieve or explicit");
  read(j, "alpha", "re", c.alpha.re);
  read(j, "alpha", "im", c.alpha.im);
  read(j, "initial", "kind", c.initial.kind);
  read(j, "initial", "x", c.initial.x);
  read(j, "initial", "p", c.initial.p);
  read(j, "initial", "separation", c.initial.separation);
  read(j, "initial", "width", c.initial.width);
  read(j, "noise", "mode", c.noise.mode);
  read(j, "ensemble", "n_traj", c.ensemble.n_traj);
  read(j, "ensemble", "master_seed", c.ensemble.master_seed);
  read(j, "outputs", "directory", c.outputs.directory);
  read(j, "outputs", "formats", c.outputs.formats);
  read(j, "units", "hbar", c.units.hbar);
  read(j, "units", "mass_cgs", c.units.mass_cgs);
  read(j, "units", "D_cgs", c.units.D_cgs);
  read(j, "reconstruct", "nodes", c.reconstruct_nodes);
  read(j, "sieve", "resolution", c.sieve_resolution);
}

inline RunConfig parse_config(const json& j) {
  RunConfig c = j.get<RunConfig>();
  validate(c);
  return c;
}

/// FNV-1a 64-bit hash, hex encoded.
inline std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : data) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = digits[h & 0xf];
  return out;
}

inline std::string config_hash(const RunConfig& c) { return fnv1a_hex(json(c).dump()); }

}  // namespace pointerlab::cli
