#pragma once

// Persisted formats: flat JSON configs, run.json + traces.csv, per-shell norm
// rows. Numbers are written with 17 significant digits so reruns compare
// byte for byte.

#include "prandtl/solver.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>

namespace prandtl::io {

using nlohmann::json;

inline json config_to_json(const solver::SolverConfig& c) {
  return json{{"d", c.grid.d},
              {"n_h", c.grid.n_h},
              {"length", c.grid.length},
              {"m", c.grid.m},
              {"y_max", c.grid.y_max},
              {"epsilon", c.epsilon},
              {"delta", c.delta},
              {"lambda", c.lambda},
              {"dt", c.dt},
              {"t_max", c.t_max},
              {"t_max_resolved", c.resolved_t_max()},
              {"seed", c.seed},
              {"profile_width", c.profile_width},
              {"mask_scale", c.mask_scale},
              {"data_norm", c.data_norm},
              {"dealias", c.dealias},
              {"linearized", c.linearized},
              {"tail_tolerance", c.tail_tolerance},
              {"cfl_limit", c.cfl_limit},
              {"imag_tolerance", c.imag_tolerance},
              {"continue_to_full_band", c.continue_to_full_band},
              {"direction", {c.direction[0], c.direction[1]}}};
}

/// Overlay the keys of a flat JSON object onto `base`. Unknown keys and type
/// mismatches throw std::invalid_argument.
inline solver::SolverConfig config_from_json(const json& j, solver::SolverConfig base = {}) {
  if (!j.is_object()) throw std::invalid_argument("config must be a flat JSON object");
  static const std::set<std::string> known{"d",         "n_h",           "length",     "m",
                                           "y_max",     "epsilon",       "delta",      "lambda",
                                           "dt",        "t_max",         "t_max_resolved", "seed",
                                           "profile_width", "mask_scale", "data_norm",  "dealias",
                                           "linearized", "tail_tolerance", "cfl_limit", "imag_tolerance",
                                           "continue_to_full_band", "direction"};
  for (const auto& [key, value] : j.items())
    if (!known.contains(key)) throw std::invalid_argument("unknown config key: " + key);
  try {
    auto get = [&](const char* key, auto& dst) {
      if (j.contains(key)) dst = j.at(key).get<std::decay_t<decltype(dst)>>();
    };
    get("d", base.grid.d);
    get("n_h", base.grid.n_h);
    get("length", base.grid.length);
    get("m", base.grid.m);
    get("y_max", base.grid.y_max);
    get("epsilon", base.epsilon);
    get("delta", base.delta);
    get("lambda", base.lambda);
    get("dt", base.dt);
    get("t_max", base.t_max);
    get("seed", base.seed);
    get("profile_width", base.profile_width);
    get("mask_scale", base.mask_scale);
    get("data_norm", base.data_norm);
    get("dealias", base.dealias);
    get("linearized", base.linearized);
    get("tail_tolerance", base.tail_tolerance);
    get("cfl_limit", base.cfl_limit);
    get("imag_tolerance", base.imag_tolerance);
    get("continue_to_full_band", base.continue_to_full_band);
    if (j.contains("direction")) {
      const auto v = j.at("direction").get<std::vector<double>>();
      if (v.size() != 2) throw std::invalid_argument("direction must have two entries");
      base.direction = {v[0], v[1]};
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed config: ") + e.what());
  }
  return base;
}

inline solver::SolverConfig load_config(const std::string& path, solver::SolverConfig base = {}) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("cannot open config file " + path);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw std::invalid_argument("config file " + path + " is not valid JSON: " + e.what());
  }
  return config_from_json(j, base);
}

inline json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline json run_to_json(const solver::RunRecord& r) {
  return json{{"config", config_to_json(r.config)},
              {"valid", r.valid},
              {"cause", r.cause},
              {"stop_reason", r.stop_reason},
              {"t_end", r.t_end},
              {"steps", r.steps},
              {"T_half_band", optional_number(r.t_half_band)},
              {"T_star", optional_number(r.t_star)},
              {"data_norm", r.data_norm},
              {"bound_ratio", r.bound_ratio},
              {"theta_envelope_sup", r.theta_envelope_sup},
              {"min_radius_margin", r.min_radius_margin},
              {"unresolved_radius_rows", r.unresolved_radius_rows},
              {"max_tail", r.max_tail},
              {"max_imag_residue", r.max_imag_residue},
              {"max_energy_psi", r.max_energy_psi},
              {"final_theta", r.trace.empty() ? 0.0 : r.trace.back().theta}};
}

/// Writes JSON with a fixed key order (nlohmann sorts keys) and a trailing newline.
inline void write_json(const json& j, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << std::setw(2) << j << '\n';
}

inline std::string fmt(double v) {
  if (std::isnan(v)) return "";
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline void write_traces_csv(const solver::RunRecord& r, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << "t,theta,theta_dot,band,radius,radius_resolved,alive,besov_w,besov_dyw,shear_norm,"
        "cl_inf_w,cl2_dyw,cl_weighted_w,energy_psi,tail,max_abs_w\n";
  for (const auto& row : r.trace) {
    os << fmt(row.t) << ',' << fmt(row.theta) << ',' << fmt(row.theta_dot) << ',' << fmt(row.band) << ','
       << fmt(row.radius) << ',' << (row.radius_resolved ? 1 : 0) << ',' << (row.alive ? 1 : 0) << ','
       << fmt(row.besov_w) << ',' << fmt(row.besov_dyw) << ',' << fmt(row.shear_norm) << ',' << fmt(row.cl_inf_w)
       << ',' << fmt(row.cl2_dyw) << ',' << fmt(row.cl_weighted_w) << ',' << fmt(row.energy_psi) << ','
       << fmt(row.tail) << ',' << fmt(row.max_abs_w) << '\n';
  }
}

/// Long format: one row per (time, block) with both series.
inline void write_norms_csv(const solver::RunRecord& r, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << "t,k,w_block,dyw_block\n";
  const auto& sw = r.series_w;
  const auto& sd = r.series_dyw;
  for (std::size_t n = 0; n < sw.size(); ++n)
    for (int b = 0; b < sw.block_count(); ++b)
      os << fmt(sw.times()[n]) << ',' << sw.block_min() + b << ',' << fmt(sw.samples(b)[n]) << ','
         << fmt(sd.samples(b)[n]) << '\n';
}

inline void write_run(const solver::RunRecord& r, const std::string& dir, bool snapshot = false) {
  write_json(run_to_json(r), dir + "/run.json");
  write_traces_csv(r, dir + "/traces.csv");
  write_norms_csv(r, dir + "/norms.csv");
  if (snapshot) write_snapshot_csv(r.final_field, dir + "/final");
}

}  // namespace prandtl::io
