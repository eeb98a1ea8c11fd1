#pragma once

// Epsilon sweeps with a bounded worker pool, lifespan power-law fits, the
// theta envelope, lambda calibration and the aggregated selftest.

#include "prandtl/dyadic.hpp"
#include "prandtl/io.hpp"
#include "prandtl/shear.hpp"
#include "prandtl/solver.hpp"
#include "prandtl/verification.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace prandtl::experiments {

using nlohmann::json;

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::vector<double> residuals;
};

/// Ordinary least squares y = slope x + intercept.
inline LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("linear_fit: need >= 2 paired points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("linear_fit: x values are all equal");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (f.slope * x[i] + f.intercept);
    f.residuals.push_back(r);
    ss_res += r * r;
  }
  f.r2 = syy == 0.0 ? 1.0 : 1.0 - ss_res / syy;
  return f;
}

/// Fit of log(T + 1) against log eps.
inline LinearFit lifespan_fit(const std::vector<double>& eps, const std::vector<double>& lifespans) {
  std::vector<double> x, y;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    x.push_back(std::log(eps[i]));
    y.push_back(std::log(lifespans[i] + 1.0));
  }
  return linear_fit(x, y);
}

/// tau*_eps = (delta / (4 lambda C eps))^{4/3} - 1.
inline double predicted_lifespan(double eps, double delta, double lambda, double c = 1.0) {
  return std::pow(delta / (4.0 * lambda * c * eps), 4.0 / 3.0) - 1.0;
}

/// sup_t theta(t) / (<t>^{3/4} 2 eps).
inline double theta_envelope(const std::vector<double>& t, const std::vector<double>& theta, double eps) {
  if (t.size() != theta.size()) throw std::invalid_argument("theta_envelope: size mismatch");
  double sup = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (theta[i] == 0.0) continue;
    if (!(eps > 0.0)) return std::numeric_limits<double>::infinity();
    sup = std::max(sup, theta[i] / (std::pow(bracket(t[i]), 0.75) * 2.0 * eps));
  }
  return sup;
}

inline double theta_envelope_check(const solver::RunRecord& run, double eps) {
  std::vector<double> t, th;
  for (const auto& r : run.trace) {
    t.push_back(r.t);
    th.push_back(r.theta);
  }
  return theta_envelope(t, th, eps);
}

struct SweepEntry {
  double epsilon = 0.0;
  std::optional<double> t_half;
  std::optional<double> t_star;
  double alpha_partial = std::numeric_limits<double>::quiet_NaN();
  double bound_ratio = 0.0;
  double theta_envelope_sup = 0.0;
  double min_radius_margin = 0.0;
  bool valid = false;
  std::string cause;
};

struct SweepRecord {
  solver::SolverConfig base;
  std::vector<double> epsilons;
  std::vector<SweepEntry> entries;
  std::vector<solver::RunRecord> runs;
  std::optional<LinearFit> fit;
  int fit_points = 0;
  bool degraded = false;        // some run invalid or without a crossing
  bool monotone = true;         // T strictly increases as eps decreases
  bool conclusive = false;      // fit exists with R^2 >= 0.98
};

inline void validate_epsilons(const std::vector<double>& eps) {
  if (eps.size() < 3) throw std::invalid_argument("sweep needs at least 3 epsilon values");
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (!(eps[i] > 0.0 && eps[i] <= 0.5)) throw std::invalid_argument("sweep epsilon values must lie in (0, 0.5]");
    if (i > 0 && !(eps[i] < eps[i - 1])) throw std::invalid_argument("sweep epsilon list must be strictly decreasing");
  }
}

/// Runs `jobs` on at most `workers` threads; results land at their own index.
template <class Job, class Result>
void run_pool(const std::vector<Job>& jobs, std::vector<Result>& results, int workers,
              const std::function<Result(const Job&)>& fn) {
  results.resize(jobs.size());
  const int hw = std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
  const int n = std::max(1, std::min<int>(workers > 0 ? workers : hw, static_cast<int>(jobs.size())));
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(jobs.size());
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        results[i] = fn(jobs[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int i = 1; i < n; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline SweepRecord epsilon_sweep(const solver::SolverConfig& base, const std::vector<double>& eps, int workers = 0) {
  validate_epsilons(eps);
  std::vector<solver::SolverConfig> jobs;
  for (double e : eps) {
    auto c = base;
    c.epsilon = e;
    c.validate();
    jobs.push_back(c);
  }
  SweepRecord rec;
  rec.base = base;
  rec.epsilons = eps;
  run_pool<solver::SolverConfig, solver::RunRecord>(jobs, rec.runs, workers,
                                                    [](const solver::SolverConfig& c) { return solver::run(c); });
  std::vector<double> fe, ft;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const auto& r = rec.runs[i];
    SweepEntry e;
    e.epsilon = eps[i];
    e.t_half = r.t_half_band;
    e.t_star = r.t_star;
    e.bound_ratio = r.bound_ratio;
    e.theta_envelope_sup = theta_envelope_check(r, eps[i]);
    e.min_radius_margin = r.min_radius_margin;
    e.valid = r.valid;
    e.cause = r.valid ? (r.t_half_band ? "" : "no crossing before t_max") : r.cause;
    if (r.valid && r.t_half_band) {
      fe.push_back(eps[i]);
      ft.push_back(*r.t_half_band);
    } else {
      rec.degraded = true;
    }
    rec.entries.push_back(e);
  }
  // Local slope between consecutive valid entries.
  for (std::size_t i = 1; i < rec.entries.size(); ++i) {
    const auto& a = rec.entries[i - 1];
    auto& b = rec.entries[i];
    if (a.valid && b.valid && a.t_half && b.t_half)
      b.alpha_partial = (std::log(*b.t_half + 1.0) - std::log(*a.t_half + 1.0)) / (std::log(b.epsilon) - std::log(a.epsilon));
  }
  for (std::size_t i = 1; i < ft.size(); ++i)
    if (!(ft[i] > ft[i - 1])) rec.monotone = false;
  rec.fit_points = static_cast<int>(fe.size());
  if (fe.size() >= 2) {
    rec.fit = lifespan_fit(fe, ft);
    rec.conclusive = fe.size() >= 3 && rec.fit->r2 >= 0.98;
  }
  return rec;
}

inline json fit_to_json(const std::optional<LinearFit>& f) {
  if (!f) return nullptr;
  return json{{"alpha", f->slope}, {"intercept", f->intercept}, {"r2", f->r2}, {"residuals", f->residuals}};
}

inline json sweep_to_json(const SweepRecord& r) {
  json entries = json::array();
  for (const auto& e : r.entries)
    entries.push_back({{"epsilon", e.epsilon},
                       {"T_half_band", io::optional_number(e.t_half)},
                       {"T_star", io::optional_number(e.t_star)},
                       {"alpha_partial", std::isnan(e.alpha_partial) ? json(nullptr) : json(e.alpha_partial)},
                       {"bound_ratio_314", e.bound_ratio},
                       {"theta_envelope_sup", e.theta_envelope_sup},
                       {"min_radius_margin", e.min_radius_margin},
                       {"valid", e.valid},
                       {"cause", e.cause}});
  json invalid = json::array();
  for (const auto& e : r.entries)
    if (!e.valid) invalid.push_back({{"epsilon", e.epsilon}, {"cause", e.cause}});
  return json{{"config", io::config_to_json(r.base)},
              {"epsilons", r.epsilons},
              {"entries", entries},
              {"invalid", invalid},
              {"fit", fit_to_json(r.fit)},
              {"fit_points", r.fit_points},
              {"fit_target", "log(T_half_band + 1) vs log(epsilon)"},
              {"reference_alpha", -4.0 / 3.0},
              {"degraded", r.degraded},
              {"monotone", r.monotone},
              {"conclusive", r.conclusive}};
}

inline void write_sweep_csv(const SweepRecord& r, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << "epsilon,T_half_band,T_star,alpha_partial,bound_ratio_314,theta_envelope_sup,valid,cause\n";
  auto opt = [](const std::optional<double>& v) { return v ? io::fmt(*v) : std::string(); };
  for (const auto& e : r.entries)
    os << io::fmt(e.epsilon) << ',' << opt(e.t_half) << ',' << opt(e.t_star) << ',' << io::fmt(e.alpha_partial) << ','
       << io::fmt(e.bound_ratio) << ',' << io::fmt(e.theta_envelope_sup) << ',' << (e.valid ? 1 : 0) << ','
       << e.cause << '\n';
}

struct CalibrationRow {
  double lambda = 0.0;
  std::optional<double> t_half;
  std::optional<double> t_star;
  double theta_envelope_sup = 0.0;
  double bound_ratio = 0.0;
  bool valid = false;
  std::string cause;
};

/// One run per lambda at the base configuration.
inline std::vector<CalibrationRow> calibrate_lambda(const solver::SolverConfig& base, const std::vector<double>& lambdas,
                                                    int workers = 0) {
  std::vector<solver::SolverConfig> jobs;
  for (double l : lambdas) {
    auto c = base;
    c.lambda = l;
    c.validate();
    jobs.push_back(c);
  }
  std::vector<solver::RunRecord> runs;
  run_pool<solver::SolverConfig, solver::RunRecord>(jobs, runs, workers,
                                                    [](const solver::SolverConfig& c) { return solver::run(c); });
  std::vector<CalibrationRow> out;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& r = runs[i];
    out.push_back({lambdas[i], r.t_half_band, r.t_star, theta_envelope_check(r, base.epsilon), r.bound_ratio, r.valid,
                   r.cause});
  }
  return out;
}

inline void write_calibration_csv(const std::vector<CalibrationRow>& rows, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << "lambda,T_half_band,T_star,theta_envelope_sup,bound_ratio,valid,cause\n";
  auto opt = [](const std::optional<double>& v) { return v ? io::fmt(*v) : std::string(); };
  for (const auto& r : rows)
    os << io::fmt(r.lambda) << ',' << opt(r.t_half) << ',' << opt(r.t_star) << ',' << io::fmt(r.theta_envelope_sup)
       << ',' << io::fmt(r.bound_ratio) << ',' << (r.valid ? 1 : 0) << ',' << r.cause << '\n';
}

// ---------------------------------------------------------------------------
// Selftest

struct SelftestOptions {
  bool perturb_phi = false;    // scale phi by (1 + 1e-3)
  bool double_cfl_dt = false;  // run the convergence suite at twice the CFL step
  std::uint64_t seed = 7;
};

struct SelftestReport {
  json suites = json::array();
  bool pass = true;

  void add(const std::string& name, bool ok, json metrics) {
    metrics["name"] = name;
    metrics["pass"] = ok;
    suites.push_back(std::move(metrics));
    pass = pass && ok;
  }
  json to_json() const { return json{{"pass", pass}, {"suites", suites}}; }
};

inline dyadic::Profile selftest_profile(const SelftestOptions& opt) {
  auto prof = dyadic::Profile::standard();
  if (opt.perturb_phi) {
    auto phi = prof.phi;
    prof.phi = [phi](double tau) { return (1.0 + 1e-3) * phi(tau); };
  }
  return prof;
}

inline SelftestReport selftest(const SelftestOptions& opt = {}) {
  SelftestReport rep;
  const auto profile = selftest_profile(opt);
  {
    const auto bank = dyadic::build_filters(GridSpec{}, profile);
    const double res = dyadic::partition_residual(bank);
    rep.add("partition", res <= 1e-10, {{"max_residual", res}, {"tolerance", 1e-10}});
  }
  {
    const auto bank = dyadic::build_filters(GridSpec{2, 128, 2.0 * std::numbers::pi * 8.0, 32, 8.0}, profile);
    const auto r = verify::bony_reconstruction(bank, 50, opt.seed);
    rep.add("bony", r.max_relative_error <= 1e-10,
            {{"max_relative_error", r.max_relative_error}, {"trials", r.trials}, {"tolerance", 1e-10}});
  }
  {
    const auto bank = dyadic::build_filters(GridSpec{2, 64, 2.0 * std::numbers::pi * 8.0, 32, 8.0}, profile);
    const auto r = verify::bernstein_suite(bank, 20, opt.seed);
    rep.add("bernstein", r.pass,
            {{"worst_ratio_over_constant", r.worst_margin}, {"checks", r.checks}, {"combinations", r.combinations}});
  }
  {
    const auto r = verify::psi_inequality();
    const bool ok = r.closed_form_error <= 1e-12 && r.stencil_error <= 1e-12 && r.max_residual < 0.0;
    rep.add("psi",
            ok, {{"closed_form_error", r.closed_form_error}, {"stencil_error", r.stencil_error},
                 {"max_residual", r.max_residual}, {"points", r.points}});
  }
  {
    const auto r = verify::subadditivity_suite(10000, opt.seed);
    rep.add("subadditivity", r.violations == 0, {{"trials", r.trials}, {"violations", r.violations}});
  }
  {
    const auto oracle = verify::shear_heat_oracle(10.0, 2.0, 1.0);
    const double us = shear::shear_velocity(10.0, 2.0, 1.0), dus = shear::shear_derivative(10.0, 2.0, 1.0);
    const double e1 = std::abs(us - oracle.us), e2 = std::abs(dus - oracle.dus);
    const auto a = shear::shear_energy_check(10.0, 1.0), b = shear::shear_energy_check(10.0, 0.01);
    const double lin = std::abs(a.ratio - b.ratio) / a.ratio;
    rep.add("shear_oracles", e1 <= 1e-6 && e2 <= 1e-6 && lin <= 1e-12,
            {{"us_error", e1}, {"dus_error", e2}, {"energy_linearity", lin}, {"tolerance", 1e-6}});
  }
  {
    json m;
    bool ok = true;
    const auto conv = verify::manufactured_convergence(3);
    m["errors"] = conv.errors;
    m["orders"] = conv.orders;
    m["min_order"] = conv.min_order;
    ok = ok && conv.all_valid && conv.min_order >= 1.9;
    const auto heat = verify::x_independent_vs_heat();
    m["heat_max_diff"] = heat.max_diff;
    ok = ok && heat.valid && heat.max_diff <= 1e-12;
    // Validity monitor probe: twice the admissible advective step must trip it.
    auto cfg = verify::manufactured_config(65, 0.04);
    const double dt_cfl = verify::manufactured_cfl_dt(cfg);
    m["dt_cfl"] = dt_cfl;
    if (opt.double_cfl_dt) {
      cfg.dt = 2.0 * dt_cfl;
      cfg.t_max = 1.0;
      std::string cause;
      try {
        const auto r = verify::run_manufactured(cfg);
        cause = r.valid ? "" : r.cause;
      } catch (const std::invalid_argument& e) {
        cause = std::string("config: ") + e.what();
      }
      m["injected_dt"] = cfg.dt;
      m["monitor_cause"] = cause;
      // The injected fault is reported as a suite failure.
      ok = ok && cause.empty();
    }
    rep.add("solver_convergence", ok, m);
  }
  return rep;
}

}  // namespace prandtl::experiments
