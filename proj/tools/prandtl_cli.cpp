// Command-line front end: run | sweep | selftest | calibrate-lambda | check-shear | norms-report.
// Exit status: 0 success, 1 validity failure, 2 configuration error.

#include "prandtl/prandtl.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

namespace fs = std::filesystem;
using namespace prandtl;
using nlohmann::json;

namespace {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Overrides {
  std::string config_path;
  std::string out;
  bool force = false;
  int verbose = 0;
  int threads = 0;
  std::optional<double> epsilon, delta, lambda, dt, t_max, y_max, data_norm;
  std::optional<int> n_h, m, d;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* app, Overrides& o, bool with_out = true) {
  app->add_option("--config", o.config_path, "flat JSON config file")->check(CLI::ExistingFile);
  if (with_out) {
    app->add_option("--out", o.out, "output directory (default: $PRANDTL_OUT/<subcommand>)");
    app->add_flag("--force", o.force, "replace an existing output directory");
  }
  app->add_flag("-v,--verbose", o.verbose, "progress on stderr");
  app->add_option("--threads", o.threads, "worker threads for sweeps (0: hardware)");
  app->add_option("--epsilon", o.epsilon, "outflow amplitude");
  app->add_option("--delta", o.delta, "initial band");
  app->add_option("--lambda", o.lambda, "radius coupling");
  app->add_option("--dt", o.dt, "time step");
  app->add_option("--t-max", o.t_max, "horizon (<= 0: automatic)");
  app->add_option("--y-max", o.y_max, "vertical extent");
  app->add_option("--n-h", o.n_h, "horizontal points per axis");
  app->add_option("--m", o.m, "vertical points");
  app->add_option("--d", o.d, "dimension (2 or 3)");
  app->add_option("--seed", o.seed, "initial-data seed");
  app->add_option("--data-norm", o.data_norm, "initial data norm (default: epsilon)");
}

solver::SolverConfig resolve_config(const Overrides& o) {
  try {
    solver::SolverConfig c;
    if (!o.config_path.empty()) c = io::load_config(o.config_path, c);
    if (o.epsilon) c.epsilon = *o.epsilon;
    if (o.delta) c.delta = *o.delta;
    if (o.lambda) c.lambda = *o.lambda;
    if (o.dt) c.dt = *o.dt;
    if (o.t_max) c.t_max = *o.t_max;
    if (o.y_max) c.grid.y_max = *o.y_max;
    if (o.n_h) c.grid.n_h = *o.n_h;
    if (o.m) c.grid.m = *o.m;
    if (o.d) c.grid.d = *o.d;
    if (o.seed) c.seed = *o.seed;
    if (o.data_norm) c.data_norm = *o.data_norm;
    c.validate();
    dyadic::build_filters(c.grid);  // resolution check: enough dyadic shells
    return c;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("malformed number list: " + s);
    }
  }
  if (out.empty()) throw ConfigError("empty number list");
  return out;
}

/// Output directory written through a sibling staging directory and renamed
/// into place at the end; an existing target needs --force.
class OutputDir {
 public:
  OutputDir(const Overrides& o, const std::string& sub) {
    std::string root = o.out;
    if (root.empty()) {
      const char* env = std::getenv("PRANDTL_OUT");
      root = (fs::path(env && *env ? env : "prandtl_out") / sub).string();
    }
    target_ = fs::path(root);
    force_ = o.force;
    if (fs::exists(target_) && !force_)
      throw ConfigError("output directory " + target_.string() + " exists; pass --force to replace it");
    if (target_.has_parent_path()) fs::create_directories(target_.parent_path());
    staging_ = target_;
    staging_ += ".staging-" + std::to_string(::getpid());
    fs::remove_all(staging_);
    fs::create_directory(staging_);
  }
  ~OutputDir() {
    std::error_code ec;
    if (!committed_) fs::remove_all(staging_, ec);
  }
  std::string path(const std::string& name) const { return (staging_ / name).string(); }
  fs::path staging() const { return staging_; }
  void commit() {
    if (fs::exists(target_)) {
      if (!force_) throw ConfigError("output directory " + target_.string() + " appeared while running");
      fs::remove_all(target_);
    }
    fs::rename(staging_, target_);
    committed_ = true;
  }
  const fs::path& target() const { return target_; }

 private:
  fs::path target_, staging_;
  bool force_ = false;
  bool committed_ = false;
};

void say(const Overrides& o, const std::string& msg) {
  if (o.verbose > 0) std::cerr << msg << '\n';
}

int cmd_run(const Overrides& o, bool snapshot, bool full_band) {
  auto cfg = resolve_config(o);
  cfg.continue_to_full_band = full_band;
  OutputDir out(o, "run");
  say(o, "run: epsilon=" + std::to_string(cfg.epsilon) + " t_max=" + std::to_string(cfg.resolved_t_max()));
  const auto rec = solver::run(cfg);
  io::write_json(io::config_to_json(cfg), out.path("config.json"));
  io::write_run(rec, out.staging().string(), snapshot);
  out.commit();
  std::cout << io::run_to_json(rec).dump(2) << '\n';
  return rec.valid ? 0 : 1;
}

int cmd_sweep(const Overrides& o, const std::string& eps_list) {
  const auto cfg = resolve_config(o);
  const auto eps = parse_list(eps_list);
  try {
    experiments::validate_epsilons(eps);
    for (double e : eps) {
      auto c = cfg;
      c.epsilon = e;
      c.validate();
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  OutputDir out(o, "sweep");
  say(o, "sweep: " + std::to_string(eps.size()) + " runs");
  const auto rec = experiments::epsilon_sweep(cfg, eps, o.threads);
  io::write_json(io::config_to_json(cfg), out.path("config.json"));
  experiments::write_sweep_csv(rec, out.path("sweep.csv"));
  io::write_json(experiments::sweep_to_json(rec), out.path("sweep.json"));
  for (std::size_t i = 0; i < rec.runs.size(); ++i) {
    const fs::path dir = out.staging() / ("run_" + std::to_string(i));
    fs::create_directory(dir);
    io::write_run(rec.runs[i], dir.string());
  }
  out.commit();
  const json summary{{"fit", experiments::fit_to_json(rec.fit)},
                     {"fit_points", rec.fit_points},
                     {"monotone", rec.monotone},
                     {"conclusive", rec.conclusive},
                     {"degraded", rec.degraded}};
  std::cout << summary.dump(2) << '\n';
  bool any_invalid = false;
  for (const auto& e : rec.entries) any_invalid = any_invalid || !e.valid;
  return any_invalid ? 1 : 0;
}

int cmd_selftest(const Overrides& o, bool inject_phi, bool inject_cfl) {
  experiments::SelftestOptions opt;
  opt.perturb_phi = inject_phi;
  opt.double_cfl_dt = inject_cfl;
  const auto rep = experiments::selftest(opt);
  const json j = rep.to_json();
  if (!o.out.empty()) {
    OutputDir out(o, "selftest");
    io::write_json(j, out.path("selftest.json"));
    out.commit();
  }
  std::cout << j.dump(2) << '\n';
  return rep.pass ? 0 : 1;
}

int cmd_calibrate(const Overrides& o, const std::string& lambdas) {
  const auto cfg = resolve_config(o);
  const auto ls = parse_list(lambdas);
  for (double l : ls)
    if (!(l > 0.0)) throw ConfigError("lambda values must be positive");
  OutputDir out(o, "calibrate-lambda");
  const auto rows = experiments::calibrate_lambda(cfg, ls, o.threads);
  io::write_json(io::config_to_json(cfg), out.path("config.json"));
  experiments::write_calibration_csv(rows, out.path("calibration.csv"));
  out.commit();
  bool ok = true;
  for (const auto& r : rows) {
    ok = ok && r.valid;
    std::cout << "lambda=" << r.lambda << " T_half=" << (r.t_half ? std::to_string(*r.t_half) : "-")
              << " envelope=" << r.theta_envelope_sup << (r.valid ? "" : " invalid: " + r.cause) << '\n';
  }
  return ok ? 0 : 1;
}

int cmd_check_shear(const Overrides& o, const std::string& times, const std::string& horizons) {
  const auto cfg = resolve_config(o);
  const auto ts = parse_list(times);
  const auto hs = parse_list(horizons);
  for (double t : ts)
    if (t < 0.0) throw ConfigError("times must be >= 0");
  for (double h : hs)
    if (!(h > 0.0)) throw ConfigError("horizons must be positive");
  if (!(cfg.epsilon > 0.0)) throw ConfigError("check-shear needs epsilon > 0");
  OutputDir out(o, "check-shear");
  shear::write_shear_audit_csv(cfg.grid, ts, cfg.epsilon, out.path("shear_audit.csv"));
  json energies = json::array();
  for (double h : hs) {
    const auto e = shear::shear_energy_check(h, cfg.epsilon);
    energies.push_back({{"T", h}, {"I", e.integral}, {"I_over_eps2", e.ratio}, {"converged", e.converged}});
  }
  const auto oracle = verify::shear_heat_oracle(10.0, 2.0, 1.0);
  const json j{{"config", io::config_to_json(cfg)},
               {"energy", energies},
               {"oracle_t10_y2",
                {{"kernel", shear::shear_velocity(10.0, 2.0, 1.0)},
                 {"crank_nicolson", oracle.us},
                 {"kernel_dy", shear::shear_derivative(10.0, 2.0, 1.0)},
                 {"crank_nicolson_dy", oracle.dus}}}};
  io::write_json(j, out.path("shear_energy.json"));
  out.commit();
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_norms_report(const Overrides& o, const std::string& snapshot, double t, std::optional<double> band) {
  const auto cfg = resolve_config(o);
  Field w;
  if (snapshot.empty()) {
    w = solver::init_data(cfg);
  } else {
    try {
      w = to_spectral(read_snapshot_csv(snapshot, cfg.grid.components()));
    } catch (const std::runtime_error& e) {
      throw ConfigError(e.what());
    }
  }
  if (t < 0.0) throw ConfigError("--time must be >= 0");
  const double b = band.value_or(snapshot.empty() ? cfg.delta : 0.0);
  if (b < 0.0) throw ConfigError("--band must be >= 0");
  const auto bank = dyadic::build_filters(w.spec());
  OutputDir out(o, "norms-report");
  const auto plain = norms::mode_energies(w);
  const auto weighted = norms::mode_energies(w, norms::Weighting::psi_at(w.spec(), t, b));
  const auto bp = norms::block_norms(bank, plain.energy);
  const auto bw = norms::block_norms(bank, weighted.energy);
  {
    std::ofstream os(out.path("norms_report.csv"));
    os << "k,l2_plus,weighted_l2_plus\n";
    for (std::size_t i = 0; i < bp.size(); ++i)
      os << bank.block_min() + static_cast<int>(i) << ',' << io::fmt(bp[i]) << ',' << io::fmt(bw[i]) << '\n';
  }
  const double s = 0.5 * (w.spec().d - 1);
  const auto est = radius::measure_radius(w);
  const json j{{"config", io::config_to_json(cfg)},
               {"source", snapshot.empty() ? "init_data" : snapshot},
               {"t", t},
               {"band", b},
               {"l2_plus", norms::l2_plus_norm(w)},
               {"besov", norms::besov_from_blocks(bank, bp, s)},
               {"weighted_besov", norms::besov_from_blocks(bank, bw, s)},
               {"overflow", weighted.overflow},
               {"radius", est.resolved ? json(est.radius) : json(nullptr)},
               {"radius_bins", est.bins_used}};
  io::write_json(j, out.path("norms_report.json"));
  out.commit();
  std::cout << j.dump(2) << '\n';
  return weighted.overflow ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prandtl boundary-layer perturbation lab"};
  app.require_subcommand(1);
  Overrides o;

  auto* run = app.add_subcommand("run", "single run from the configured data");
  add_common(run, o);
  bool snapshot = false, full_band = false;
  run->add_flag("--snapshot", snapshot, "write the final field as CSV");
  run->add_flag("--full-band", full_band, "continue past the half-band crossing to T*");

  auto* sweep = app.add_subcommand("sweep", "epsilon sweep with lifespan fit");
  add_common(sweep, o);
  std::string eps_list = "0.08,0.04,0.02,0.01";
  sweep->add_option("--epsilons", eps_list, "comma-separated, strictly decreasing");

  auto* self = app.add_subcommand("selftest", "aggregated property suites");
  add_common(self, o);
  bool inject_phi = false, inject_cfl = false;
  self->add_flag("--inject-phi", inject_phi, "perturb phi by 1e-3 (must fail the partition suite)");
  self->add_flag("--inject-cfl", inject_cfl, "run at twice the CFL step (must trip the monitor)");

  auto* cal = app.add_subcommand("calibrate-lambda", "lifespan and envelope per lambda");
  add_common(cal, o);
  std::string lambdas = "0.5,1,2,4";
  cal->add_option("--lambdas", lambdas, "comma-separated lambda values");

  auto* chk = app.add_subcommand("check-shear", "shear audit and weighted energy integrals");
  add_common(chk, o);
  std::string times = "0,0.5,1,2,5,10", horizons = "10,100";
  chk->add_option("--times", times, "audit times");
  chk->add_option("--horizons", horizons, "energy horizons T");

  auto* rep = app.add_subcommand("norms-report", "per-shell norms of a snapshot or of the initial data");
  add_common(rep, o);
  std::string snap;
  double at_time = 0.0;
  std::optional<double> band;
  rep->add_option("--snapshot", snap, "snapshot prefix written by run --snapshot");
  rep->add_option("--time", at_time, "time used in the weight Psi");
  rep->add_option("--band", band, "phase band (default: delta for initial data, 0 for snapshots)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*run) return cmd_run(o, snapshot, full_band);
    if (*sweep) return cmd_sweep(o, eps_list);
    if (*self) return cmd_selftest(o, inject_phi, inject_cfl);
    if (*cal) return cmd_calibrate(o, lambdas);
    if (*chk) return cmd_check_shear(o, times, horizons);
    if (*rep) return cmd_norms_report(o, snap, at_time, band);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
