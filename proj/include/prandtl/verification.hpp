#pragma once

// Independent reference computations: a real Crank-Nicolson heat solver, a
// manufactured solution for the full system, and the check routines shared by
// the selftest and the acceptance gate.

#include "prandtl/dyadic.hpp"
#include "prandtl/grid_field.hpp"
#include "prandtl/norms.hpp"
#include "prandtl/radius.hpp"
#include "prandtl/shear.hpp"
#include "prandtl/solver.hpp"
#include "prandtl/weights.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <stdexcept>
#include <vector>

namespace prandtl::verify {

// ---------------------------------------------------------------------------
// 1-D heat equation u_t = u_yy, Dirichlet values at both ends.

inline std::vector<double> cn_heat_1d(std::vector<double> u, double dy, double dt, long steps, double left,
                                      double right) {
  const std::size_t m = u.size();
  if (m < 3) throw std::invalid_argument("cn_heat_1d: need at least 3 points");
  const double r = dt / (dy * dy);
  const std::size_t n = m - 2;
  std::vector<double> a(n, -0.5 * r), b(n, 1.0 + r), c(n, -0.5 * r), d(n), cp(n), dp(n);
  u.front() = left;
  u.back() = right;
  for (long s = 0; s < steps; ++s) {
    for (std::size_t i = 0; i < n; ++i) d[i] = u[i + 1] + 0.5 * r * (u[i] - 2.0 * u[i + 1] + u[i + 2]);
    d.front() += 0.5 * r * left;
    d.back() += 0.5 * r * right;
    cp[0] = c[0] / b[0];
    dp[0] = d[0] / b[0];
    for (std::size_t i = 1; i < n; ++i) {
      const double den = b[i] - a[i] * cp[i - 1];
      cp[i] = c[i] / den;
      dp[i] = (d[i] - a[i] * dp[i - 1]) / den;
    }
    u[n] = dp[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) u[i + 1] = dp[i] - cp[i] * u[i + 2];
  }
  return u;
}

struct HeatOracleValue {
  double us = 0.0;
  double dus = 0.0;
};

/// Shear flow at (t, y) from a finite-difference solve of the heat equation on
/// [0, length] with u(0) = 0, u(length) = eps, u(0, y) = eps chi(y).
inline HeatOracleValue shear_heat_oracle(double t, double y, double eps, double dy = 1.0 / 512.0,
                                         double dt = 5e-4, double length = 30.0) {
  const long m = std::lround(length / dy) + 1;
  std::vector<double> u(static_cast<std::size_t>(m));
  for (long j = 0; j < m; ++j) u[j] = eps * shear::chi_profile(j * dy);
  const long steps = std::lround(t / dt);
  u = cn_heat_1d(std::move(u), dy, t / steps, steps, 0.0, eps);
  const long j = std::lround(y / dy);
  if (j < 1 || j >= m - 1 || std::abs(j * dy - y) > 1e-12) throw std::invalid_argument("shear_heat_oracle: y off grid");
  return {u[j], (u[j + 1] - u[j - 1]) / (2.0 * dy)};
}

// ---------------------------------------------------------------------------
// Manufactured solution w = a(t) sin(k x) g(y), g = y e^{-y^2/2},
// G = int_0^y g = 1 - e^{-y^2/2}, a(t) = 0.5 e^{-t/2}; the forcing makes it
// an exact solution of the full system with shear amplitude eps.

struct Manufactured {
  GridSpec grid;
  double eps = 0.2;
  double k = 1.0;  // wavenumber xi of the single mode

  static double amp(double t) { return 0.5 * std::exp(-0.5 * t); }
  static double amp_dt(double t) { return -0.25 * std::exp(-0.5 * t); }
  static double g(double y) { return y * std::exp(-0.5 * y * y); }
  static double g1(double y) { return (1.0 - y * y) * std::exp(-0.5 * y * y); }
  static double g2(double y) { return (y * y * y - 3.0 * y) * std::exp(-0.5 * y * y); }
  static double big_g(double y) { return 1.0 - std::exp(-0.5 * y * y); }

  Field exact(double t) const {
    std::vector<double> v(static_cast<std::size_t>(grid.m) * grid.n_h);
    for (int j = 0; j < grid.m; ++j)
      for (int i = 0; i < grid.n_h; ++i) v[j * grid.n_h + i] = amp(t) * std::sin(k * i * grid.dx()) * g(grid.y(j));
    return to_spectral(Field::from_physical(grid, 1, v));
  }

  Field source(double t) const {
    const double a = amp(t), ad = amp_dt(t);
    std::vector<double> v(static_cast<std::size_t>(grid.m) * grid.n_h);
    for (int j = 0; j < grid.m; ++j) {
      const double y = grid.y(j);
      const double us = shear::shear_velocity(t, y, eps), dus = shear::shear_derivative(t, y, eps);
      for (int i = 0; i < grid.n_h; ++i) {
        const double x = i * grid.dx();
        const double sn = std::sin(k * x), cs = std::cos(k * x);
        v[j * grid.n_h + i] = ad * sn * g(y) - a * sn * g2(y) +
                              0.5 * a * a * k * std::sin(2.0 * k * x) * (g(y) * g(y) - big_g(y) * g1(y)) +
                              a * k * cs * (us * g(y) - big_g(y) * dus);
      }
    }
    Field f = to_spectral(Field::from_physical(grid, 1, v));
    enforce_dirichlet(f, true);
    return f;
  }
};

inline solver::SolverConfig manufactured_config(int m, double dt, double eps = 0.2) {
  solver::SolverConfig cfg;
  cfg.grid = GridSpec{2, 16, 2.0 * std::numbers::pi, m, 16.0};
  cfg.epsilon = eps;
  // Keep the band wide and nearly frozen so the run reaches t_max.
  cfg.delta = 2.0;
  cfg.lambda = 1e-6;
  cfg.dt = dt;
  cfg.t_max = 1.0;
  return cfg;
}

struct ManufacturedRun {
  bool valid = false;
  std::string cause;
  double t_end = 0.0;
  double max_error = 0.0;
};

inline ManufacturedRun run_manufactured(const solver::SolverConfig& cfg) {
  Manufactured mms{cfg.grid, cfg.epsilon, 1.0};
  solver::Solver sol(cfg, mms.exact(0.0), [mms](double t) { return mms.source(t); });
  const auto rec = sol.run();
  ManufacturedRun out;
  out.valid = rec.valid;
  out.cause = rec.cause;
  out.t_end = rec.t_end;
  const Field err = to_physical(rec.final_field - mms.exact(rec.t_end));
  for (const auto& v : err.data()) out.max_error = std::max(out.max_error, std::abs(v));
  return out;
}

struct ConvergenceResult {
  std::vector<double> errors;
  std::vector<double> orders;
  double min_order = 0.0;
  bool all_valid = true;
};

/// Joint (dt, dy) halving: M = 65, 129, 257 on [0, 16], dt = 0.04, 0.02, 0.01.
inline ConvergenceResult manufactured_convergence(int levels = 3) {
  ConvergenceResult out;
  int m = 65;
  double dt = 0.04;
  for (int l = 0; l < levels; ++l) {
    const auto r = run_manufactured(manufactured_config(m, dt));
    out.all_valid = out.all_valid && r.valid && std::abs(r.t_end - 1.0) < 1e-9;
    out.errors.push_back(r.max_error);
    m = 2 * m - 1;
    dt *= 0.5;
  }
  out.min_order = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < out.errors.size(); ++i) {
    out.orders.push_back(std::log2(out.errors[i - 1] / out.errors[i]));
    out.min_order = std::min(out.min_order, out.orders.back());
  }
  return out;
}

/// Largest dt the advective CFL admits for the manufactured data at t = 0.
inline double manufactured_cfl_dt(const solver::SolverConfig& cfg) {
  Manufactured mms{cfg.grid, cfg.epsilon, 1.0};
  const Field w0 = to_physical(mms.exact(0.0));
  double wmax = 0.0;
  for (const auto& v : w0.data()) wmax = std::max(wmax, std::abs(v.real()));
  double us = 0.0;
  for (int j = 0; j < cfg.grid.m; ++j) us = std::max(us, std::abs(shear::shear_velocity(0.0, cfg.grid.y(j), cfg.epsilon)));
  return cfg.cfl_limit / ((us + wmax) * cfg.grid.max_xi());
}

struct HeatComparison {
  double max_diff = 0.0;
  bool valid = false;
};

/// x-independent data evolves by pure vertical diffusion; compare the solver's
/// DC column with cn_heat_1d after `steps` steps.
inline HeatComparison x_independent_vs_heat(long steps = 100) {
  solver::SolverConfig cfg;
  cfg.grid = GridSpec{2, 16, 2.0 * std::numbers::pi * 8.0, 64, 16.0};
  cfg.epsilon = 0.04;
  cfg.delta = 2.0;
  cfg.lambda = 1e-3;
  cfg.dt = 0.01;
  cfg.t_max = steps * cfg.dt;
  const auto& s = cfg.grid;
  Field w0 = Field::zeros(s, Layout::Spectral);
  std::vector<double> prof(s.m);
  for (int j = 0; j < s.m; ++j) {
    const double y = s.y(j);
    prof[j] = 0.01 * y * y * std::exp(-0.5 * y * y);
    w0.at(0, j, 0) = prof[j];
  }
  prof.front() = prof.back() = 0.0;
  solver::Solver sol(cfg, w0);
  while (sol.step()) {
  }
  const long done = sol.steps();
  const auto ref = cn_heat_1d(prof, s.dy(), cfg.dt, done, 0.0, 0.0);
  HeatComparison out;
  out.valid = sol.record().valid && done == steps;
  for (int j = 0; j < s.m; ++j) {
    out.max_diff = std::max(out.max_diff, std::abs(sol.state().at(0, j, 0) - ref[j]));
    for (std::size_t p = 1; p < sol.state().row_size(); ++p)
      out.max_diff = std::max(out.max_diff, std::abs(sol.state().at(0, j, p)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Filter-bank and weight checks.

/// Random real field on `spec`, returned in spectral form.
inline Field random_field(const GridSpec& spec, int components, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  std::vector<double> v(static_cast<std::size_t>(components) * spec.m * spec.modes_per_row());
  for (auto& x : v) x = nd(rng);
  return to_spectral(Field::from_physical(spec, components, v));
}

struct BonyResult {
  double max_relative_error = 0.0;
  int trials = 0;
};

inline BonyResult bony_reconstruction(const dyadic::FilterBank& bank, int trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  BonyResult out;
  out.trials = trials;
  for (int i = 0; i < trials; ++i) {
    const Field f = dealiased(random_field(bank.spec(), 1, rng));
    const Field g = dealiased(random_field(bank.spec(), 1, rng));
    const auto parts = dyadic::bony_decompose(bank, f, g);
    const Field prod = dealiased_product(f, g);
    const Field diff = prod - (parts.t_f_g + parts.t_g_f + parts.remainder);
    const double rel = norms::l2_plus_norm(diff) / norms::l2_plus_norm(prod);
    out.max_relative_error = std::max(out.max_relative_error, rel);
  }
  return out;
}

struct BernsteinResult {
  double worst_margin = 0.0;  // max over trials of measured / constant
  int combinations = 0;
  int checks = 0;
  bool pass = true;
};

/// Every (p1 >= p2, q) in {1, 2, inf} for the derivative form with |alpha| = 1,
/// every (p1 = p2, q) for the reverse form with N = 1; `trials` random
/// shell-localized fields per combination, all shells.
inline BernsteinResult bernstein_suite(const dyadic::FilterBank& bank, int trials, std::uint64_t seed) {
  using Q = dyadic::BernsteinQuery;
  const double ex[] = {1.0, 2.0, dyadic::kInf};
  std::vector<Q> queries;
  for (double p1 : ex)
    for (double p2 : ex)
      for (double q : ex) {
        if (p2 > p1) continue;
        queries.push_back(Q{Q::Kind::Derivative, p1, p2, q, {1, 0}, 1});
        if (p1 == p2) queries.push_back(Q{Q::Kind::Reverse, p1, p2, q, {1, 0}, 1});
      }
  std::mt19937_64 rng(seed);
  BernsteinResult out;
  out.combinations = static_cast<int>(queries.size());
  for (int k = bank.k_min(); k <= bank.k_max(); ++k) {
    std::vector<Field> samples;
    for (int i = 0; i < trials; ++i) {
      Field a = dyadic::project_shell(bank, random_field(bank.spec(), 1, rng), k);
      samples.push_back(std::move(a));
    }
    for (const auto& q : queries) {
      const double bound = dyadic::bernstein_constant(bank, k, q);
      for (const auto& a : samples) {
        const double ratio = dyadic::bernstein_check(a, k, q);
        ++out.checks;
        const double margin = ratio / bound;
        out.worst_margin = std::max(out.worst_margin, margin);
        if (!(margin <= 1.0 + 1e-12)) out.pass = false;
      }
    }
  }
  return out;
}

struct PsiResult {
  double closed_form_error = 0.0;  // |psi_residual - (-1/(8<t>^2))|
  double stencil_error = 0.0;      // complex-step stencil vs -1/(8<t>^2)
  double max_residual = 0.0;       // should be < 0
  int points = 0;
};

/// Complex-step derivative stencil: f'(x) = Im f(x + i h) / h, no cancellation.
inline PsiResult psi_inequality(int nt = 100, int ny = 100, double t_max = 50.0, double y_max = 10.0) {
  using C = std::complex<double>;
  auto psi_c = [](C t, C y) { return (1.0 + y * y) / (8.0 * (1.0 + t)); };
  const double h = 1e-30;
  PsiResult out;
  out.max_residual = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < nt; ++a)
    for (int b = 0; b < ny; ++b) {
      const double t = t_max * a / (nt - 1), y = y_max * b / (ny - 1);
      const double exact = -1.0 / (8.0 * bracket(t) * bracket(t));
      const double closed = psi_residual(t, y);
      const double pt = psi_c(C(t, h), C(y, 0.0)).imag() / h;
      const double py = psi_c(C(t, 0.0), C(y, h)).imag() / h;
      const double stencil = pt + 2.0 * py * py;
      out.closed_form_error = std::max(out.closed_form_error, std::abs(closed - exact));
      out.stencil_error = std::max(out.stencil_error, std::abs(stencil - exact));
      out.max_residual = std::max(out.max_residual, closed);
      ++out.points;
    }
  return out;
}

struct SubadditivityResult {
  int trials = 0;
  int violations = 0;
};

inline SubadditivityResult subadditivity_suite(int trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-50.0, 50.0), b(0.0, 2.0);
  SubadditivityResult out;
  out.trials = trials;
  for (int i = 0; i < trials; ++i)
    if (!radius::check_subadditivity(b(rng), {u(rng), u(rng)}, {u(rng), u(rng)})) ++out.violations;
  return out;
}

}  // namespace prandtl::verify
