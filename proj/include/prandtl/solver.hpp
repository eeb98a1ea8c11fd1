#pragma once

// IMEX time stepping of the perturbation system
//   d_t w + (w + u^s) . grad_h w + v d_y w + v d_y u^s - d_yy w = 0,
//   v = -int_0^y div_h w,   w = 0 at y = 0 and y = Y_max,
// with AB2 (Euler on the first step) for everything but d_yy, and
// Crank-Nicolson for d_yy. Diagnostics run after every step.

#include "prandtl/dyadic.hpp"
#include "prandtl/grid_field.hpp"
#include "prandtl/norms.hpp"
#include "prandtl/radius.hpp"
#include "prandtl/shear.hpp"
#include "prandtl/weights.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace prandtl::solver {

struct SolverConfig {
  GridSpec grid{};
  double epsilon = 0.04;
  double delta = 0.5;
  double lambda = 1.0;
  double dt = 0.01;
  double t_max = 0.0;  // <= 0: automatic, see resolved_t_max()
  std::uint64_t seed = 20240601;
  double profile_width = 1.0;  // q(y) = y^2 exp(-y^2 / (2 width^2))
  double mask_scale = 0.5;     // m(xi) = 1 - exp(-(|xi| / mask_scale)^2)
  double data_norm = -1.0;     // < 0: the data norm of w0 equals epsilon
  bool dealias = true;
  bool linearized = false;     // drop w . grad_h w and v d_y w
  double tail_tolerance = 1e-8;
  double cfl_limit = 0.8;
  double imag_tolerance = 1e-12;
  bool continue_to_full_band = false;
  std::array<double, 2> direction{1.0, 0.0};  // outflow direction (d = 3)

  double resolved_data_norm() const { return data_norm < 0.0 ? epsilon : data_norm; }

  /// 5x the predicted crossing (delta / (4 lambda eps))^{4/3}, at least 10.
  double resolved_t_max() const {
    if (t_max > 0.0) return t_max;
    const double scale = std::max(epsilon, resolved_data_norm());
    if (scale <= 0.0) return 10.0;
    return std::max(10.0, 5.0 * std::pow(delta / (4.0 * lambda * scale), 4.0 / 3.0));
  }

  void validate() const {
    grid.validate();
    if (!(epsilon >= 0.0 && epsilon <= 0.5)) throw std::invalid_argument("epsilon must lie in [0, 0.5]");
    if (!(delta > 0.0 && delta <= 2.0)) throw std::invalid_argument("delta must lie in (0, 2]");
    if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    if (!(profile_width > 0.0)) throw std::invalid_argument("profile_width must be positive");
    if (!(mask_scale > 0.0)) throw std::invalid_argument("mask_scale must be positive");
    if (data_norm > 0.5) throw std::invalid_argument("data_norm must be <= 0.5");
    if (!(tail_tolerance > 0.0) || !(cfl_limit > 0.0) || !(imag_tolerance > 0.0))
      throw std::invalid_argument("validity thresholds must be positive");
    if (grid.d == 3 && std::abs(std::hypot(direction[0], direction[1]) - 1.0) > 1e-12)
      throw std::invalid_argument("direction must be a unit vector");
    // Shear part of the advective CFL; the full bound (with |w|) is monitored per step.
    if (dt * epsilon * grid.max_xi() > cfl_limit) throw std::invalid_argument("dt violates the advective CFL bound");
  }
};

/// Data norm: ||e^{Psi(0)} e^{delta |D|} w||_{B^{(d-1)/2,0}}.
inline double data_norm(const dyadic::FilterBank& bank, const Field& w, double delta) {
  const auto& s = w.spec();
  return norms::besov_norm(bank, w, 0.5 * (s.d - 1), norms::Weighting::psi_at(s, 0.0, delta)).value;
}

namespace detail {

inline std::size_t partner(const GridSpec& s, std::size_t p) {
  const std::size_t n = static_cast<std::size_t>(s.n_h);
  if (s.d == 2) return (n - p) % n;
  const std::size_t i = p / n, k = p % n;
  return ((n - i) % n) * n + (n - k) % n;
}

}  // namespace detail

/// w0_hat(xi, y) = A e^{-2 delta |xi|} m(xi) e^{i theta_xi} q(y), Hermitian in xi,
/// no DC or Nyquist content, A fixed by the data-norm normalization.
inline Field init_data(const SolverConfig& cfg) {
  const auto& s = cfg.grid;
  const auto bank = dyadic::build_filters(s);
  Field w = Field::zeros(s, Layout::Spectral);
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  const double width2 = cfg.profile_width * cfg.profile_width;
  std::vector<double> q(s.m);
  for (int j = 0; j < s.m; ++j) {
    const double y = s.y(j);
    q[j] = y * y * std::exp(-y * y / (2.0 * width2));
  }
  q[0] = 0.0;
  q[s.m - 1] = 0.0;
  const std::size_t n = w.row_size();
  for (int c = 0; c < w.components(); ++c) {
    std::vector<cplx> coef(n);
    for (std::size_t p = 0; p < n; ++p) {
      const std::size_t pp = detail::partner(s, p);
      if (pp == p || s.max_axis_index(p) == s.n_h / 2) continue;
      if (pp < p) {
        coef[p] = std::conj(coef[pp]);
        continue;
      }
      const double k = s.abs_xi(p);
      const double mask = 1.0 - std::exp(-(k / cfg.mask_scale) * (k / cfg.mask_scale));
      coef[p] = std::polar(std::exp(-2.0 * cfg.delta * k) * mask, angle(rng));
    }
    for (int j = 0; j < s.m; ++j) {
      auto r = w.row(c, j);
      for (std::size_t p = 0; p < n; ++p) r[p] = coef[p] * q[j];
    }
  }
  const double target = cfg.resolved_data_norm();
  const double raw = data_norm(bank, w, cfg.delta);
  w *= raw > 0.0 ? target / raw : 0.0;
  return w;
}

/// Physical-space by-products of one right-hand-side evaluation.
struct RhsProbe {
  double max_abs_w = 0.0;     // sup |w| over the grid
  double tail = 0.0;          // sup |w| over the top two rows
  double imag_residue = 0.0;  // sup |Im w| after the inverse transform
};

struct RhsOptions {
  bool dealias = true;
  bool linearized = false;
};

/// -(w + u^s) . grad_h w + V (d_y w + d_y u^s e),  V = int_0^y div_h w.
/// The shear terms are applied mode by mode; the quadratic terms go through
/// physical space with 2/3 truncation of the factors and of the result.
inline Field prandtl_rhs(const Field& w, const shear::ShearProfile& shear, RhsOptions opt = {},
                         RhsProbe* probe = nullptr) {
  if (w.layout() != Layout::Spectral) throw std::invalid_argument("prandtl_rhs: needs spectral form");
  const auto& s = w.spec();
  const int nc = w.components();
  if (nc != s.components()) throw std::invalid_argument("prandtl_rhs: expected d-1 components");
  if (static_cast<int>(shear.us.size()) != s.m) throw std::invalid_argument("prandtl_rhs: shear profile grid mismatch");
  const std::size_t n = w.row_size();
  const std::array<double, 2> e = s.d == 2 ? std::array<double, 2>{1.0, 0.0} : shear.direction;

  const Field V = vertical_integral(horizontal_divergence(w));
  Field rhs(s, nc, Layout::Spectral);

  // Linear shear coupling: -u^s (e . i xi) w_c + V d_y u^s e_c.
  std::vector<cplx> transport(n);
  for (std::size_t p = 0; p < n; ++p) {
    const bool nyq = s.max_axis_index(p) == s.n_h / 2;
    double ex = 0.0;
    for (int a = 0; a < s.d - 1; ++a) ex += e[a] * s.xi(p, a);
    transport[p] = nyq ? cplx{} : cplx(0.0, ex);
  }
  for (int c = 0; c < nc; ++c)
    for (int j = 0; j < s.m; ++j) {
      auto src = w.row(c, j);
      auto vr = V.row(0, j);
      auto dst = rhs.row(c, j);
      const double us = shear.us[j], dus = shear.dus[j] * e[c];
      for (std::size_t p = 0; p < n; ++p) dst[p] = -us * transport[p] * src[p] + dus * vr[p];
    }

  const bool want_phys = !opt.linearized || probe != nullptr;
  if (!want_phys) return rhs;

  const Field wd = opt.dealias ? dealiased(w) : w;
  const Field w_phys = to_physical(wd);
  if (probe) {
    // Probe the untruncated state.
    const Field full = opt.dealias ? to_physical(w) : w_phys;
    probe->max_abs_w = 0.0;
    probe->tail = 0.0;
    probe->imag_residue = max_imag_residue(full);
    for (int c = 0; c < nc; ++c)
      for (int j = 0; j < s.m; ++j)
        for (const auto& v : full.row(c, j)) {
          const double a = std::abs(v.real());
          probe->max_abs_w = std::max(probe->max_abs_w, a);
          if (j >= s.m - 2) probe->tail = std::max(probe->tail, a);
        }
  }
  if (opt.linearized) return rhs;

  const Field V_phys = to_physical(opt.dealias ? dealiased(V) : V);
  const Field dyw_phys = to_physical(vertical_derivative(wd));
  std::array<Field, 2> dw_phys;
  for (int a = 0; a < s.d - 1; ++a) dw_phys[a] = to_physical(horizontal_derivative(wd, a));

  Field prod(s, nc, Layout::Physical);
  for (int c = 0; c < nc; ++c)
    for (int j = 0; j < s.m; ++j) {
      auto dst = prod.row(c, j);
      auto vr = V_phys.row(0, j);
      auto dy = dyw_phys.row(c, j);
      for (std::size_t p = 0; p < n; ++p) {
        double acc = vr[p].real() * dy[p].real();
        for (int a = 0; a < s.d - 1; ++a) acc -= w_phys.at(a, j, p).real() * dw_phys[a].at(c, j, p).real();
        dst[p] = cplx(acc, 0.0);
      }
    }
  Field nl = to_spectral(prod);
  if (opt.dealias) dealias(nl);
  rhs += nl;
  return rhs;
}

/// Crank-Nicolson operator (1 - r/2 D2) on the interior rows, factored once.
class DiffusionSolve {
 public:
  DiffusionSolve() = default;
  DiffusionSolve(int m, double dt, double dy) : m_(m), r_(dt / (dy * dy)) {
    const int n = m - 2;
    cp_.resize(n);
    denom_.resize(n);
    const double diag = 1.0 + r_, off = -0.5 * r_;
    for (int i = 0; i < n; ++i) {
      denom_[i] = i == 0 ? diag : diag - off * cp_[i - 1];
      cp_[i] = off / denom_[i];
    }
  }

  double r() const { return r_; }

  /// Advance w by one step: (1 - r/2 D2) w' = (1 + r/2 D2) w + dt * explicit_part,
  /// w' = 0 on the first and last rows. Rows are swept together, one
  /// independent tridiagonal system per (component, mode).
  Field apply(const Field& w, const Field& explicit_part, double dt) const {
    const auto& s = w.spec();
    const std::size_t n = w.row_size();
    const double half = 0.5 * r_, off = -0.5 * r_;
    Field out(s, w.components(), Layout::Spectral);
    for (int c = 0; c < w.components(); ++c) {
      // Forward elimination into out rows 1 .. m-2.
      for (int j = 1; j <= m_ - 2; ++j) {
        auto lo = w.row(c, j - 1), mid = w.row(c, j), hi = w.row(c, j + 1);
        auto ex = explicit_part.row(c, j);
        auto dst = out.row(c, j);
        const int i = j - 1;
        for (std::size_t p = 0; p < n; ++p) {
          cplx b = mid[p] + half * (lo[p] - 2.0 * mid[p] + hi[p]) + dt * ex[p];
          if (i > 0) b -= off * out.at(c, j - 1, p);
          dst[p] = b / denom_[i];
        }
      }
      for (int j = m_ - 3; j >= 1; --j) {
        auto dst = out.row(c, j);
        auto nxt = out.row(c, j + 1);
        const double cp = cp_[j - 1];
        for (std::size_t p = 0; p < n; ++p) dst[p] -= cp * nxt[p];
      }
    }
    return out;
  }

 private:
  int m_ = 0;
  double r_ = 0.0;
  std::vector<double> cp_;
  std::vector<double> denom_;
};

/// Source term hook (spectral, same shape as w) evaluated at the explicit time level.
using Forcing = std::function<Field(double t)>;

struct TraceRow {
  double t = 0.0;
  double theta = 0.0;
  double theta_dot = 0.0;
  double band = 0.0;
  double radius = 0.0;
  bool radius_resolved = false;
  bool alive = true;
  double besov_w = 0.0;        // ||e^Psi w_Phi||_{B^{(d-1)/2,0}}
  double besov_dyw = 0.0;      // ||e^Psi d_y w_Phi||_{B^{(d-1)/2,0}}
  double shear_norm = 0.0;     // ||e^Psi d_y u^s||_{L^2_v}
  double cl_inf_w = 0.0;       // running L~^inf_t(B^{(d-1)/2,0})
  double cl2_dyw = 0.0;        // running L~^2_t(B^{(d-1)/2,0})
  double cl_weighted_w = 0.0;  // running L~^2_{t,theta'}(B^{d/2,0})
  double energy_psi = 0.0;     // ||e^Psi w||^2_{L^2_+}
  double tail = 0.0;
  double max_abs_w = 0.0;
};

struct RunRecord {
  SolverConfig config;
  bool valid = true;
  std::string cause;  // empty when valid
  std::string stop_reason;
  double t_end = 0.0;
  long steps = 0;
  std::optional<double> t_half_band;  // theta = delta / (2 lambda)
  std::optional<double> t_star;       // theta = delta / lambda
  double data_norm = 0.0;             // data norm of w0
  double bound_ratio = 0.0;           // (L~^inf + L~^2) / data_norm
  double theta_envelope_sup = 0.0;    // sup theta / (<t>^{3/4} (data_norm + eps))
  double min_radius_margin = 0.0;     // min (measured radius - band) over resolved rows
  int unresolved_radius_rows = 0;
  double max_tail = 0.0;
  double max_imag_residue = 0.0;
  double max_energy_psi = 0.0;
  std::vector<TraceRow> trace;
  norms::NormSeries series_w;
  norms::NormSeries series_dyw;
  Field final_field;
};

/// Stateful stepper; run() drives it to a stop condition.
class Solver {
 public:
  explicit Solver(SolverConfig cfg, std::optional<Field> initial = std::nullopt, Forcing forcing = {})
      : cfg_(std::move(cfg)),
        bank_(dyadic::build_filters(cfg_.grid)),
        radius_(cfg_.delta, cfg_.lambda),
        diffusion_(cfg_.grid.m, cfg_.dt, cfg_.grid.dy()),
        forcing_(std::move(forcing)) {
    cfg_.validate();
    w_ = initial ? std::move(*initial) : init_data(cfg_);
    if (w_.layout() != Layout::Spectral) w_ = to_spectral(w_);
    if (!(w_.spec() == cfg_.grid) || w_.components() != cfg_.grid.components())
      throw std::invalid_argument("Solver: initial field does not match the grid");
    enforce_dirichlet(w_, true);
    record_.config = cfg_;
    record_.data_norm = data_norm(bank_, w_, cfg_.delta);
    record_.series_w = norms::NormSeries(bank_.block_min(), bank_.k_max() - bank_.block_min() + 1);
    record_.series_dyw = record_.series_w;
    record_.min_radius_margin = std::numeric_limits<double>::infinity();
    shear_ = shear::make_profile(cfg_.grid, 0.0, cfg_.epsilon, cfg_.direction);
    const auto d = diagnose(w_, 0.0, radius_.band());
    radius_.seed(0.0, d.rate);
    commit(d, 0.0);
  }

  const SolverConfig& config() const { return cfg_; }
  const Field& state() const { return w_; }
  double time() const { return t_; }
  long steps() const { return steps_; }
  const radius::RadiusState& radius_state() const { return radius_; }
  const dyadic::FilterBank& bank() const { return bank_; }
  bool finished() const { return finished_; }
  const RunRecord& record() const { return record_; }

  /// One IMEX step plus diagnostics. Returns false once a stop condition holds.
  bool step() {
    if (finished_) return false;
    RhsProbe probe;
    Field n_now = prandtl_rhs(w_, shear_, {cfg_.dealias, cfg_.linearized}, &probe);
    if (forcing_) n_now += forcing_(t_);
    if (!monitor(probe)) return false;
    Field ex = n_now;
    if (n_prev_) {
      ex *= 1.5;
      Field lag = *n_prev_;
      lag *= 0.5;
      ex -= lag;
    }
    Field next = diffusion_.apply(w_, ex, cfg_.dt);
    for (const auto& v : next.data())
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return fail("nan");

    const double t_next = static_cast<double>(steps_ + 1) * cfg_.dt;
    shear_ = shear::make_profile(cfg_.grid, t_next, cfg_.epsilon, cfg_.direction);
    const double band_lag = radius_.band();
    const double theta_prev = radius_.theta();
    const auto d = diagnose(next, t_next, band_lag);
    if (d.overflow) return fail("overflow");
    radius_.advance(d.rate, cfg_.dt);
    const double theta_now = radius_.theta();
    const double half = cfg_.delta / (2.0 * cfg_.lambda);
    const double full = cfg_.delta / cfg_.lambda;
    auto crossing = [&](double level) { return t_ + cfg_.dt * (level - theta_prev) / (theta_now - theta_prev); };
    if (!record_.t_half_band && theta_now >= half) record_.t_half_band = crossing(half);
    if (theta_now >= full) {
      // The band is exhausted inside this step: keep the previous state.
      record_.t_star = crossing(full);
      return stop("band exhausted");
    }
    n_prev_ = std::move(n_now);
    w_ = std::move(next);
    t_ = t_next;
    ++steps_;
    commit(d, t_);
    if (record_.t_half_band && !cfg_.continue_to_full_band) return stop("half band");
    if (t_ >= cfg_.resolved_t_max() - 1e-12 * cfg_.dt) return stop("t_max");
    return true;
  }

  RunRecord run() {
    while (step()) {
    }
    return finish();
  }

  RunRecord finish() {
    finished_ = true;
    RunRecord out = record_;
    out.t_end = t_;
    out.steps = steps_;
    out.final_field = w_;
    const double s = 0.5 * (cfg_.grid.d - 1);
    if (out.data_norm > 0.0)
      out.bound_ratio =
          (out.series_w.chemin_lerner(dyadic::kInf, s) + out.series_dyw.chemin_lerner(2.0, s)) / out.data_norm;
    const double scale = out.data_norm + cfg_.epsilon;
    out.theta_envelope_sup = 0.0;
    if (scale > 0.0)
      for (const auto& r : out.trace)
        out.theta_envelope_sup = std::max(out.theta_envelope_sup, r.theta / (std::pow(bracket(r.t), 0.75) * scale));
    if (!std::isfinite(out.min_radius_margin)) out.min_radius_margin = 0.0;
    return out;
  }

 private:
  struct Diagnostics {
    std::vector<double> blocks_w;
    std::vector<double> blocks_dyw;
    double besov_w = 0.0;
    double energy_psi = 0.0;
    radius::RateResult rate_result;
    double rate = 0.0;
    bool overflow = false;
  };

  Diagnostics diagnose(const Field& w, double t, double band) const {
    const auto& s = cfg_.grid;
    Diagnostics d;
    const auto weighting = norms::Weighting::psi_at(s, t, band);
    const auto ew = norms::mode_energies(w, weighting);
    d.blocks_w = norms::block_norms(bank_, ew.energy);
    d.besov_w = norms::besov_from_blocks(bank_, d.blocks_w, 0.5 * (s.d - 1));
    d.rate_result = radius::theta_rate(bank_, w, shear_, band, t);
    d.blocks_dyw = d.rate_result.dyw_blocks;
    d.rate = d.rate_result.rate;
    const auto plain = norms::mode_energies(w, norms::Weighting::psi_at(s, t, 0.0));
    for (double v : plain.energy) d.energy_psi += v;
    d.energy_psi *= s.box_measure();
    d.overflow = ew.overflow || d.rate_result.overflow || plain.overflow || !std::isfinite(d.rate);
    return d;
  }

  void commit(const Diagnostics& d, double t) {
    const auto& s = cfg_.grid;
    record_.series_w.append(t, d.blocks_w, d.rate);
    record_.series_dyw.append(t, d.blocks_dyw);
    TraceRow row;
    row.t = t;
    row.theta = radius_.theta();
    row.theta_dot = d.rate;
    row.band = radius_.band();
    row.alive = radius_.alive();
    row.besov_w = d.besov_w;
    row.besov_dyw = d.rate_result.besov_dyw;
    row.shear_norm = d.rate_result.shear_norm;
    row.cl_inf_w = record_.series_w.chemin_lerner(dyadic::kInf, 0.5 * (s.d - 1));
    row.cl2_dyw = record_.series_dyw.chemin_lerner(2.0, 0.5 * (s.d - 1));
    row.cl_weighted_w = record_.series_w.weighted_chemin_lerner(0.5 * s.d);
    row.energy_psi = d.energy_psi;
    const auto est = radius::measure_radius(w_);
    row.radius = est.radius;
    row.radius_resolved = est.resolved;
    if (est.resolved)
      record_.min_radius_margin = std::min(record_.min_radius_margin, est.radius - row.band);
    else
      ++record_.unresolved_radius_rows;
    if (!record_.trace.empty()) {
      row.tail = last_probe_.tail;
      row.max_abs_w = last_probe_.max_abs_w;
    }
    record_.max_energy_psi = std::max(record_.max_energy_psi, d.energy_psi);
    record_.trace.push_back(row);
  }

  bool monitor(const RhsProbe& probe) {
    last_probe_ = probe;
    record_.max_tail = std::max(record_.max_tail, probe.tail);
    record_.max_imag_residue = std::max(record_.max_imag_residue, probe.imag_residue);
    if (!std::isfinite(probe.max_abs_w)) return fail("nan");
    const double scale = std::max(cfg_.epsilon, cfg_.resolved_data_norm());
    if (probe.tail > cfg_.tail_tolerance * scale) return fail("tail");
    if (probe.imag_residue > cfg_.imag_tolerance) return fail("reality");
    double us_max = 0.0;
    for (double v : shear_.us) us_max = std::max(us_max, std::abs(v));
    if (cfg_.dt * (us_max + probe.max_abs_w) * cfg_.grid.max_xi() > cfg_.cfl_limit) return fail("cfl");
    return true;
  }

  bool fail(const std::string& cause) {
    record_.valid = false;
    record_.cause = cause;
    return stop("invalid: " + cause);
  }

  bool stop(const std::string& reason) {
    record_.stop_reason = reason;
    finished_ = true;
    return false;
  }

  SolverConfig cfg_;
  dyadic::FilterBank bank_;
  radius::RadiusState radius_;
  DiffusionSolve diffusion_;
  Forcing forcing_;
  Field w_;
  std::optional<Field> n_prev_;
  shear::ShearProfile shear_;
  RhsProbe last_probe_;
  double t_ = 0.0;
  long steps_ = 0;
  bool finished_ = false;
  RunRecord record_;
};

inline RunRecord run(const SolverConfig& cfg) { return Solver(cfg).run(); }

}  // namespace prandtl::solver
