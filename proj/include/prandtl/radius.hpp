#pragma once

// Analytic band bookkeeping: phase multiplier e^{(delta - lambda theta)|xi|},
// the radius rate theta', its trapezoidal integration, the lifespan predicate,
// and an empirical radius read off the spectral decay.

#include "prandtl/dyadic.hpp"
#include "prandtl/grid_field.hpp"
#include "prandtl/norms.hpp"
#include "prandtl/shear.hpp"
#include "prandtl/weights.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

namespace prandtl::radius {

using prandtl::psi;
using prandtl::psi_residual;

struct RadiusSample {
  double t = 0.0;
  double theta = 0.0;
  double rate = 0.0;
};

class RadiusState {
 public:
  RadiusState(double delta, double lambda) : delta_(delta), lambda_(lambda) {
    if (!(delta > 0.0) || !(lambda > 0.0)) throw std::invalid_argument("RadiusState: delta and lambda must be positive");
  }

  double theta() const { return theta_; }
  double delta() const { return delta_; }
  double lambda() const { return lambda_; }
  double band() const { return delta_ - lambda_ * theta_; }
  /// alive iff theta < delta / lambda.
  bool alive() const { return theta_ < delta_ / lambda_; }
  double last_rate() const { return last_rate_; }
  const std::vector<RadiusSample>& history() const { return history_; }

  /// Record the rate at the current time without moving theta (first sample).
  void seed(double t, double rate) {
    if (!history_.empty()) throw std::logic_error("RadiusState: already seeded");
    if (rate < 0.0) throw std::invalid_argument("RadiusState: rate must be >= 0");
    last_rate_ = rate;
    history_.push_back({t, theta_, rate});
  }

  /// theta += dt (rate + previous rate) / 2.
  void advance(double rate, double dt) {
    if (rate < 0.0) throw std::invalid_argument("advance_theta: rate must be >= 0");
    const double t_prev = history_.empty() ? 0.0 : history_.back().t;
    theta_ += 0.5 * dt * (rate + last_rate_);
    last_rate_ = rate;
    history_.push_back({t_prev + dt, theta_, rate});
  }

 private:
  double delta_;
  double lambda_;
  double theta_ = 0.0;
  double last_rate_ = 0.0;
  std::vector<RadiusSample> history_;
};

inline RadiusState advance_theta(RadiusState state, double rate, double dt) {
  state.advance(rate, dt);
  return state;
}

struct PhasedField {
  Field field;
  bool overflow = false;
};

/// Mode-wise multiply by e^{band |xi|} in log space. band = 0 is the identity;
/// a negative band means the lifespan has expired and is rejected.
inline PhasedField apply_phase(const Field& f, double band) {
  if (f.layout() != Layout::Spectral) throw std::invalid_argument("apply_phase: needs spectral form");
  if (band < 0.0) throw std::domain_error("apply_phase: band is negative (lifespan expired)");
  PhasedField out{f, false};
  if (band == 0.0) return out;
  const auto& s = f.spec();
  const double log_limit = std::log(norms::kOverflowLimit);
  for (int c = 0; c < f.components(); ++c)
    for (int j = 0; j < s.m; ++j) {
      auto r = out.field.row(c, j);
      for (std::size_t p = 0; p < r.size(); ++p) {
        const double a = std::abs(r[p]);
        if (a == 0.0) continue;
        const double lg = band * s.abs_xi(p) + std::log(a);
        if (lg > log_limit) out.overflow = true;
        r[p] = std::polar(std::exp(std::min(lg, 700.0)), std::arg(r[p]));
      }
    }
  return out;
}

inline PhasedField apply_phase(const Field& f, const RadiusState& state) { return apply_phase(f, state.band()); }

/// Phi(xi) <= Phi(xi - eta) + Phi(eta) for Phi = band |.|.
inline bool check_subadditivity(double band, std::array<double, 2> xi, std::array<double, 2> eta) {
  if (band < 0.0) throw std::domain_error("check_subadditivity: band is negative");
  auto phi = [band](double a, double b) { return band * std::hypot(a, b); };
  const double lhs = phi(xi[0], xi[1]);
  const double rhs = phi(xi[0] - eta[0], xi[1] - eta[1]) + phi(eta[0], eta[1]);
  return lhs <= rhs * (1.0 + 4.0 * std::numeric_limits<double>::epsilon()) + 1e-300;
}

struct RateResult {
  double rate = 0.0;
  double besov_dyw = 0.0;    // ||e^Psi d_y w_Phi||_{B^{(d-1)/2,0}}
  double shear_norm = 0.0;   // ||e^Psi d_y u^s||_{L^2_v}
  std::vector<double> dyw_blocks;
  bool overflow = false;
};

/// theta'(t) = <t>^{1/4} (||e^Psi d_y w_Phi||_{B^{(d-1)/2,0}} + ||e^Psi d_y u^s||_{L^2_v}).
inline RateResult theta_rate(const dyadic::FilterBank& bank, const Field& w, const shear::ShearProfile& shear,
                             double band, double t) {
  if (band < 0.0) throw std::domain_error("theta_rate: band is negative");
  const auto& s = w.spec();
  const Field dyw = vertical_derivative(w);
  const auto weighting = norms::Weighting::psi_at(s, t, band);
  const auto energies = norms::mode_energies(dyw, weighting);
  RateResult r;
  r.dyw_blocks = norms::block_norms(bank, energies.energy);
  r.besov_dyw = norms::besov_from_blocks(bank, r.dyw_blocks, 0.5 * (s.d - 1));
  r.shear_norm = shear.weighted_norm;
  r.rate = std::pow(bracket(t), 0.25) * (r.besov_dyw + r.shear_norm);
  r.overflow = energies.overflow;
  return r;
}

struct RadiusEstimate {
  bool resolved = false;
  double radius = 0.0;
  int bins_used = 0;
};

inline constexpr double kNoiseFloor = 1e-14;

/// Empirical analyticity radius: least-squares slope of log(max_y |w_hat|)
/// against |xi| over unit-lattice annuli, from the first annulus past the peak
/// whose amplitude is below peak / e to the last annulus above the noise floor.
/// Fewer than 8 usable annuli -> unresolved.
inline RadiusEstimate measure_radius(const Field& f) {
  if (f.layout() != Layout::Spectral) throw std::invalid_argument("measure_radius: needs spectral form");
  const auto& s = f.spec();
  const double dxi = s.min_nonzero_xi();
  std::map<long, double> amp;  // annulus index -> max amplitude
  for (std::size_t p = 0; p < f.row_size(); ++p) {
    if (s.max_axis_index(p) == s.n_h / 2) continue;
    const long bin = std::lround(s.abs_xi(p) / dxi);
    if (bin == 0) continue;
    double a = 0.0;
    for (int c = 0; c < f.components(); ++c)
      for (int j = 0; j < s.m; ++j) a = std::max(a, std::abs(f.at(c, j, p)));
    amp[bin] = std::max(amp[bin], a);
  }
  std::vector<std::pair<double, double>> pts(amp.begin(), amp.end());
  RadiusEstimate est;
  if (pts.empty()) return est;
  std::size_t peak = 0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (pts[i].second > pts[peak].second) peak = i;
  const double start_level = pts[peak].second / std::numbers::e;
  std::size_t first = peak + 1;
  while (first < pts.size() && pts[first].second >= start_level) ++first;
  std::vector<double> xs, ys;
  for (std::size_t i = first; i < pts.size(); ++i) {
    if (pts[i].second <= kNoiseFloor) break;
    xs.push_back(pts[i].first * dxi);
    ys.push_back(std::log(pts[i].second));
  }
  est.bins_used = static_cast<int>(xs.size());
  if (xs.size() < 8) return est;
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  est.resolved = true;
  est.radius = -slope;
  return est;
}

}  // namespace prandtl::radius
