#pragma once

// L^2_+, B^{s,0}, Chemin-Lerner and weighted Chemin-Lerner norms evaluated
// shell by shell in the horizontal-spectral representation.

#include "prandtl/dyadic.hpp"
#include "prandtl/grid_field.hpp"
#include "prandtl/weights.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace prandtl::norms {

/// Samples whose weighted magnitude exceeds this mark the evaluation invalid.
inline constexpr double kOverflowLimit = 1e30;

/// Optional weights applied on the fly: exp(log_weight_y[j] + band |xi|).
struct Weighting {
  std::vector<double> log_weight_y;  // empty: no vertical weight
  double band = 0.0;                 // phase e^{band |xi|}; 0: none

  static Weighting psi_at(const GridSpec& s, double t, double band = 0.0) {
    Weighting w;
    w.log_weight_y.resize(s.m);
    for (int j = 0; j < s.m; ++j) w.log_weight_y[j] = psi(t, s.y(j));
    w.band = band;
    return w;
  }
};

struct ModeEnergies {
  std::vector<double> energy;  // per mode: sum_c int |weighted w_hat|^2 dy
  bool overflow = false;
};

/// Per-mode vertical energies of a spectral field, trapezoid in y. Weighted
/// magnitudes are formed as exp(log weight + log |w_hat|) so large weights on
/// tiny samples never overflow.
inline ModeEnergies mode_energies(const Field& f, const Weighting& weighting = {}) {
  if (f.layout() != Layout::Spectral) throw std::invalid_argument("mode_energies: needs spectral form");
  const auto& s = f.spec();
  const std::size_t n = f.row_size();
  ModeEnergies out{std::vector<double>(n, 0.0), false};
  const bool weighted = !weighting.log_weight_y.empty() || weighting.band != 0.0;
  std::vector<double> phase_log(n, 0.0);
  if (weighting.band != 0.0)
    for (std::size_t p = 0; p < n; ++p) phase_log[p] = weighting.band * s.abs_xi(p);
  const double dy = s.dy();
  const double log_limit = std::log(kOverflowLimit);
  for (int c = 0; c < f.components(); ++c) {
    for (int j = 0; j < s.m; ++j) {
      const double wj = (j == 0 || j == s.m - 1) ? 0.5 * dy : dy;
      const double ly = weighting.log_weight_y.empty() ? 0.0 : weighting.log_weight_y[j];
      auto r = f.row(c, j);
      for (std::size_t p = 0; p < n; ++p) {
        const double a = std::abs(r[p]);
        if (a == 0.0) continue;
        double mag = a;
        if (weighted) {
          const double lg = ly + phase_log[p] + std::log(a);
          if (lg > log_limit) out.overflow = true;
          mag = std::exp(std::min(lg, 700.0));
        }
        out.energy[p] += wj * mag * mag;
      }
    }
  }
  return out;
}

inline double l2_plus_norm(const Field& f, const Weighting& weighting = {}) {
  const Field spec = f.layout() == Layout::Spectral ? f : to_spectral(f);
  const auto e = mode_energies(spec, weighting);
  double sum = 0.0;
  for (double v : e.energy) sum += v;
  return std::sqrt(f.spec().box_measure() * sum);
}

/// Block L^2_+ norms, index b - (k_min - 1) for b in [k_min - 1, k_max]; the
/// first entry is the S_{k_min} block.
inline std::vector<double> block_norms(const dyadic::FilterBank& bank, const std::vector<double>& energies) {
  const int b0 = bank.block_min();
  std::vector<double> out(static_cast<std::size_t>(bank.k_max() - b0 + 1));
  for (int b = b0; b <= bank.k_max(); ++b) {
    const auto w = bank.block_weights(b);
    double sum = 0.0;
    for (std::size_t p = 0; p < w.size(); ++p) sum += w[p] * w[p] * energies[p];
    out[b - b0] = std::sqrt(bank.spec().box_measure() * sum);
  }
  return out;
}

inline double besov_from_blocks(const dyadic::FilterBank& bank, const std::vector<double>& blocks, double s) {
  double total = 0.0;
  for (std::size_t i = 0; i < blocks.size(); ++i) total += std::exp2((bank.block_min() + static_cast<int>(i)) * s) * blocks[i];
  return total;
}

struct BesovResult {
  double value = 0.0;
  bool overflow = false;
};

/// || (2^{ks} ||Delta_k u||_{L^2_+})_k ||_{l^1}, low block scored at k_min - 1.
inline BesovResult besov_norm(const dyadic::FilterBank& bank, const Field& f, double s,
                              const Weighting& weighting = {}) {
  if (!(f.spec() == bank.spec())) throw std::invalid_argument("besov_norm: grid mismatch");
  const Field spec = f.layout() == Layout::Spectral ? f : to_spectral(f);
  const auto e = mode_energies(spec, weighting);
  return {besov_from_blocks(bank, block_norms(bank, e.energy), s), e.overflow};
}

inline std::atomic<std::size_t>& empty_series_warnings() {
  static std::atomic<std::size_t> counter{0};
  return counter;
}

/// Per-block norm samples over time with running Chemin-Lerner accumulators.
/// Single writer while a run is in progress.
class NormSeries {
 public:
  NormSeries() = default;
  NormSeries(int block_min, int block_count) : block_min_(block_min), samples_(block_count) {
    running_max_.assign(block_count, 0.0);
    running_int2_.assign(block_count, 0.0);
    running_wint2_.assign(block_count, 0.0);
  }

  int block_min() const { return block_min_; }
  int block_count() const { return static_cast<int>(samples_.size()); }
  std::size_t size() const { return times_.size(); }
  bool empty() const { return times_.empty(); }
  const std::vector<double>& times() const { return times_; }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& samples(int block_index) const { return samples_.at(block_index); }

  void append(double t, const std::vector<double>& blocks, double weight = 1.0) {
    if (static_cast<int>(blocks.size()) != block_count())
      throw std::invalid_argument("NormSeries: block count mismatch");
    if (!times_.empty() && !(t > times_.back()))
      throw std::invalid_argument("NormSeries: time stamps must increase strictly");
    if (weight < 0.0) throw std::invalid_argument("NormSeries: weight must be nonnegative");
    for (double v : blocks)
      if (!(v >= 0.0)) throw std::invalid_argument("NormSeries: samples must be nonnegative");
    const bool first = times_.empty();
    const double dt = first ? 0.0 : t - times_.back();
    for (int b = 0; b < block_count(); ++b) {
      const double v = blocks[b];
      running_max_[b] = std::max(running_max_[b], v);
      if (!first) {
        const double prev = samples_[b].back();
        running_int2_[b] += 0.5 * dt * (prev * prev + v * v);
        running_wint2_[b] += 0.5 * dt * (weights_.back() * prev * prev + weight * v * v);
      }
      samples_[b].push_back(v);
    }
    times_.push_back(t);
    weights_.push_back(weight);
  }

  /// sum_b 2^{bs} max_n samples (p = inf) or 2^{bs} (trapezoid int samples^2)^{1/2} (p = 2).
  double chemin_lerner(double p, double s) const {
    if (p != 2.0 && p != dyadic::kInf) throw std::invalid_argument("chemin_lerner: p must be 2 or inf");
    if (empty()) {
      ++empty_series_warnings();
      return 0.0;
    }
    double total = 0.0;
    for (int b = 0; b < block_count(); ++b) {
      const double v = p == 2.0 ? std::sqrt(running_int2_[b]) : running_max_[b];
      total += std::exp2((block_min_ + b) * s) * v;
    }
    return total;
  }

  /// sum_b 2^{bs} (trapezoid int f(t) samples^2 dt)^{1/2}, f the per-step weight.
  double weighted_chemin_lerner(double s) const {
    if (empty()) {
      ++empty_series_warnings();
      return 0.0;
    }
    double total = 0.0;
    for (int b = 0; b < block_count(); ++b) total += std::exp2((block_min_ + b) * s) * std::sqrt(running_wint2_[b]);
    return total;
  }

 private:
  int block_min_ = 0;
  std::vector<double> times_;
  std::vector<double> weights_;
  std::vector<std::vector<double>> samples_;
  std::vector<double> running_max_;
  std::vector<double> running_int2_;
  std::vector<double> running_wint2_;
};

inline double chemin_lerner(const NormSeries& series, double p, double s) { return series.chemin_lerner(p, s); }
inline double weighted_chemin_lerner(const NormSeries& series, double s) { return series.weighted_chemin_lerner(s); }

struct WeightedField {
  Field field;
  bool overflow = false;
};

/// Multiply samples by e^{Psi(t, y)} (log space); flags e^{Psi}|w| > 1e30.
inline WeightedField weight_by_psi(const Field& f, double t) {
  const auto& s = f.spec();
  WeightedField out{f, false};
  const double log_limit = std::log(kOverflowLimit);
  for (int c = 0; c < f.components(); ++c)
    for (int j = 0; j < s.m; ++j) {
      const double lw = psi(t, s.y(j));
      for (auto& v : out.field.row(c, j)) {
        const double a = std::abs(v);
        if (a == 0.0) continue;
        const double lg = lw + std::log(a);
        if (lg > log_limit) out.overflow = true;
        v = std::polar(std::exp(std::min(lg, 700.0)), std::arg(v));
      }
    }
  return out;
}

}  // namespace prandtl::norms
