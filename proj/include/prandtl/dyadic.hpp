#pragma once

// Littlewood-Paley filter bank in the horizontal variables: shell projections
// Delta_k, low-pass S_k, Bony paraproduct splitting, and Bernstein ratio probes.

#include "prandtl/grid_field.hpp"

#include <array>
#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace prandtl::dyadic {

/// Smooth 0 -> 1 transition on [0, 1]: h(s) / (h(s) + h(1 - s)), h(s) = exp(-1/s).
inline double smooth_step(double s) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / s);
  const double b = std::exp(-1.0 / (1.0 - s));
  return a / (a + b);
}

/// d/ds of smooth_step.
inline double smooth_step_derivative(double s) {
  if (s <= 0.0 || s >= 1.0) return 0.0;
  const double a = std::exp(-1.0 / s);
  const double b = std::exp(-1.0 / (1.0 - s));
  const double da = a / (s * s);
  const double db = -b / ((1.0 - s) * (1.0 - s));
  return (da * b - a * db) / ((a + b) * (a + b));
}

/// Radial profiles of the decomposition. chi = 1 on |tau| <= 1, 0 on |tau| >= 4/3;
/// phi(tau) = chi(tau / 2) - chi(tau), supported in [1, 8/3].
struct Profile {
  std::function<double(double)> chi;
  std::function<double(double)> phi;

  static Profile standard() {
    auto chi = [](double tau) { return 1.0 - smooth_step(3.0 * (std::abs(tau) - 1.0)); };
    return Profile{chi, [chi](double tau) { return chi(0.5 * tau) - chi(tau); }};
  }
};

inline std::atomic<std::size_t>& out_of_range_warnings() {
  static std::atomic<std::size_t> counter{0};
  return counter;
}

class FilterBank {
 public:
  FilterBank(const GridSpec& spec, Profile profile) : spec_(spec), profile_(std::move(profile)) {
    spec_.validate();
    // Low block S_{k_min} must hold only the DC mode: 2^{-k_min} min|xi| >= 4/3.
    k_min_ = static_cast<int>(std::floor(std::log2(0.75 * spec_.min_nonzero_xi())));
    // S_{k_max + 1} is the identity on every resolved mode: 2^{k_max + 1} >= max|xi|.
    k_max_ = static_cast<int>(std::ceil(std::log2(spec_.max_xi()))) - 1;
    if (k_max_ - k_min_ + 1 < 3) {
      throw std::invalid_argument("build_filters: grid resolves fewer than 3 dyadic shells (k in [" +
                                  std::to_string(k_min_) + ", " + std::to_string(k_max_) + "])");
    }
    const std::size_t n = spec_.modes_per_row();
    abs_xi_.resize(n);
    for (std::size_t p = 0; p < n; ++p) abs_xi_[p] = spec_.abs_xi(p);
    phi_.assign(static_cast<std::size_t>(k_max_ - k_min_ + 1), std::vector<double>(n));
    for (int k = k_min_; k <= k_max_; ++k)
      for (std::size_t p = 0; p < n; ++p) phi_[k - k_min_][p] = profile_.phi(std::ldexp(abs_xi_[p], -k));
    chi_low_.resize(n);
    for (std::size_t p = 0; p < n; ++p) chi_low_[p] = profile_.chi(std::ldexp(abs_xi_[p], -k_min_));
  }

  const GridSpec& spec() const { return spec_; }
  const Profile& profile() const { return profile_; }
  int k_min() const { return k_min_; }
  int k_max() const { return k_max_; }
  int shell_count() const { return k_max_ - k_min_ + 1; }
  std::span<const double> abs_xi() const { return abs_xi_; }

  /// phi(2^{-k}|xi_p|) for k in [k_min, k_max].
  std::span<const double> shell_weights(int k) const { return phi_.at(static_cast<std::size_t>(k - k_min_)); }
  /// chi(2^{-k_min}|xi_p|).
  std::span<const double> low_weights() const { return chi_low_; }

  /// Block index b runs over [k_min - 1, k_max]; b = k_min - 1 is the S_{k_min} block.
  int block_min() const { return k_min_ - 1; }
  std::span<const double> block_weights(int b) const {
    return b == k_min_ - 1 ? std::span<const double>(chi_low_) : shell_weights(b);
  }

  /// Multiplier of S_k for any integer k, evaluated on the fly.
  std::vector<double> low_pass_weights(int k) const {
    std::vector<double> w(abs_xi_.size());
    for (std::size_t p = 0; p < w.size(); ++p) w[p] = profile_.chi(std::ldexp(abs_xi_[p], -k));
    return w;
  }

 private:
  GridSpec spec_;
  Profile profile_;
  int k_min_ = 0;
  int k_max_ = 0;
  std::vector<double> abs_xi_;
  std::vector<std::vector<double>> phi_;
  std::vector<double> chi_low_;
};

inline FilterBank build_filters(const GridSpec& spec, Profile profile = Profile::standard()) {
  return FilterBank(spec, std::move(profile));
}

/// Multiply every mode of a spectral field by weights[p].
inline Field apply_multiplier(const Field& f, std::span<const double> weights) {
  if (f.layout() != Layout::Spectral) throw std::invalid_argument("apply_multiplier: needs spectral form");
  if (weights.size() != f.row_size()) throw std::invalid_argument("apply_multiplier: weight size mismatch");
  Field out = f;
  for (int c = 0; c < f.components(); ++c)
    for (int j = 0; j < f.spec().m; ++j) {
      auto r = out.row(c, j);
      for (std::size_t p = 0; p < r.size(); ++p) r[p] *= weights[p];
    }
  return out;
}

/// Delta_k. Out-of-range k yields a zero field and bumps out_of_range_warnings().
inline Field project_shell(const FilterBank& bank, const Field& f, int k) {
  if (!(f.spec() == bank.spec())) throw std::invalid_argument("project_shell: grid mismatch");
  if (k < bank.k_min() || k > bank.k_max()) {
    ++out_of_range_warnings();
    return Field(f.spec(), f.components(), Layout::Spectral);
  }
  return apply_multiplier(f, bank.shell_weights(k));
}

/// S_k for any k.
inline Field project_low(const FilterBank& bank, const Field& f, int k) {
  if (!(f.spec() == bank.spec())) throw std::invalid_argument("project_low: grid mismatch");
  const auto w = bank.low_pass_weights(k);
  return apply_multiplier(f, w);
}

inline Field project_block(const FilterBank& bank, const Field& f, int b) {
  return apply_multiplier(f, bank.block_weights(b));
}

/// max over lattice modes of |chi(tau) + sum_{j>=0} phi(2^{-j} tau) - 1| with
/// tau = |xi|, together with the bank-level identity S_{k_min} + sum_k Delta_k = I.
inline double partition_residual(const FilterBank& bank) {
  const auto& prof = bank.profile();
  double worst = 0.0;
  for (std::size_t p = 0; p < bank.abs_xi().size(); ++p) {
    const double tau = bank.abs_xi()[p];
    double sum = prof.chi(tau);
    for (int j = 0; std::ldexp(tau, -j) >= 0.5; ++j) sum += prof.phi(std::ldexp(tau, -j));
    worst = std::max(worst, std::abs(sum - 1.0));
    double bank_sum = bank.low_weights()[p];
    for (int k = bank.k_min(); k <= bank.k_max(); ++k) bank_sum += bank.shell_weights(k)[p];
    worst = std::max(worst, std::abs(bank_sum - 1.0));
  }
  return worst;
}

/// Audit dump: one row per (k, mode) with the phi and chi(2^{-k}.) values.
inline void write_filter_bank_csv(const FilterBank& bank, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << "k,abs_xi,phi,chi\n" << std::setprecision(17);
  for (int k = bank.k_min(); k <= bank.k_max(); ++k) {
    const auto w = bank.shell_weights(k);
    for (std::size_t p = 0; p < w.size(); ++p) {
      const double tau = std::ldexp(bank.abs_xi()[p], -k);
      os << k << ',' << bank.abs_xi()[p] << ',' << w[p] << ',' << bank.profile().chi(tau) << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Bony decomposition fg = T_f g + T_g f + R(f, g) over the blocks
// b in [k_min - 1, k_max]. S_{b-1} is the block sum over indices <= b - 2.

struct BonyParts {
  Field t_f_g;
  Field t_g_f;
  Field remainder;
};

inline BonyParts bony_decompose(const FilterBank& bank, const Field& f, const Field& g) {
  if (!(f.spec() == g.spec()) || !(f.spec() == bank.spec()))
    throw std::invalid_argument("bony_decompose: grid mismatch");
  if (f.components() != 1 || g.components() != 1)
    throw std::invalid_argument("bony_decompose: expects scalar fields");
  const Field fd = dealiased(f);
  const Field gd = dealiased(g);
  const int b0 = bank.block_min();
  const int nb = bank.k_max() - b0 + 1;
  std::vector<Field> fb, gb;
  fb.reserve(nb);
  gb.reserve(nb);
  for (int b = b0; b <= bank.k_max(); ++b) {
    fb.push_back(to_physical(project_block(bank, fd, b)));
    gb.push_back(to_physical(project_block(bank, gd, b)));
  }
  const auto& s = f.spec();
  Field tfg(s, 1, Layout::Physical), tgf(s, 1, Layout::Physical), rem(s, 1, Layout::Physical);
  auto accumulate = [](Field& dst, const Field& a, const Field& b) {
    auto d = dst.component(0);
    auto x = a.component(0), y = b.component(0);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += x[i].real() * y[i].real();
  };
  Field low_f(s, 1, Layout::Physical), low_g(s, 1, Layout::Physical);
  for (int i = 0; i < nb; ++i) {
    if (i >= 2) {
      low_f += fb[i - 2];
      low_g += gb[i - 2];
    }
    accumulate(tfg, low_f, gb[i]);
    accumulate(tgf, low_g, fb[i]);
    Field near(s, 1, Layout::Physical);
    for (int j = std::max(0, i - 1); j <= std::min(nb - 1, i + 1); ++j) near += fb[j];
    accumulate(rem, near, gb[i]);
  }
  BonyParts parts{to_spectral(tfg), to_spectral(tgf), to_spectral(rem)};
  dealias(parts.t_f_g);
  dealias(parts.t_g_f);
  dealias(parts.remainder);
  return parts;
}

// ---------------------------------------------------------------------------
// Anisotropic Bernstein probes with mixed norms L^p_h(L^q_v): inner norm over y,
// outer over the horizontal box.

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline bool supported_exponent(double p) { return p == 1.0 || p == 2.0 || p == kInf; }

/// ||a||_{L^p_h(L^q_v)} of a physical field (vector magnitude over components).
inline double mixed_norm(const Field& physical, double p, double q) {
  if (physical.layout() != Layout::Physical) throw std::invalid_argument("mixed_norm: needs physical form");
  if (!supported_exponent(p) || !supported_exponent(q))
    throw std::invalid_argument("mixed_norm: exponents must be 1, 2 or inf");
  const auto& s = physical.spec();
  const double dy = s.dy();
  const std::size_t n = physical.row_size();
  std::vector<double> inner(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int j = 0; j < s.m; ++j) {
      double mag2 = 0.0;
      for (int c = 0; c < physical.components(); ++c) mag2 += std::norm(physical.at(c, j, i));
      const double mag = std::sqrt(mag2);
      const double wgt = (j == 0 || j == s.m - 1) ? 0.5 * dy : dy;
      if (q == 1.0) acc += wgt * mag;
      else if (q == 2.0) acc += wgt * mag2;
      else acc = std::max(acc, mag);
    }
    inner[i] = q == 2.0 ? std::sqrt(acc) : acc;
  }
  const double da = s.cell_area();
  if (p == kInf) return *std::max_element(inner.begin(), inner.end());
  double acc = 0.0;
  for (double v : inner) acc += p == 1.0 ? da * v : da * v * v;
  return p == 2.0 ? std::sqrt(acc) : acc;
}

struct BernsteinQuery {
  enum class Kind { Derivative, Reverse };
  Kind kind = Kind::Derivative;
  double p1 = 2.0;
  double p2 = 2.0;
  double q = 2.0;
  std::array<int, 2> alpha{1, 0};  // Derivative: multi-index; Reverse: uses order_n
  int order_n = 1;

  int alpha_order() const { return alpha[0] + alpha[1]; }
  double exponent(int d) const {
    const auto inv = [](double p) { return p == kInf ? 0.0 : 1.0 / p; };
    return alpha_order() + (d - 1) * (inv(p2) - inv(p1));
  }
};

namespace detail {

inline Field apply_monomial(const Field& f, std::array<int, 2> alpha) {
  Field out = f;
  for (int axis = 0; axis < 2; ++axis)
    for (int r = 0; r < alpha[axis]; ++r) out = horizontal_derivative(out, axis);
  return out;
}

inline std::vector<std::array<int, 2>> multi_indices(int d, int n) {
  std::vector<std::array<int, 2>> out;
  if (d == 2) return {{n, 0}};
  for (int a = 0; a <= n; ++a) out.push_back({a, n - a});
  return out;
}

inline void validate(const BernsteinQuery& query, int d) {
  if (!supported_exponent(query.p1) || !supported_exponent(query.p2) || !supported_exponent(query.q))
    throw std::invalid_argument("bernstein_check: exponents must be 1, 2 or inf");
  if (query.p2 > query.p1) throw std::invalid_argument("bernstein_check: requires p2 <= p1");
  if (query.alpha[0] < 0 || query.alpha[1] < 0 || (d == 2 && query.alpha[1] != 0))
    throw std::invalid_argument("bernstein_check: invalid multi-index");
  if (query.kind == BernsteinQuery::Kind::Reverse && (query.order_n < 1 || query.p1 != query.p2))
    throw std::invalid_argument("bernstein_check: reverse form needs N >= 1 and p1 == p2");
}

}  // namespace detail

/// Measured ratio for a shell-localized spectral field a at shell k:
///   Derivative: ||d^alpha a||_{p1,q} / (2^{k(|alpha| + (d-1)(1/p2 - 1/p1))} ||a||_{p2,q})
///   Reverse:    ||a||_{p1,q} / (2^{-kN} sup_{|alpha|=N} ||d^alpha a||_{p1,q})
inline double bernstein_check(const Field& a, int k, const BernsteinQuery& query) {
  if (a.layout() != Layout::Spectral) throw std::invalid_argument("bernstein_check: needs spectral form");
  const int d = a.spec().d;
  detail::validate(query, d);
  if (query.kind == BernsteinQuery::Kind::Derivative) {
    const double lhs = mixed_norm(to_physical(detail::apply_monomial(a, query.alpha)), query.p1, query.q);
    const double rhs = mixed_norm(to_physical(a), query.p2, query.q);
    return lhs / (std::exp2(k * query.exponent(d)) * rhs);
  }
  const double lhs = mixed_norm(to_physical(a), query.p1, query.q);
  double sup = 0.0;
  for (const auto& alpha : detail::multi_indices(d, query.order_n))
    sup = std::max(sup, mixed_norm(to_physical(detail::apply_monomial(a, alpha)), query.p1, query.q));
  return lhs / (std::exp2(-k * query.order_n) * sup);
}

namespace detail {

/// Discrete kernel K(x) = |box|^{-1} sum_m K_hat(m) e^{i xi.x} on the grid; returns ||K||_{l^r(dA)}.
inline double kernel_norm(const GridSpec& s, const std::vector<cplx>& symbol, double r) {
  Field k(s, 1, Layout::Spectral);
  // Only row 0 is used; the field carries m rows because Field always spans the vertical grid.
  std::copy(symbol.begin(), symbol.end(), k.row(0, 0).begin());
  const Field phys = to_physical(k);
  const double scale = 1.0 / s.box_measure();
  const double da = s.cell_area();
  double acc = 0.0;
  for (const auto& v : phys.row(0, 0)) {
    const double mag = std::abs(v) * scale;
    if (r == kInf) acc = std::max(acc, mag);
    else acc += da * std::pow(mag, r);
  }
  return r == kInf ? acc : std::pow(acc, 1.0 / r);
}

inline double young_exponent(double p1, double p2) {
  const auto inv = [](double p) { return p == kInf ? 0.0 : 1.0 / p; };
  const double inv_r = 1.0 + inv(p1) - inv(p2);
  return inv_r <= 0.0 ? kInf : 1.0 / inv_r;
}

}  // namespace detail

/// Upper bound for bernstein_check at shell k derived from the filter profile:
/// Young's inequality with the enlarged-shell kernel (multiplier phi_{k-1} + phi_k
/// + phi_{k+1}, equal to 1 on supp phi_k); Plancherel when p1 = p2 = q = 2.
inline double bernstein_constant(const FilterBank& bank, int k, const BernsteinQuery& query) {
  const auto& s = bank.spec();
  detail::validate(query, s.d);
  const auto& prof = bank.profile();
  const std::size_t n = s.modes_per_row();
  const bool hilbert = query.p1 == 2.0 && query.p2 == 2.0 && query.q == 2.0;
  std::vector<double> enlarged(n);
  for (std::size_t p = 0; p < n; ++p) {
    const double tau = std::ldexp(bank.abs_xi()[p], -k);
    enlarged[p] = prof.phi(2.0 * tau) + prof.phi(tau) + prof.phi(0.5 * tau);
  }
  auto monomial = [&](std::size_t p, std::array<int, 2> alpha) {
    cplx v(1.0, 0.0);
    for (int axis = 0; axis < 2; ++axis)
      for (int r = 0; r < alpha[axis]; ++r) v *= cplx(0.0, s.xi(p, axis));
    return v;
  };
  if (query.kind == BernsteinQuery::Kind::Derivative) {
    const double scale = std::exp2(k * query.exponent(s.d));
    if (hilbert) {
      double sup = 0.0;
      for (std::size_t p = 0; p < n; ++p)
        if (prof.phi(std::ldexp(bank.abs_xi()[p], -k)) > 0.0) sup = std::max(sup, std::abs(monomial(p, query.alpha)));
      return sup / std::exp2(k * query.alpha_order());
    }
    std::vector<cplx> symbol(n);
    for (std::size_t p = 0; p < n; ++p) symbol[p] = enlarged[p] * monomial(p, query.alpha);
    return detail::kernel_norm(s, symbol, detail::young_exponent(query.p1, query.p2)) / scale;
  }
  const int big_n = query.order_n;
  if (hilbert && s.d == 2) {
    double inf_xi = kInf;
    for (std::size_t p = 0; p < n; ++p)
      if (prof.phi(std::ldexp(bank.abs_xi()[p], -k)) > 0.0) inf_xi = std::min(inf_xi, bank.abs_xi()[p]);
    return std::pow(std::exp2(k) / inf_xi, big_n);
  }
  // a = sum_{|alpha|=N} (N!/alpha!) K_alpha * d^alpha a, K_alpha_hat = enlarged (-i xi)^alpha / |xi|^{2N}.
  double total = 0.0;
  for (const auto& alpha : detail::multi_indices(s.d, big_n)) {
    std::vector<cplx> symbol(n);
    for (std::size_t p = 0; p < n; ++p) {
      const double ax = bank.abs_xi()[p];
      if (ax == 0.0 || enlarged[p] == 0.0) continue;
      symbol[p] = enlarged[p] * std::conj(monomial(p, alpha)) / std::pow(ax, 2 * big_n);
    }
    const double multinomial = std::tgamma(big_n + 1.0) / (std::tgamma(alpha[0] + 1.0) * std::tgamma(alpha[1] + 1.0));
    total += multinomial * detail::kernel_norm(s, symbol, 1.0);
  }
  return total * std::exp2(k * big_n);
}

}  // namespace prandtl::dyadic
