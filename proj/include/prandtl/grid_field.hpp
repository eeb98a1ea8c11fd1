#pragma once

// Discrete vector fields on a periodic horizontal box [0, L)^{d-1} times the
// vertical interval [0, Y_max].
//
// Normalization convention (used everywhere in the library): spectral
// coefficients are w_hat(m, y) = N^{-(d-1)} sum_x w(x, y) e^{-i xi.x}, so a
// constant c has w_hat(0) = c and sin(2 pi x / L) has |w_hat(+-1)| = 1/2.
// Parseval then reads  int_box |w|^2 dx = L^{d-1} sum_m |w_hat(m)|^2.

#include "prandtl/fft.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <complex>
#include <cstddef>
#include <fstream>
#include <functional>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace prandtl {

using cplx = std::complex<double>;

struct GridSpec {
  int d = 2;
  int n_h = 128;
  double length = 2.0 * std::numbers::pi * 8.0;
  int m = 256;
  double y_max = 64.0;

  int horizontal_rank() const { return d - 1; }
  int components() const { return d - 1; }
  std::size_t modes_per_row() const {
    return d == 2 ? static_cast<std::size_t>(n_h) : static_cast<std::size_t>(n_h) * n_h;
  }
  double dy() const { return y_max / (m - 1); }
  double y(int j) const { return j * dy(); }
  double dx() const { return length / n_h; }
  double cell_area() const { return d == 2 ? dx() : dx() * dx(); }
  double box_measure() const { return d == 2 ? length : length * length; }

  /// Signed lattice index in [-n_h/2, n_h/2) of a transform position.
  int signed_index(int i) const { return i < n_h / 2 ? i : i - n_h; }
  double xi_of_index(int i) const { return 2.0 * std::numbers::pi * signed_index(i) / length; }

  /// Wavenumber component `axis` of flattened mode p.
  double xi(std::size_t p, int axis) const {
    if (d == 2) return axis == 0 ? xi_of_index(static_cast<int>(p)) : 0.0;
    const int i = axis == 0 ? static_cast<int>(p / n_h) : static_cast<int>(p % n_h);
    return xi_of_index(i);
  }
  double abs_xi(std::size_t p) const {
    const double a = xi(p, 0);
    const double b = d == 3 ? xi(p, 1) : 0.0;
    return std::hypot(a, b);
  }
  /// Largest |signed index| over axes; used by the 2/3 rule.
  int max_axis_index(std::size_t p) const {
    if (d == 2) return std::abs(signed_index(static_cast<int>(p)));
    return std::max(std::abs(signed_index(static_cast<int>(p / n_h))),
                    std::abs(signed_index(static_cast<int>(p % n_h))));
  }
  double min_nonzero_xi() const { return 2.0 * std::numbers::pi / length; }
  double max_xi() const {
    const double axis_max = std::numbers::pi * n_h / length;
    return d == 2 ? axis_max : std::sqrt(2.0) * axis_max;
  }
  /// Modes with max_axis_index <= dealias_cutoff() survive the 2/3 rule.
  int dealias_cutoff() const { return (n_h - 1) / 3; }

  void validate() const {
    if (d != 2 && d != 3) throw std::invalid_argument("GridSpec: d must be 2 or 3");
    if (n_h < 16 || (n_h & (n_h - 1)) != 0)
      throw std::invalid_argument("GridSpec: n_h must be a power of two >= 16");
    if (m < 32) throw std::invalid_argument("GridSpec: m must be >= 32");
    if (!(y_max >= 8.0)) throw std::invalid_argument("GridSpec: y_max must be >= 8");
    if (!(length > 0.0)) throw std::invalid_argument("GridSpec: length must be positive");
  }

  bool operator==(const GridSpec&) const = default;
};

enum class Layout { Spectral, Physical };

/// Block of `components` scalar fields sampled on the grid. Storage is
/// [component][y index][horizontal position or mode].
class Field {
 public:
  Field() = default;
  Field(const GridSpec& spec, int components, Layout layout)
      : spec_(spec),
        components_(components),
        layout_(layout),
        data_(static_cast<std::size_t>(components) * spec.m * spec.modes_per_row()) {
    spec_.validate();
    if (components < 1) throw std::invalid_argument("Field: need at least one component");
  }

  static Field zeros(const GridSpec& spec, Layout layout = Layout::Spectral) {
    return Field(spec, spec.components(), layout);
  }

  /// Physical-layout field from real samples ordered [component][y][x].
  static Field from_physical(const GridSpec& spec, int components, std::span<const double> values) {
    Field f(spec, components, Layout::Physical);
    if (values.size() != f.data_.size()) {
      throw std::invalid_argument("Field::from_physical: sample count does not match grid");
    }
    std::transform(values.begin(), values.end(), f.data_.begin(), [](double v) { return cplx(v, 0.0); });
    return f;
  }

  const GridSpec& spec() const { return spec_; }
  int components() const { return components_; }
  Layout layout() const { return layout_; }
  std::size_t row_size() const { return spec_.modes_per_row(); }
  std::size_t size() const { return data_.size(); }

  cplx& at(int c, int j, std::size_t p) { return data_[index(c, j, p)]; }
  const cplx& at(int c, int j, std::size_t p) const { return data_[index(c, j, p)]; }

  std::span<cplx> row(int c, int j) { return {data_.data() + index(c, j, 0), row_size()}; }
  std::span<const cplx> row(int c, int j) const { return {data_.data() + index(c, j, 0), row_size()}; }
  std::span<cplx> component(int c) {
    return {data_.data() + index(c, 0, 0), row_size() * static_cast<std::size_t>(spec_.m)};
  }
  std::span<const cplx> component(int c) const {
    return {data_.data() + index(c, 0, 0), row_size() * static_cast<std::size_t>(spec_.m)};
  }
  std::span<cplx> data() { return data_; }
  std::span<const cplx> data() const { return data_; }

  void set_layout(Layout layout) { layout_ = layout; }

  Field& operator+=(const Field& o) {
    require_compatible(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  Field& operator-=(const Field& o) {
    require_compatible(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  Field& operator*=(double s) {
    for (auto& v : data_) v *= s;
    return *this;
  }
  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(double s, Field a) { return a *= s; }

  void require_compatible(const Field& o) const {
    if (!(spec_ == o.spec_) || components_ != o.components_ || layout_ != o.layout_) {
      throw std::invalid_argument("Field: grid, component or layout mismatch");
    }
  }

 private:
  std::size_t index(int c, int j, std::size_t p) const {
    return (static_cast<std::size_t>(c) * spec_.m + j) * row_size() + p;
  }

  GridSpec spec_{};
  int components_ = 0;
  Layout layout_ = Layout::Spectral;
  std::vector<cplx> data_;
};

inline Field to_spectral(const Field& physical) {
  if (physical.layout() != Layout::Physical) throw std::invalid_argument("to_spectral: field is not physical");
  Field out = physical;
  const auto& s = physical.spec();
  fft::transform(out.data(), s.horizontal_rank(), s.n_h, fft::Direction::Forward);
  out *= 1.0 / static_cast<double>(s.modes_per_row());
  out.set_layout(Layout::Spectral);
  return out;
}

inline Field to_physical(const Field& spectral) {
  if (spectral.layout() != Layout::Spectral) throw std::invalid_argument("to_physical: field is not spectral");
  Field out = spectral;
  fft::transform(out.data(), spectral.spec().horizontal_rank(), spectral.spec().n_h, fft::Direction::Backward);
  out.set_layout(Layout::Physical);
  return out;
}

/// Largest |Im| over physical samples; zero for fields that came from real data.
inline double max_imag_residue(const Field& physical) {
  double r = 0.0;
  for (const auto& v : physical.data()) r = std::max(r, std::abs(v.imag()));
  return r;
}

/// F(y_j) = int_0^{y_j} f dy' by cumulative trapezoid, per component and
/// horizontal position/mode. Valid in either layout (the map is linear).
inline Field vertical_integral(const Field& f) {
  Field out(f.spec(), f.components(), f.layout());
  const double half_dy = 0.5 * f.spec().dy();
  for (int c = 0; c < f.components(); ++c) {
    for (int j = 1; j < f.spec().m; ++j) {
      auto prev = out.row(c, j - 1);
      auto lo = f.row(c, j - 1);
      auto hi = f.row(c, j);
      auto dst = out.row(c, j);
      for (std::size_t p = 0; p < dst.size(); ++p) dst[p] = prev[p] + half_dy * (lo[p] + hi[p]);
    }
  }
  return out;
}

/// Second-order d/dy: centered in the interior, one-sided three-point stencils
/// at y = 0 and y = Y_max.
inline Field vertical_derivative(const Field& f) {
  Field out(f.spec(), f.components(), f.layout());
  const int m = f.spec().m;
  const double inv2dy = 0.5 / f.spec().dy();
  for (int c = 0; c < f.components(); ++c) {
    for (int j = 0; j < m; ++j) {
      auto dst = out.row(c, j);
      if (j == 0) {
        auto a = f.row(c, 0), b = f.row(c, 1), e = f.row(c, 2);
        for (std::size_t p = 0; p < dst.size(); ++p) dst[p] = (-3.0 * a[p] + 4.0 * b[p] - e[p]) * inv2dy;
      } else if (j == m - 1) {
        auto a = f.row(c, m - 1), b = f.row(c, m - 2), e = f.row(c, m - 3);
        for (std::size_t p = 0; p < dst.size(); ++p) dst[p] = (3.0 * a[p] - 4.0 * b[p] + e[p]) * inv2dy;
      } else {
        auto lo = f.row(c, j - 1), hi = f.row(c, j + 1);
        for (std::size_t p = 0; p < dst.size(); ++p) dst[p] = (hi[p] - lo[p]) * inv2dy;
      }
    }
  }
  return out;
}

/// Spectral derivative along horizontal `axis` (0 or 1), applied to every component.
inline Field horizontal_derivative(const Field& f, int axis) {
  if (f.layout() != Layout::Spectral) throw std::invalid_argument("horizontal_derivative: needs spectral form");
  const auto& s = f.spec();
  Field out(s, f.components(), Layout::Spectral);
  for (int c = 0; c < f.components(); ++c) {
    for (int j = 0; j < s.m; ++j) {
      auto src = f.row(c, j);
      auto dst = out.row(c, j);
      for (std::size_t p = 0; p < dst.size(); ++p) {
        // The Nyquist index has no real derivative partner; drop it.
        const bool nyquist = s.max_axis_index(p) == s.n_h / 2;
        dst[p] = nyquist ? cplx{} : cplx(0.0, s.xi(p, axis)) * src[p];
      }
    }
  }
  return out;
}

/// div_h w = sum_c i xi_c w_hat_c; returns a one-component spectral field.
inline Field horizontal_divergence(const Field& w) {
  if (w.layout() != Layout::Spectral) throw std::invalid_argument("horizontal_divergence: needs spectral form");
  const auto& s = w.spec();
  if (w.components() != s.components())
    throw std::invalid_argument("horizontal_divergence: expected d-1 components");
  Field out(s, 1, Layout::Spectral);
  for (int c = 0; c < w.components(); ++c) {
    for (int j = 0; j < s.m; ++j) {
      auto src = w.row(c, j);
      auto dst = out.row(0, j);
      for (std::size_t p = 0; p < dst.size(); ++p) {
        if (s.max_axis_index(p) == s.n_h / 2) continue;
        dst[p] += cplx(0.0, s.xi(p, c)) * src[p];
      }
    }
  }
  return out;
}

/// Zero every mode outside the 2/3-rule band.
inline void dealias(Field& f) {
  if (f.layout() != Layout::Spectral) throw std::invalid_argument("dealias: needs spectral form");
  const auto& s = f.spec();
  const int cutoff = s.dealias_cutoff();
  for (int c = 0; c < f.components(); ++c) {
    for (int j = 0; j < s.m; ++j) {
      auto r = f.row(c, j);
      for (std::size_t p = 0; p < r.size(); ++p)
        if (s.max_axis_index(p) > cutoff) r[p] = {};
    }
  }
}

inline Field dealiased(Field f) {
  dealias(f);
  return f;
}

/// Extract one component as a scalar field.
inline Field component_of(const Field& f, int c) {
  Field out(f.spec(), 1, f.layout());
  std::copy(f.component(c).begin(), f.component(c).end(), out.component(0).begin());
  return out;
}

/// Pointwise product of two physical scalar fields.
inline Field multiply_physical(const Field& a, const Field& b) {
  if (a.layout() != Layout::Physical || b.layout() != Layout::Physical)
    throw std::invalid_argument("multiply_physical: needs physical fields");
  if (!(a.spec() == b.spec())) throw std::invalid_argument("multiply_physical: grid mismatch");
  Field out(a.spec(), 1, Layout::Physical);
  auto ad = a.component(0), bd = b.component(0);
  auto od = out.component(0);
  for (std::size_t i = 0; i < od.size(); ++i) od[i] = cplx(ad[i].real() * bd[i].real(), 0.0);
  return out;
}

/// 2/3-rule product of two spectral scalar fields: both factors are truncated,
/// multiplied in physical space, and the product truncated again.
inline Field dealiased_product(const Field& a, const Field& b) {
  if (!(a.spec() == b.spec())) throw std::invalid_argument("dealiased_product: grid mismatch");
  Field pa = to_physical(dealiased(a));
  Field pb = to_physical(dealiased(b));
  Field prod = to_spectral(multiply_physical(pa, pb));
  dealias(prod);
  return prod;
}

/// Set the y = 0 row (and optionally y = Y_max) to zero on every component.
inline void enforce_dirichlet(Field& f, bool top_too = false) {
  for (int c = 0; c < f.components(); ++c) {
    for (auto& v : f.row(c, 0)) v = {};
    if (top_too)
      for (auto& v : f.row(c, f.spec().m - 1)) v = {};
  }
}

/// max over the top `rows` rows of exp(log_weight(y)) * |f|, computed in log space.
inline double max_weighted_on_top_rows(const Field& physical, int rows,
                                       const std::function<double(double)>& log_weight) {
  const auto& s = physical.spec();
  double best = 0.0;
  for (int c = 0; c < physical.components(); ++c) {
    for (int j = std::max(0, s.m - rows); j < s.m; ++j) {
      const double lw = log_weight(s.y(j));
      for (const auto& v : physical.row(c, j)) {
        const double a = std::abs(v);
        if (a > 0.0) best = std::max(best, std::exp(std::min(lw + std::log(a), 700.0)));
      }
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Snapshot files: one CSV per component, row = y index, column = horizontal
// position (x, or x1 * n_h + x2 when d = 3). Line 1 records the grid.

inline std::string snapshot_header(const GridSpec& s, int component) {
  std::ostringstream os;
  os << std::setprecision(17) << "# d=" << s.d << " n_h=" << s.n_h << " length=" << s.length << " m=" << s.m
     << " y_max=" << s.y_max << " component=" << component;
  return os.str();
}

inline void write_snapshot_csv(const Field& f, const std::string& path_prefix) {
  const Field phys = f.layout() == Layout::Physical ? f : to_physical(f);
  const auto& s = f.spec();
  for (int c = 0; c < phys.components(); ++c) {
    const std::string path = path_prefix + "_c" + std::to_string(c) + ".csv";
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open snapshot file " + path);
    os << snapshot_header(s, c) << '\n' << std::setprecision(17);
    for (int j = 0; j < s.m; ++j) {
      auto r = phys.row(c, j);
      for (std::size_t p = 0; p < r.size(); ++p) os << (p ? "," : "") << r[p].real();
      os << '\n';
    }
  }
}

/// Reads the files written by write_snapshot_csv; returns a physical field.
inline Field read_snapshot_csv(const std::string& path_prefix, int components) {
  GridSpec spec;
  std::vector<double> values;
  for (int c = 0; c < components; ++c) {
    const std::string path = path_prefix + "_c" + std::to_string(c) + ".csv";
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open snapshot file " + path);
    std::string header;
    std::getline(is, header);
    GridSpec s;
    if (std::sscanf(header.c_str(), "# d=%d n_h=%d length=%lf m=%d y_max=%lf", &s.d, &s.n_h, &s.length, &s.m,
                    &s.y_max) != 5) {
      throw std::runtime_error("malformed snapshot header in " + path);
    }
    s.validate();
    if (c > 0 && !(s == spec)) throw std::runtime_error("snapshot components disagree on grid");
    spec = s;
    std::string line;
    std::size_t count = 0;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      std::stringstream ls(line);
      std::string cell;
      while (std::getline(ls, cell, ',')) {
        values.push_back(std::stod(cell));
        ++count;
      }
    }
    if (count != static_cast<std::size_t>(s.m) * s.modes_per_row())
      throw std::runtime_error("snapshot " + path + " has the wrong number of samples");
  }
  return Field::from_physical(spec, components, values);
}

}  // namespace prandtl
