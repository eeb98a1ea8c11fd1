#pragma once

// Diffusive shear flow u^s(t, y): heat equation on the half line with
// u^s(t, 0) = 0, u^s -> eps as y -> inf, and u^s(0, y) = eps chi(y).
//
// Both u^s and d_y u^s are written as integrals against chi' over its support
// [1, 2]:
//   u^s(t, y)   = eps int_1^2 chi'(s) (erfc((s - y)/2sqrt(t)) - erfc((s + y)/2sqrt(t))) / 2 ds
//   d_y u^s(t, y) = eps int_1^2 chi'(s) (G_t(y - s) + G_t(y + s)) ds,  G_t the heat kernel.
// The first form is the image-kernel integral with the plateau y' >= s summed in
// closed form. The kernel chi_1 used in some derivations (even extension of
// chi') is exposed as chi1_profile for reference.

#include "prandtl/dyadic.hpp"
#include "prandtl/grid_field.hpp"
#include "prandtl/quadrature.hpp"
#include "prandtl/weights.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace prandtl::shear {

/// chi(y) = 0 for y <= 1, 1 for y >= 2, smooth monotone in between.
inline double chi_profile(double y) { return dyadic::smooth_step(y - 1.0); }
inline double chi_derivative(double y) { return dyadic::smooth_step_derivative(y - 1.0); }
/// Even extension of chi', supported in [-2, -1] U [1, 2].
inline double chi1_profile(double y) { return chi_derivative(std::abs(y)); }

namespace detail {

inline constexpr int kNodes = 64;

/// Panel count on [1, 2] so each panel is no wider than ~4 kernel widths.
inline int panels_for(double t) {
  return std::clamp(static_cast<int>(std::ceil(0.25 / std::sqrt(t))), 1, 512);
}

inline double heat_kernel(double t, double z) {
  return std::exp(-z * z / (4.0 * t)) / (2.0 * std::sqrt(std::numbers::pi * t));
}

}  // namespace detail

inline double shear_velocity(double t, double y, double eps) {
  if (t < 0.0) throw std::invalid_argument("shear_velocity: t must be >= 0");
  if (t == 0.0) return eps * chi_profile(y);
  const double r = 1.0 / (2.0 * std::sqrt(t));
  auto f = [&](double s) {
    return chi_derivative(s) * 0.5 * (std::erfc((s - y) * r) - std::erfc((s + y) * r));
  };
  return eps * quad::composite(f, 1.0, 2.0, detail::panels_for(t), detail::kNodes);
}

inline double shear_derivative(double t, double y, double eps) {
  if (t < 0.0) throw std::invalid_argument("shear_derivative: t must be >= 0");
  if (t == 0.0) return eps * chi_derivative(y);
  auto f = [&](double s) {
    return chi_derivative(s) * (detail::heat_kernel(t, y - s) + detail::heat_kernel(t, y + s));
  };
  return eps * quad::composite(f, 1.0, 2.0, detail::panels_for(t), detail::kNodes);
}

/// ||e^{Psi(t)} d_y u^s(t)||_{L^2_v} on [0, inf) by composite Gauss-Legendre,
/// truncated where the integrand drops below e^{-80} of its scale.
inline double weighted_derivative_norm(double t, double eps) {
  if (eps == 0.0) return 0.0;
  if (t == 0.0) {
    auto f = [&](double y) {
      const double v = std::exp(psi(0.0, y)) * chi_derivative(y);
      return v * v;
    };
    return std::abs(eps) * std::sqrt(quad::composite(f, 1.0, 2.0, 8, 32));
  }
  // Exponent of the integrand behaves like -a (y - 2)^2 with a = 1/(2t) - 1/(4<t>) > 0.
  const double a = 1.0 / (2.0 * t) - 1.0 / (4.0 * bracket(t));
  const double y_cut = 4.0 + std::sqrt(80.0 / a);
  const double h = 0.25 * std::max(1.0, std::sqrt(t));
  const int panels = static_cast<int>(std::ceil(y_cut / h));
  auto f = [&](double y) {
    const double d = shear_derivative(t, y, 1.0);
    if (d <= 0.0) return 0.0;
    const double v = std::exp(psi(t, y) + std::log(d));
    return v * v;
  };
  return std::abs(eps) * std::sqrt(quad::composite(f, 0.0, y_cut, panels, 16));
}

/// u^s and d_y u^s sampled on the vertical grid at time t.
struct ShearProfile {
  double t = 0.0;
  double eps = 0.0;
  std::array<double, 2> direction{1.0, 0.0};
  std::vector<double> us;
  std::vector<double> dus;
  double weighted_norm = 0.0;  // ||e^Psi d_y u^s||_{L^2_v} on [0, inf)
};

inline ShearProfile make_profile(const GridSpec& s, double t, double eps, std::array<double, 2> direction = {1.0, 0.0}) {
  ShearProfile p;
  p.t = t;
  p.eps = eps;
  p.direction = direction;
  p.us.resize(s.m);
  p.dus.resize(s.m);
  for (int j = 0; j < s.m; ++j) {
    p.us[j] = shear_velocity(t, s.y(j), eps);
    p.dus[j] = shear_derivative(t, s.y(j), eps);
  }
  p.us[0] = 0.0;
  p.weighted_norm = weighted_derivative_norm(t, eps);
  return p;
}

struct EnergyCheck {
  double integral = 0.0;  // I(T)
  double ratio = 0.0;     // I(T) / eps^2
  bool converged = true;
};

namespace detail {

/// int_0^T g(t) dt on panels that grow geometrically away from t = 0.
template <class G>
double time_integral(G&& g, double horizon, double growth, int order) {
  double total = 0.0;
  double a = 0.0;
  while (a < horizon) {
    const double b = std::min(horizon, a + growth * bracket(a));
    total += quad::composite(g, a, b, 1, order);
    a = b;
  }
  return total;
}

}  // namespace detail

/// I(T) = int_0^T ||e^Psi d_y u^s(t)||^2_{L^2_v} dt. Convergence is judged by
/// repeating the time quadrature on panels half as wide.
inline EnergyCheck shear_energy_check(double horizon, double eps) {
  if (!(horizon > 0.0)) throw std::invalid_argument("shear_energy_check: T must be positive");
  if (eps == 0.0) throw std::invalid_argument("shear_energy_check: eps must be nonzero");
  auto g = [eps](double t) {
    const double n = weighted_derivative_norm(t, eps);
    return n * n;
  };
  const double coarse = detail::time_integral(g, horizon, 0.1, 16);
  const double fine = detail::time_integral(g, horizon, 0.05, 16);
  EnergyCheck out;
  out.integral = fine;
  out.ratio = fine / (eps * eps);
  out.converged = std::abs(fine - coarse) <= 1e-8 * std::abs(fine);
  return out;
}

/// Audit rows (t, y, u^s, d_y u^s, e^Psi d_y u^s) on the vertical grid.
inline void write_shear_audit_csv(const GridSpec& s, const std::vector<double>& times, double eps,
                                  const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << "t,y,us,dus,weighted_dus\n" << std::setprecision(17);
  for (double t : times) {
    const auto p = make_profile(s, t, eps);
    for (int j = 0; j < s.m; ++j) {
      const double y = s.y(j);
      const double wd = p.dus[j] == 0.0 ? 0.0 : std::exp(std::min(psi(t, y) + std::log(std::abs(p.dus[j])), 700.0));
      os << t << ',' << y << ',' << p.us[j] << ',' << p.dus[j] << ',' << wd << '\n';
    }
  }
}

}  // namespace prandtl::shear
