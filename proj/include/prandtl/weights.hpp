#pragma once

// Gaussian vertical weight Psi(t, y) = (1 + y^2) / (8 <t>), <t> = 1 + t.

namespace prandtl {

inline double bracket(double t) { return 1.0 + t; }

inline double psi(double t, double y) { return (1.0 + y * y) / (8.0 * bracket(t)); }

inline double psi_dt(double t, double y) {
  const double b = bracket(t);
  return -(1.0 + y * y) / (8.0 * b * b);
}

inline double psi_dy(double t, double y) { return y / (4.0 * bracket(t)); }

/// d_t Psi + 2 (d_y Psi)^2; the y^2 terms cancel, leaving -1 / (8 <t>^2).
inline double psi_residual(double t, double y) {
  const double gy = psi_dy(t, y);
  return psi_dt(t, y) + 2.0 * gy * gy;
}

}  // namespace prandtl
