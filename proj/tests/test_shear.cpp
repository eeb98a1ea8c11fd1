#include "prandtl/shear.hpp"
#include "prandtl/verification.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace prandtl;
using namespace prandtl::shear;

TEST(Psi, ResidualClosedForm) {
  for (double t : {0.0, 0.5, 3.0, 40.0})
    for (double y : {0.0, 1.0, 7.5}) EXPECT_NEAR(psi_residual(t, y), -1.0 / (8.0 * (1 + t) * (1 + t)), 1e-15);
}

TEST(Psi, StencilSuite) {
  const auto r = verify::psi_inequality();
  EXPECT_EQ(r.points, 10000);
  EXPECT_LE(r.closed_form_error, 1e-12);
  EXPECT_LE(r.stencil_error, 1e-12);
  EXPECT_LT(r.max_residual, 0.0);
}

TEST(Quadrature, GaussLegendreExactForPolynomials) {
  const double v = quad::composite([](double x) { return std::pow(x, 9); }, 0.0, 2.0, 1, 5);
  EXPECT_NEAR(v, std::pow(2.0, 10) / 10.0, 1e-11);
}

TEST(Shear, InitialProfileAndBoundary) {
  EXPECT_DOUBLE_EQ(shear_velocity(0.0, 0.5, 0.3), 0.0);
  EXPECT_DOUBLE_EQ(shear_velocity(0.0, 3.0, 0.3), 0.3);
  EXPECT_NEAR(shear_velocity(0.0, 1.5, 1.0), 0.5, 1e-15);
  for (double t : {0.01, 1.0, 10.0}) EXPECT_NEAR(shear_velocity(t, 0.0, 1.0), 0.0, 1e-15);
  EXPECT_NEAR(shear_velocity(1.0, 60.0, 0.7), 0.7, 1e-14);
  EXPECT_THROW(shear_velocity(-1.0, 1.0, 1.0), std::invalid_argument);
}

TEST(Shear, ShortTimeApproachesInitialProfile) {
  for (double y : {0.5, 1.3, 1.7, 2.5}) EXPECT_NEAR(shear_velocity(1e-6, y, 1.0), chi_profile(y), 2e-3);
}

TEST(Shear, DerivativeMatchesDifferenceQuotient) {
  const double h = 1e-5;
  for (double t : {0.05, 1.0, 10.0})
    for (double y : {0.3, 1.5, 4.0}) {
      const double fd = (shear_velocity(t, y + h, 1.0) - shear_velocity(t, y - h, 1.0)) / (2 * h);
      EXPECT_NEAR(shear_derivative(t, y, 1.0), fd, 1e-8);
    }
}

TEST(Shear, KernelMatchesCrankNicolsonOracle) {
  const auto o = verify::shear_heat_oracle(10.0, 2.0, 1.0);
  EXPECT_NEAR(shear_velocity(10.0, 2.0, 1.0), o.us, 1e-6);
  EXPECT_NEAR(shear_derivative(10.0, 2.0, 1.0), o.dus, 1e-6);
}

TEST(Shear, LinearInEpsilon) {
  for (double t : {0.0, 0.3, 5.0}) {
    EXPECT_NEAR(shear_velocity(t, 1.7, 0.01), 0.01 * shear_velocity(t, 1.7, 1.0), 1e-17);
    EXPECT_NEAR(weighted_derivative_norm(t, 0.1), 0.1 * weighted_derivative_norm(t, 1.0), 1e-15);
  }
}

TEST(Shear, EnergyIntegralLinearAndConverged) {
  const auto a = shear_energy_check(10.0, 1.0);
  const auto b = shear_energy_check(10.0, 0.1);
  EXPECT_TRUE(a.converged);
  EXPECT_NEAR(a.ratio, b.ratio, 1e-12 * a.ratio);
  EXPECT_NEAR(b.integral, 0.01 * a.integral, 1e-12 * a.integral);
}

TEST(Shear, ProfileOnGrid) {
  const GridSpec s{2, 16, 2 * std::numbers::pi, 65, 16.0};
  const auto p = make_profile(s, 2.0, 0.05);
  EXPECT_EQ(p.us.size(), 65u);
  EXPECT_EQ(p.us[0], 0.0);
  for (int j = 1; j < s.m; ++j) EXPECT_GE(p.us[j], p.us[j - 1] - 1e-16);
  EXPECT_GT(p.weighted_norm, 0.0);
}

TEST(CnHeat, ErfSolutionOnHalfLine) {
  // u(0, y) = 1 with u(t, 0) = 0: u = erf(y / (2 sqrt t)).
  const double dy = 0.01, L = 20.0;
  std::vector<double> u(static_cast<std::size_t>(L / dy) + 1, 1.0);
  u = verify::cn_heat_1d(u, dy, 1e-3, 1000, 0.0, 1.0);
  EXPECT_NEAR(u[100], std::erf(1.0 / 2.0), 1e-4);
}
