#include "prandtl/radius.hpp"
#include "prandtl/verification.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace prandtl;
using namespace prandtl::radius;

namespace {

/// Real field with w_hat(+-m) = e^{-r |xi|} on every interior row.
Field decaying(const GridSpec& s, double r) {
  Field f(s, s.components(), Layout::Spectral);
  for (int j = 1; j < s.m - 1; ++j)
    for (std::size_t p = 1; p < s.modes_per_row(); ++p)
      if (s.max_axis_index(p) < s.n_h / 2) f.at(0, j, p) = std::exp(-r * s.abs_xi(p));
  return f;
}

}  // namespace

TEST(RadiusState, TrapezoidAndPredicate) {
  RadiusState st(0.5, 2.0);
  st.seed(0.0, 1.0);
  st.advance(3.0, 0.1);
  EXPECT_DOUBLE_EQ(st.theta(), 0.2);
  EXPECT_DOUBLE_EQ(st.band(), 0.5 - 0.4);
  EXPECT_TRUE(st.alive());
  st.advance(3.0, 0.1);
  EXPECT_NEAR(st.theta(), 0.5, 1e-15);
  EXPECT_FALSE(st.alive());
  EXPECT_THROW(st.advance(-1.0, 0.1), std::invalid_argument);
  EXPECT_THROW(RadiusState(0.0, 1.0), std::invalid_argument);
}

TEST(Phase, IdentityAtZeroAndRejectsNegative) {
  const GridSpec s{2, 16, 2 * std::numbers::pi, 32, 8.0};
  const Field f = decaying(s, 1.0);
  const auto same = apply_phase(f, 0.0);
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_EQ(same.field.data()[i], f.data()[i]);
  EXPECT_THROW(apply_phase(f, -0.1), std::domain_error);
}

TEST(Phase, UndoesDecay) {
  const GridSpec s{2, 16, 2 * std::numbers::pi, 32, 8.0};
  const auto ph = apply_phase(decaying(s, 0.7), 0.7);
  EXPECT_FALSE(ph.overflow);
  EXPECT_NEAR(std::abs(ph.field.at(0, 3, 5)), 1.0, 1e-14);
}

TEST(Phase, Subadditive) {
  const auto r = verify::subadditivity_suite(20000, 5);
  EXPECT_EQ(r.violations, 0);
  EXPECT_TRUE(check_subadditivity(1.0, {3.0, 0.0}, {1.0, 0.0}));
  EXPECT_THROW(check_subadditivity(-1.0, {1, 0}, {0, 1}), std::domain_error);
}

TEST(MeasureRadius, RecoversConstructedDecay) {
  const GridSpec s;
  for (double r : {0.3, 1.0, 2.0}) {
    const auto est = measure_radius(decaying(s, r));
    ASSERT_TRUE(est.resolved);
    EXPECT_NEAR(est.radius, r, 1e-9);
  }
}

TEST(MeasureRadius, ThreeDimensionalLattice) {
  const GridSpec s{3, 32, 2.0 * std::numbers::pi * 4.0, 32, 8.0};
  const auto est = measure_radius(decaying(s, 1.0));
  ASSERT_TRUE(est.resolved);
  EXPECT_NEAR(est.radius, 1.0, 0.05);
}

TEST(MeasureRadius, UnresolvedWhenTooFewBins) {
  const GridSpec s{2, 16, 2 * std::numbers::pi, 32, 8.0};
  const auto est = measure_radius(decaying(s, 1.0));  // only 7 annuli exist
  EXPECT_FALSE(est.resolved);
}

TEST(ThetaRate, LinearInAmplitude) {
  const GridSpec s{2, 64, 2 * std::numbers::pi * 8, 64, 16.0};
  const auto bank = dyadic::build_filters(s);
  solver::SolverConfig cfg;
  cfg.grid = s;
  cfg.epsilon = 0.04;
  const Field w = solver::init_data(cfg);
  const auto sh = shear::make_profile(s, 1.0, 0.04);
  const auto r1 = theta_rate(bank, w, sh, 0.3, 1.0);
  Field w2 = w;
  w2 *= 0.5;
  const auto sh2 = shear::make_profile(s, 1.0, 0.02);
  const auto r2 = theta_rate(bank, w2, sh2, 0.3, 1.0);
  EXPECT_NEAR(r2.rate, 0.5 * r1.rate, 0.05 * 0.5 * r1.rate);
  EXPECT_THROW(theta_rate(bank, w, sh, -0.1, 1.0), std::domain_error);
}
