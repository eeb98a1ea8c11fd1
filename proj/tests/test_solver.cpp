#include "prandtl/solver.hpp"
#include "prandtl/verification.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace prandtl;
using namespace prandtl::solver;

namespace {

SolverConfig small_config() {
  SolverConfig c;
  c.grid = GridSpec{2, 64, 2.0 * std::numbers::pi * 8.0, 128, 32.0};
  c.epsilon = 0.08;
  c.dt = 0.01;
  return c;
}

/// w = a sin(k x) y on a 16 x 64 grid: every discrete operator in the
/// right-hand side is exact on this profile.
struct LinearProfile {
  GridSpec s{2, 16, 2.0 * std::numbers::pi, 64, 8.0};
  double a = 0.3;
  int k = 2;
  Field field() const {
    std::vector<double> v(s.m * s.n_h);
    for (int j = 0; j < s.m; ++j)
      for (int i = 0; i < s.n_h; ++i) v[j * s.n_h + i] = a * std::sin(k * i * s.dx()) * s.y(j);
    return to_spectral(Field::from_physical(s, 1, v));
  }
};

double max_abs_diff(const Field& a, const Field& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

}  // namespace

TEST(Config, Validation) {
  SolverConfig c;
  EXPECT_NO_THROW(c.validate());
  c.epsilon = 0.9;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = SolverConfig{};
  c.delta = 2.5;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = SolverConfig{};
  c.lambda = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = SolverConfig{};
  c.dt = 1.0;
  c.epsilon = 0.5;  // dt eps xi_max = 4 > 0.8
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = SolverConfig{};
  c.epsilon = 0.0;
  EXPECT_NO_THROW(c.validate());
}

TEST(InitData, NormalizedRealAndVanishingAtWall) {
  auto c = small_config();
  const Field w = init_data(c);
  const auto bank = dyadic::build_filters(c.grid);
  EXPECT_NEAR(data_norm(bank, w, c.delta), c.epsilon, 1e-12 * c.epsilon);
  const Field phys = to_physical(w);
  EXPECT_LT(max_imag_residue(phys), 1e-15);
  for (const auto& v : phys.row(0, 0)) EXPECT_EQ(v.real(), 0.0);
  EXPECT_EQ(w.at(0, 5, 0), cplx{});  // no DC content
}

TEST(InitData, RadiusAtLeastTwiceDelta) {
  const auto c = small_config();
  const auto est = radius::measure_radius(init_data(c));
  ASSERT_TRUE(est.resolved);
  EXPECT_GE(est.radius, 2.0 * c.delta - 0.05);
}

TEST(InitData, SeedDeterminesPhases) {
  auto c = small_config();
  const Field a = init_data(c), b = init_data(c);
  EXPECT_EQ(max_abs_diff(a, b), 0.0);
  c.seed += 1;
  EXPECT_GT(max_abs_diff(a, init_data(c)), 0.0);
}

TEST(Rhs, ZeroFieldGivesZero) {
  const auto c = small_config();
  const auto sh = shear::make_profile(c.grid, 0.5, c.epsilon);
  const Field r = prandtl_rhs(Field::zeros(c.grid), sh);
  for (const auto& v : r.data()) EXPECT_EQ(v, cplx{});
}

TEST(Rhs, XIndependentFieldGivesZero) {
  const auto c = small_config();
  Field w = Field::zeros(c.grid);
  for (int j = 0; j < c.grid.m; ++j) w.at(0, j, 0) = std::sin(c.grid.y(j));
  const auto sh = shear::make_profile(c.grid, 0.5, c.epsilon);
  const Field r = prandtl_rhs(w, sh);
  for (const auto& v : r.data()) EXPECT_EQ(std::abs(v), 0.0);
}

TEST(Rhs, TermsMatchSymbolicEvaluation) {
  const LinearProfile lp;
  const auto& s = lp.s;
  const Field w = lp.field();
  const double t = 0.7, eps = 0.2;
  const auto sh = shear::make_profile(s, t, eps);
  const auto zero_shear = shear::make_profile(s, t, 0.0);
  // Quadratic terms only, shear terms only.
  const Field quad = to_physical(prandtl_rhs(w, zero_shear));
  const Field lin = to_physical(prandtl_rhs(w, sh, {true, true}));
  const double a = lp.a, k = lp.k;
  double err_quad = 0.0, err_lin = 0.0;
  for (int j = 0; j < s.m; ++j)
    for (int i = 0; i < s.n_h; ++i) {
      const double x = i * s.dx(), y = s.y(j);
      const double sn = std::sin(k * x), cs = std::cos(k * x);
      // -w w_x + V w_y,  V = a k cos(kx) y^2 / 2.
      const double transport = -(a * sn * y) * (a * k * cs * y);
      const double vertical = (a * k * cs * 0.5 * y * y) * (a * sn);
      // -u^s w_x + V d_y u^s.
      const double shear_t = -sh.us[j] * a * k * cs * y;
      const double shear_v = a * k * cs * 0.5 * y * y * sh.dus[j];
      err_quad = std::max(err_quad, std::abs(quad.at(0, j, i).real() - (transport + vertical)));
      err_lin = std::max(err_lin, std::abs(lin.at(0, j, i).real() - (shear_t + shear_v)));
    }
  EXPECT_LE(err_quad, 1e-8);
  EXPECT_LE(err_lin, 1e-8);
}

TEST(Diffusion, ThomasMatchesReferenceSolver) {
  const GridSpec s{2, 16, 2 * std::numbers::pi, 40, 8.0};
  const DiffusionSolve d(s.m, 0.05, s.dy());
  Field w(s, 1, Layout::Spectral), zero(s, 1, Layout::Spectral);
  std::vector<double> prof(s.m);
  for (int j = 0; j < s.m; ++j) {
    prof[j] = j == 0 || j == s.m - 1 ? 0.0 : std::exp(-std::pow(s.y(j) - 3.0, 2));
    w.at(0, j, 3) = prof[j];
  }
  const Field out = d.apply(w, zero, 0.05);
  const auto ref = verify::cn_heat_1d(prof, s.dy(), 0.05, 1, 0.0, 0.0);
  for (int j = 0; j < s.m; ++j) EXPECT_NEAR(out.at(0, j, 3).real(), ref[j], 1e-14);
}

TEST(Step, ZeroDataStaysZero) {
  auto c = small_config();
  c.t_max = 0.2;
  Solver sol(c, Field::zeros(c.grid));
  while (sol.step()) {
  }
  for (const auto& v : sol.state().data()) EXPECT_EQ(v, cplx{});
  EXPECT_TRUE(sol.record().valid);
}

TEST(Step, XIndependentDataFollowsHeatOracle) {
  const auto r = verify::x_independent_vs_heat(100);
  EXPECT_TRUE(r.valid);
  EXPECT_LE(r.max_diff, 1e-12);
}

TEST(Step, ManufacturedSolutionSecondOrder) {
  const auto conv = verify::manufactured_convergence(3);
  ASSERT_TRUE(conv.all_valid);
  EXPECT_GE(conv.min_order, 1.9) << conv.errors[0] << " " << conv.errors[1] << " " << conv.errors[2];
}

TEST(Step, CflMonitorTrips) {
  auto cfg = verify::manufactured_config(65, 0.04);
  cfg.dt = 2.0 * verify::manufactured_cfl_dt(cfg);
  const auto r = verify::run_manufactured(cfg);
  EXPECT_FALSE(r.valid);
  EXPECT_EQ(r.cause, "cfl");
}

TEST(Run, BitIdenticalReruns) {
  auto c = small_config();
  c.t_max = 0.3;
  const auto a = run(c), b = run(c);
  ASSERT_EQ(a.trace.size(), b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    EXPECT_EQ(a.trace[i].theta, b.trace[i].theta);
    EXPECT_EQ(a.trace[i].besov_w, b.trace[i].besov_w);
  }
  EXPECT_EQ(max_abs_diff(a.final_field, b.final_field), 0.0);
}

TEST(Run, LinearizedWeightedEnergyDoesNotGrow) {
  auto c = small_config();
  c.epsilon = 0.0;
  c.data_norm = 0.04;
  c.linearized = true;
  c.t_max = 2.0;
  const auto r = run(c);
  ASSERT_TRUE(r.valid);
  const double e0 = r.trace.front().energy_psi;
  for (const auto& row : r.trace) EXPECT_LE(row.energy_psi, e0 * (1.0 + c.dt));
  EXPECT_LT(r.trace.back().energy_psi, e0);
}

TEST(Run, DegenerateEpsilonZeroIsBounded) {
  auto c = small_config();
  c.epsilon = 0.0;
  c.data_norm = 0.02;
  c.t_max = 2.0;
  const auto r = run(c);
  EXPECT_TRUE(r.valid);
  EXPECT_FALSE(r.t_half_band.has_value());
  EXPECT_GT(r.trace.back().theta, 0.0);
  EXPECT_LT(r.trace.back().theta, 0.25);
  for (const auto& row : r.trace) EXPECT_EQ(row.shear_norm, 0.0);
}

TEST(Run, StopsAtHalfBandWithInvariants) {
  auto c = small_config();
  c.epsilon = 0.2;
  const auto r = run(c);
  ASSERT_TRUE(r.valid) << r.cause;
  ASSERT_TRUE(r.t_half_band.has_value());
  EXPECT_LE(*r.t_half_band, r.t_end + 1e-12);
  EXPECT_GT(*r.t_half_band, r.t_end - c.dt);
  EXPECT_LE(r.max_tail, 1e-8 * c.epsilon);
  EXPECT_LE(r.max_imag_residue, 1e-12);
  EXPECT_GE(r.min_radius_margin, -0.05);
  EXPECT_GT(r.bound_ratio, 0.0);
}

TEST(Run, FullBandEndsBeforeExhaustion) {
  auto c = small_config();
  c.epsilon = 0.3;
  c.delta = 0.1;
  c.continue_to_full_band = true;
  const auto r = run(c);
  ASSERT_TRUE(r.t_star.has_value());
  ASSERT_TRUE(r.t_half_band.has_value());
  EXPECT_LT(*r.t_half_band, *r.t_star);
  EXPECT_LE(r.t_end, *r.t_star);
  EXPECT_GE(r.trace.back().band, 0.0);
}

TEST(Run, SmallerEpsilonCrossesLater) {
  auto c = small_config();
  c.epsilon = 0.3;
  const auto a = run(c);
  c.epsilon = 0.15;
  const auto b = run(c);
  ASSERT_TRUE(a.t_half_band && b.t_half_band);
  EXPECT_GT(*b.t_half_band, *a.t_half_band);
}
