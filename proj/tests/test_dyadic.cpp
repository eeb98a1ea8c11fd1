#include "prandtl/dyadic.hpp"
#include "prandtl/verification.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace prandtl;
using namespace prandtl::dyadic;

TEST(Profile, ValuesAtLandmarks) {
  const auto p = Profile::standard();
  EXPECT_DOUBLE_EQ(p.chi(0.0), 1.0);
  EXPECT_DOUBLE_EQ(p.chi(1.0), 1.0);
  EXPECT_DOUBLE_EQ(p.chi(4.0 / 3.0), 0.0);
  EXPECT_DOUBLE_EQ(p.phi(1.0), 0.0);
  EXPECT_DOUBLE_EQ(p.phi(2.0), 1.0);
  EXPECT_DOUBLE_EQ(p.phi(8.0 / 3.0), 0.0);
  EXPECT_DOUBLE_EQ(p.phi(0.5), 0.0);
}

TEST(Profile, PartitionOnContinuum) {
  const auto p = Profile::standard();
  for (double tau = 0.0; tau < 300.0; tau += 0.0137) {
    double sum = p.chi(tau);
    for (int j = 0; std::ldexp(tau, -j) >= 0.5; ++j) sum += p.phi(std::ldexp(tau, -j));
    ASSERT_NEAR(sum, 1.0, 1e-14) << tau;
  }
}

TEST(FilterBank, ShellRangeForDefaults) {
  const auto bank = build_filters(GridSpec{});
  EXPECT_EQ(bank.k_min(), -4);
  EXPECT_EQ(bank.k_max(), 2);
  EXPECT_EQ(bank.shell_count(), 7);
  EXPECT_LE(partition_residual(bank), 1e-10);
}

TEST(FilterBank, LowBlockHoldsOnlyDc) {
  const auto bank = build_filters(GridSpec{});
  for (std::size_t p = 0; p < bank.low_weights().size(); ++p)
    EXPECT_EQ(bank.low_weights()[p], p == 0 ? 1.0 : 0.0);
}

TEST(FilterBank, ModeAtPowerOfTwoPassedByLowerShell) {
  const GridSpec s{2, 16, 2.0 * std::numbers::pi, 32, 8.0};  // xi = integers
  const auto bank = build_filters(s);
  // |xi| = 2 = 2^1: phi(2^{-0} 2) = 1 at k = 0, phi(1) = 0 at k = 1.
  EXPECT_DOUBLE_EQ(bank.shell_weights(0)[2], 1.0);
  EXPECT_DOUBLE_EQ(bank.shell_weights(1)[2], 0.0);
}

TEST(FilterBank, OutOfRangeShellIsZeroWithWarning) {
  const auto bank = build_filters(GridSpec{2, 16, 2.0 * std::numbers::pi, 32, 8.0});
  std::mt19937_64 rng(1);
  const Field f = verify::random_field(bank.spec(), 1, rng);
  const auto before = out_of_range_warnings().load();
  const Field z = project_shell(bank, f, bank.k_max() + 3);
  EXPECT_EQ(out_of_range_warnings().load(), before + 1);
  for (const auto& v : z.data()) EXPECT_EQ(v, cplx{});
}

TEST(FilterBank, PerturbedProfileBreaksPartition) {
  auto prof = Profile::standard();
  auto phi = prof.phi;
  prof.phi = [phi](double t) { return 1.001 * phi(t); };
  const auto bank = build_filters(GridSpec{}, prof);
  EXPECT_GT(partition_residual(bank), 5e-4);
}

TEST(Bony, ReconstructsDealiasedProduct) {
  const auto bank = build_filters(GridSpec{2, 128, 2.0 * std::numbers::pi * 8.0, 32, 8.0});
  const auto r = verify::bony_reconstruction(bank, 10, 11);
  EXPECT_LE(r.max_relative_error, 1e-10);
}

TEST(Bony, ThreeDimensional) {
  const auto bank = build_filters(GridSpec{3, 32, 2.0 * std::numbers::pi * 4.0, 32, 8.0});
  const auto r = verify::bony_reconstruction(bank, 3, 12);
  EXPECT_LE(r.max_relative_error, 1e-10);
}

TEST(MixedNorm, HandComputed) {
  const GridSpec s{2, 16, 16.0, 32, 31.0};  // dx = 1, dy = 1
  std::vector<double> v(s.m * s.n_h, 0.0);
  v[0 * s.n_h + 3] = 2.0;
  v[1 * s.n_h + 3] = -1.0;
  const Field f = Field::from_physical(s, 1, v);
  // Column 3: trapezoid weights 0.5 at j = 0, 1 at j = 1.
  EXPECT_DOUBLE_EQ(mixed_norm(f, 1.0, 1.0), 0.5 * 2.0 + 1.0);
  EXPECT_DOUBLE_EQ(mixed_norm(f, kInf, kInf), 2.0);
  EXPECT_DOUBLE_EQ(mixed_norm(f, 2.0, 2.0), std::sqrt(0.5 * 4.0 + 1.0));
  EXPECT_THROW(mixed_norm(f, 3.0, 1.0), std::invalid_argument);
}

TEST(Bernstein, SuiteHoldsOnSmallGrid) {
  const auto bank = build_filters(GridSpec{2, 64, 2.0 * std::numbers::pi * 8.0, 32, 8.0});
  const auto r = verify::bernstein_suite(bank, 5, 3);
  EXPECT_TRUE(r.pass) << r.worst_margin;
  EXPECT_EQ(r.combinations, 27);
}

TEST(Bernstein, RejectsBadQueries) {
  const auto bank = build_filters(GridSpec{2, 16, 2.0 * std::numbers::pi, 32, 8.0});
  BernsteinQuery q;
  q.p1 = 1.0;
  q.p2 = 2.0;
  EXPECT_THROW(bernstein_constant(bank, 0, q), std::invalid_argument);
  q = BernsteinQuery{};
  q.kind = BernsteinQuery::Kind::Reverse;
  q.p2 = 1.0;
  EXPECT_THROW(bernstein_constant(bank, 0, q), std::invalid_argument);
}

TEST(Bernstein, PlancherelConstantForSingleMode) {
  const GridSpec s{2, 64, 2.0 * std::numbers::pi, 32, 8.0};  // integer xi
  const auto bank = build_filters(s);
  Field f(s, 1, Layout::Spectral);
  for (int j = 1; j < s.m - 1; ++j) {
    f.at(0, j, 3) = 1.0;
    f.at(0, j, 61) = 1.0;
  }
  // |xi| = 3 lies in shell k = 1 (phi(3/2) > 0); ||d_x a|| / (2 ||a||) = 3/2.
  const double r = bernstein_check(f, 1, BernsteinQuery{});
  EXPECT_NEAR(r, 1.5, 1e-12);
  EXPECT_LE(r, bernstein_constant(bank, 1, BernsteinQuery{}) + 1e-12);
}
