#include "prandtl/grid_field.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

using namespace prandtl;

namespace {

GridSpec small2() { return GridSpec{2, 16, 2.0 * std::numbers::pi, 32, 8.0}; }
GridSpec small3() { return GridSpec{3, 16, 2.0 * std::numbers::pi, 32, 8.0}; }

std::vector<double> random_samples(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> nd;
  std::vector<double> v(n);
  for (auto& x : v) x = nd(rng);
  return v;
}

}  // namespace

TEST(GridSpec, RejectsBadSizes) {
  GridSpec s;
  s.n_h = 24;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = GridSpec{};
  s.m = 16;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = GridSpec{};
  s.y_max = 4.0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = GridSpec{};
  s.d = 4;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  EXPECT_NO_THROW(GridSpec{}.validate());
}

TEST(GridSpec, WavenumbersAndCutoff) {
  const GridSpec s;
  EXPECT_DOUBLE_EQ(s.min_nonzero_xi(), 1.0 / 8.0);
  EXPECT_DOUBLE_EQ(s.max_xi(), 8.0);
  EXPECT_DOUBLE_EQ(s.xi(1, 0), 1.0 / 8.0);
  EXPECT_DOUBLE_EQ(s.xi(127, 0), -1.0 / 8.0);
  EXPECT_EQ(s.dealias_cutoff(), 42);
}

// Direct-summation DFT on a 16 x 16 horizontal grid, one vertical row.
TEST(Transforms, MatchDirectSummation3d) {
  const auto s = small3();
  const auto v = random_samples(s.m * s.modes_per_row(), 1);
  const Field phys = Field::from_physical(s, 1, v);
  const Field spec = to_spectral(phys);
  const int n = s.n_h;
  for (int j : {0, 7, 31})
    for (int a = 0; a < n; a += 3)
      for (int b = 0; b < n; b += 5) {
        std::complex<double> acc;
        for (int x1 = 0; x1 < n; ++x1)
          for (int x2 = 0; x2 < n; ++x2) {
            const double ang = -2.0 * std::numbers::pi * (double(a) * x1 + double(b) * x2) / n;
            acc += v[(std::size_t)j * n * n + x1 * n + x2] * std::polar(1.0, ang);
          }
        acc /= double(n * n);
        EXPECT_NEAR(std::abs(spec.at(0, j, a * n + b) - acc), 0.0, 1e-13);
      }
}

TEST(Transforms, RoundTripAndReality) {
  for (const auto& s : {small2(), small3()}) {
    const auto v = random_samples(2 * s.m * s.modes_per_row(), 2);
    const Field phys = Field::from_physical(s, 2, v);
    const Field back = to_physical(to_spectral(phys));
    EXPECT_LT(max_imag_residue(back), 1e-14);
    for (std::size_t i = 0; i < v.size(); ++i) ASSERT_NEAR(back.data()[i].real(), v[i], 1e-13);
  }
}

TEST(Transforms, ParsevalWithBoxMeasure) {
  const auto s = small2();
  const auto v = random_samples(s.m * s.modes_per_row(), 3);
  const Field spec = to_spectral(Field::from_physical(s, 1, v));
  double phys_sum = 0.0, spec_sum = 0.0;
  for (int i = 0; i < s.n_h; ++i) phys_sum += v[i] * v[i] * s.dx();
  for (std::size_t p = 0; p < s.modes_per_row(); ++p) spec_sum += std::norm(spec.at(0, 0, p));
  EXPECT_NEAR(phys_sum, s.box_measure() * spec_sum, 1e-12 * phys_sum);
}

TEST(Transforms, SineHasHalfAmplitude) {
  const auto s = small2();
  std::vector<double> v(s.m * s.n_h);
  for (int j = 0; j < s.m; ++j)
    for (int i = 0; i < s.n_h; ++i) v[j * s.n_h + i] = std::sin(i * s.dx());
  const Field spec = to_spectral(Field::from_physical(s, 1, v));
  EXPECT_NEAR(std::abs(spec.at(0, 3, 1)), 0.5, 1e-15);
  EXPECT_NEAR(std::abs(spec.at(0, 3, 15)), 0.5, 1e-15);
}

TEST(Derivatives, HorizontalOfSine) {
  const auto s = small2();
  std::vector<double> v(s.m * s.n_h);
  for (int j = 0; j < s.m; ++j)
    for (int i = 0; i < s.n_h; ++i) v[j * s.n_h + i] = std::sin(3.0 * i * s.dx());
  const Field d = to_physical(horizontal_derivative(to_spectral(Field::from_physical(s, 1, v)), 0));
  for (int i = 0; i < s.n_h; ++i) EXPECT_NEAR(d.at(0, 5, i).real(), 3.0 * std::cos(3.0 * i * s.dx()), 1e-13);
}

TEST(Derivatives, VerticalExactOnQuadratics) {
  const auto s = small2();
  std::vector<double> v(s.m * s.n_h);
  for (int j = 0; j < s.m; ++j)
    for (int i = 0; i < s.n_h; ++i) v[j * s.n_h + i] = 2.0 + 3.0 * s.y(j) - 0.5 * s.y(j) * s.y(j);
  const Field f = Field::from_physical(s, 1, v);
  const Field d = vertical_derivative(f);
  for (int j = 0; j < s.m; ++j) EXPECT_NEAR(d.at(0, j, 4).real(), 3.0 - s.y(j), 1e-12);
}

TEST(Integral, CumulativeTrapezoidExactOnLinear) {
  const auto s = small2();
  std::vector<double> v(s.m * s.n_h);
  for (int j = 0; j < s.m; ++j)
    for (int i = 0; i < s.n_h; ++i) v[j * s.n_h + i] = 1.0 + 2.0 * s.y(j);
  const Field F = vertical_integral(Field::from_physical(s, 1, v));
  for (int j = 0; j < s.m; ++j) EXPECT_NEAR(F.at(0, j, 2).real(), s.y(j) + s.y(j) * s.y(j), 1e-12);
}

TEST(Dealias, TruncatesAboveTwoThirds) {
  const auto s = small2();
  Field f(s, 1, Layout::Spectral);
  for (std::size_t p = 0; p < s.modes_per_row(); ++p) f.at(0, 0, p) = 1.0;
  dealias(f);
  for (std::size_t p = 0; p < s.modes_per_row(); ++p)
    EXPECT_EQ(std::abs(f.at(0, 0, p)) > 0.0, s.max_axis_index(p) <= 5) << p;
}

TEST(Field, FromPhysicalChecksSize) {
  std::vector<double> v(10);
  EXPECT_THROW(Field::from_physical(small2(), 1, v), std::invalid_argument);
}

TEST(Field, LayoutMismatchRejected) {
  Field a(small2(), 1, Layout::Spectral), b(small2(), 1, Layout::Physical);
  EXPECT_THROW(a += b, std::invalid_argument);
  EXPECT_THROW(to_physical(b), std::invalid_argument);
}

TEST(Snapshot, RoundTrip) {
  const auto s = small2();
  const auto v = random_samples(s.m * s.modes_per_row(), 4);
  const Field f = Field::from_physical(s, 1, v);
  const auto prefix = (std::filesystem::temp_directory_path() / "grid_field_snapshot").string();
  write_snapshot_csv(f, prefix);
  const Field g = read_snapshot_csv(prefix, 1);
  EXPECT_TRUE(g.spec() == s);
  for (std::size_t i = 0; i < v.size(); ++i) ASSERT_EQ(g.data()[i].real(), v[i]);
  std::filesystem::remove(prefix + "_c0.csv");
}
