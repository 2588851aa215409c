#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "radm/errors.hpp"
#include "radm/presets.hpp"
#include "radm/spectral_core.hpp"

using namespace radm;

namespace {

RealVectorField random_real(const WaveGrid& grid, unsigned seed) {
  RealVectorField f(grid);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto& x : f.data()) x = u(rng);
  return f;
}

// Direct DFT of one coefficient: n^-3 sum_x f(x) e^{-i k.x}.
Complex direct_coefficient(const RealVectorField& f, int c, std::array<int, 3> k) {
  const auto& grid = f.grid();
  Complex acc = 0.0;
  const auto comp = f.component(c);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Vec3 x = grid.point(i);
    const double phase = k[0] * x[0] + k[1] * x[1] + k[2] * x[2];
    acc += comp[i] * Complex(std::cos(phase), -std::sin(phase));
  }
  return acc / static_cast<double>(grid.size());
}

}  // namespace

TEST(WaveGrid, RejectsOddOrSmallSizes) {
  EXPECT_THROW(WaveGrid(7), InvalidArgument);
  EXPECT_THROW(WaveGrid(6), InvalidArgument);
  EXPECT_NO_THROW(WaveGrid(8));
}

TEST(WaveGrid, WavenumberIndexRoundTrip) {
  const WaveGrid grid(16);
  for (int i = 0; i < 16; ++i) {
    const int k = grid.wavenumber_of(i);
    EXPECT_EQ(grid.index_of(k), i);
    EXPECT_LE(k, 8);
    EXPECT_GT(k, -8);
  }
}

TEST(WaveGrid, ConjugateIsInvolution) {
  const WaveGrid grid(8);
  for (std::size_t m = 0; m < grid.size(); ++m) {
    EXPECT_EQ(grid.conjugate(grid.conjugate(m)), m);
  }
}

TEST(WaveGrid, MaskKeepsCubicTwoThirds) {
  const WaveGrid grid(32);
  EXPECT_EQ(grid.mask_cutoff(), 10);
  EXPECT_TRUE(grid.in_mask(grid.mode_of({10, -10, 10})));
  EXPECT_FALSE(grid.in_mask(grid.mode_of({11, 0, 0})));
}

TEST(WaveGrid, NyquistDerivativeIsZero) {
  const WaveGrid grid(8);
  const auto m = grid.mode_of({4, 1, 0});
  EXPECT_EQ(grid.derivative_wavevector(m)[0], 0.0);
  EXPECT_EQ(grid.derivative_wavevector(m)[1], 1.0);
  EXPECT_EQ(grid.k_squared(m), 17.0);
}

TEST(Transforms, ForwardMatchesDirectDft) {
  const WaveGrid grid(8);
  const auto f = random_real(grid, 3);
  const auto v = forward_transform(f);
  for (std::array<int, 3> k : {std::array{0, 0, 0}, std::array{1, 2, 3}, std::array{-3, 4, 1}, std::array{2, -1, -2}}) {
    for (int c = 0; c < 3; ++c) {
      const Complex ref = direct_coefficient(f, c, k);
      const Complex got = v.component(c)[grid.mode_of(k)];
      EXPECT_NEAR(std::abs(ref - got), 0.0, 1e-14);
    }
  }
}

TEST(Transforms, RoundTripAndHermitian) {
  const WaveGrid grid(16);
  const auto f = random_real(grid, 11);
  const auto v = forward_transform(f);
  EXPECT_LT(hermitian_deviation(v), 1e-15);
  const auto g = inverse_transform(v);
  double err = 0.0;
  for (std::size_t i = 0; i < f.data().size(); ++i) err = std::max(err, std::abs(f.data()[i] - g.data()[i]));
  EXPECT_LT(err, 1e-13);
}

TEST(Transforms, InverseRejectsNonHermitian) {
  const WaveGrid grid(8);
  SpectralVectorField v(grid);
  v.set(grid.mode_of({1, 0, 0}), {Complex(1.0, 0.0), 0.0, 0.0});
  EXPECT_THROW(inverse_transform(v), SymmetryViolation);
  make_hermitian(v);
  EXPECT_NO_THROW(inverse_transform(v));
}

TEST(Transforms, SingleModeSynthesis) {
  const WaveGrid grid(8);
  SpectralVectorField v(grid);
  // sin(2 x2) in component 0.
  v.set_pair({0, 2, 0}, {Complex(0.0, -0.5), 0.0, 0.0});
  const auto f = inverse_transform(v);
  for (std::size_t i = 0; i < grid.size(); i += 7) {
    EXPECT_NEAR(f.at(i)[0], std::sin(2.0 * grid.point(i)[1]), 1e-14);
  }
}

TEST(Norms, ParsevalAndSobolev) {
  const WaveGrid grid(16);
  SpectralVectorField v(grid);
  v.set_pair({1, 0, 0}, {0.0, Complex(0.5, 0.0), 0.0});
  // ||v||^2 = 2 * 0.25.
  EXPECT_DOUBLE_EQ(inner_product(v, v), 0.5);
  v.set_pair({0, 3, 0}, {Complex(0.0, 1.0), 0.0, 0.0});
  // ||v||_s^2 = sum |k|^{2s} |c|^2.
  const double s = 0.75;
  const double ref = 2.0 * 0.25 + 2.0 * std::pow(9.0, s);
  EXPECT_NEAR(sobolev_norm(v, s), std::sqrt(ref), 1e-13);
}

TEST(Norms, MeanFreeChecks) {
  const WaveGrid grid(8);
  SpectralVectorField v(grid);
  v.set(0, {Complex(1.0, 0.0), 0.0, 0.0});
  EXPECT_THROW(require_mean_free(v), MeanFreeViolation);
  remove_mean(v);
  EXPECT_NO_THROW(require_mean_free(v));
}

TEST(Dealias, ZeroesOutsideMaskOnly) {
  const WaveGrid grid(16);
  auto v = forward_transform(random_real(grid, 5));
  const auto kept = dealias(v);
  for (std::size_t m = 0; m < grid.size(); ++m) {
    if (grid.in_mask(m)) {
      EXPECT_EQ(kept.at(m), v.at(m));
    } else {
      EXPECT_EQ(kept.at(m), (CVec3{}));
    }
  }
}

TEST(Divergence, PresetsAreSolenoidal) {
  const WaveGrid grid(32);
  EXPECT_LT(divergence_residual(presets::taylor_green_2d(grid)), 1e-16);
  EXPECT_LT(divergence_residual(presets::abc_flow(grid)), 1e-16);
  EXPECT_LT(divergence_residual(presets::random_divfree(grid, 9)), 1e-14);
}

TEST(Presets, TaylorGreenPointValues) {
  const WaveGrid grid(16);
  const auto f = inverse_transform(presets::taylor_green_2d(grid));
  for (std::size_t i = 0; i < grid.size(); i += 13) {
    const Vec3 x = grid.point(i);
    EXPECT_NEAR(f.at(i)[0], std::sin(x[0]) * std::cos(x[1]), 1e-14);
    EXPECT_NEAR(f.at(i)[1], -std::cos(x[0]) * std::sin(x[1]), 1e-14);
    EXPECT_NEAR(f.at(i)[2], 0.0, 1e-14);
  }
}

TEST(Presets, RandomFieldDeterministicAndNormalized) {
  const WaveGrid grid(16);
  const auto a = presets::random_divfree(grid, 42);
  const auto b = presets::random_divfree(grid, 42);
  const auto c = presets::random_divfree(grid, 43);
  EXPECT_TRUE(std::equal(a.data().begin(), a.data().end(), b.data().begin()));
  EXPECT_FALSE(std::equal(a.data().begin(), a.data().end(), c.data().begin()));
  EXPECT_NEAR(0.5 * inner_product(a, a), 0.5, 1e-14);
  EXPECT_LT(hermitian_deviation(a), 1e-16);
  for (std::size_t m = 0; m < grid.size(); ++m) {
    if (!grid.in_mask(m)) {
      EXPECT_EQ(a.at(m), (CVec3{}));
    }
  }
}
