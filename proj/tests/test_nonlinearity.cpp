#include <gtest/gtest.h>

#include <cmath>

#include "radm/nonlinearity.hpp"
#include "radm/presets.hpp"

using namespace radm;

TEST(Curl, AbcFlowIsBeltrami) {
  const WaveGrid grid(16);
  const auto v = presets::abc_flow(grid);
  EXPECT_LT(l2_norm(curl(v) - v), 1e-15);
}

TEST(Curl, SingleModeMatchesCrossProduct) {
  const WaveGrid grid(8);
  SpectralVectorField v(grid);
  // (0, 0, cos x1): curl = (0, sin x1, 0).
  v.set_pair({1, 0, 0}, {0.0, 0.0, Complex(0.5, 0.0)});
  const auto f = inverse_transform(curl(v));
  for (std::size_t i = 0; i < grid.size(); i += 5) {
    EXPECT_NEAR(f.at(i)[1], std::sin(grid.point(i)[0]), 1e-14);
    EXPECT_NEAR(f.at(i)[0], 0.0, 1e-14);
  }
}

TEST(RotationalCross, TaylorGreenAnalyticProduct) {
  // u x curl u = -grad(sin^2 x1 sin^2 x2) for the 2D Taylor-Green field.
  const WaveGrid grid(16);
  const auto u = presets::taylor_green_2d(grid);
  const ModelSymbols plain(grid, {0.0, 0.5, 0}, ModelMode::plain_rotational_nse);
  const auto term = rotational_cross(u, plain, true);
  const auto f = inverse_transform(term.value);
  for (std::size_t i = 0; i < grid.size(); i += 3) {
    const Vec3 x = grid.point(i);
    const double s1 = std::sin(x[0]);
    const double s2 = std::sin(x[1]);
    EXPECT_NEAR(f.at(i)[0], -2.0 * s1 * std::cos(x[0]) * s2 * s2, 1e-14);
    EXPECT_NEAR(f.at(i)[1], -2.0 * s2 * std::cos(x[1]) * s1 * s1, 1e-14);
    EXPECT_NEAR(f.at(i)[2], 0.0, 1e-14);
  }
  EXPECT_LT(term.dealias_loss, 1e-14);
  EXPECT_NEAR(term.max_advecting_speed, 1.0, 1e-12);
}

TEST(RotationalCross, BeltramiProductVanishes) {
  const WaveGrid grid(16);
  const auto u = presets::abc_flow(grid);
  const ModelSymbols plain(grid, {}, ModelMode::plain_rotational_nse);
  EXPECT_LT(l2_norm(rotational_cross(u, plain, true).value), 1e-14);
}

TEST(RotationalCross, OrthogonalToEnergyPartnerAllModes) {
  const WaveGrid grid(16);
  for (ModelMode mode : {ModelMode::radm, ModelMode::limit_atheta, ModelMode::plain_rotational_nse}) {
    const ModelSymbols sym(grid, {0.25, 0.5, 4}, mode);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto u = presets::random_divfree(grid, seed);
      const auto term = rotational_cross(u, sym, true);
      EXPECT_LT(orthogonality_defect(u, term, sym), 1e-12);
      EXPECT_LT(term.pointwise_orthogonality, 1e-14);
    }
  }
}

TEST(RotationalCross, DealiasingOffLosesOrthogonalityOnlyThroughAliases) {
  const WaveGrid grid(16);
  const auto u = presets::random_divfree(grid, 3);
  const FilterParams p{0.25, 0.5, 4};
  const auto on = rotational_cross(u, p, true);
  const auto off = rotational_cross(u, p, false);
  EXPECT_GT(on.dealias_loss, 0.0);
  EXPECT_EQ(off.dealias_loss, 0.0);
  for (std::size_t m = 0; m < grid.size(); ++m) {
    if (grid.in_mask(m)) {
      EXPECT_EQ(on.value.at(m), off.value.at(m));
    }
  }
}

TEST(RotationalCross, ZeroFieldGivesZero) {
  const WaveGrid grid(8);
  const auto term = rotational_cross(SpectralVectorField(grid), FilterParams{}, true);
  EXPECT_EQ(l2_norm(term.value), 0.0);
  EXPECT_EQ(term.pointwise_orthogonality, 0.0);
  EXPECT_EQ(orthogonality_defect(SpectralVectorField(grid), term, FilterParams{}), 0.0);
}

TEST(ModelSymbols, EnergyWeightIsProduct) {
  const WaveGrid grid(8);
  const ModelSymbols radm_sym(grid, {1.0, 1.0, 1}, ModelMode::radm);
  const auto m = grid.mode_of({1, 0, 0});
  EXPECT_DOUBLE_EQ(radm_sym.advect()[m], 1.5);
  EXPECT_DOUBLE_EQ(radm_sym.divisor()[m], 2.0);
  EXPECT_DOUBLE_EQ(radm_sym.energy_weight()[m], 3.0);
  const ModelSymbols lim(grid, {1.0, 1.0, 1}, ModelMode::limit_atheta);
  EXPECT_DOUBLE_EQ(lim.energy_weight()[m], 4.0);
}
