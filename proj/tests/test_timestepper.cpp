#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "radm/timestepper.hpp"

using namespace radm;

namespace {

SolverConfig small_config() {
  SolverConfig cfg;
  cfg.grid_n = 16;
  cfg.t_end = 0.05;
  cfg.dt = 1e-2;
  return cfg;
}

}  // namespace

TEST(SolverConfig, Validation) {
  SolverConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.grid_n = 15;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = {};
  cfg.nu = 0.0;
  cfg.forcing = ForcingPreset::steady_trig;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = {};
  cfg.dt = 0.0;
  EXPECT_THROW(Solver{cfg}, InvalidArgument);
}

TEST(Solver, InitialStateIsFilteredVelocity) {
  SolverConfig cfg = small_config();
  cfg.ic = IcPreset::random_divfree;
  const Solver solver(cfg);
  const auto v0 = solver.initial_velocity();
  const auto st = solver.initialize();
  const auto& a = solver.symbols().divisor();
  for (std::size_t m = 0; m < v0.modes(); ++m) {
    const auto c = v0.at(m);
    const auto w = st.w.at(m);
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(std::abs(w[j] * a[m] - c[j]), 0.0, 1e-15);
  }
  EXPECT_LT(divergence_residual(st.w), 1e-14);
}

TEST(Solver, LinearDecayIsExact) {
  SolverConfig cfg = small_config();
  cfg.ic = IcPreset::random_divfree;
  cfg.nonlinear = false;
  const Solver solver(cfg);
  auto st = solver.initialize();
  const auto w0 = st.w;
  for (int i = 0; i < 5; ++i) solver.step(st);
  double err = 0.0;
  for (std::size_t m = 0; m < w0.modes(); ++m) {
    const double decay = std::exp(-cfg.nu * solver.grid().k_squared(m) * st.t);
    for (int j = 0; j < 3; ++j) err = std::max(err, std::abs(st.w.at(m)[j] - decay * w0.at(m)[j]));
  }
  EXPECT_LT(err, 1e-15);
  EXPECT_EQ(st.step_count, 5);
  EXPECT_NEAR(st.t, 0.05, 1e-15);
}

TEST(Solver, TaylorGreenDecaysLikeHeatEquation) {
  for (ModelMode mode : {ModelMode::radm, ModelMode::limit_atheta, ModelMode::plain_rotational_nse}) {
    SolverConfig cfg = small_config();
    cfg.model_mode = mode;
    const Solver solver(cfg);
    auto st = solver.initialize();
    const auto w0 = st.w;
    for (int i = 0; i < 5; ++i) solver.step(st);
    const auto exact = std::exp(-2.0 * cfg.nu * st.t) * w0;
    EXPECT_LT(l2_norm(st.w - exact), 1e-14);
  }
}

TEST(Solver, StepsAreDeterministic) {
  SolverConfig cfg = small_config();
  cfg.ic = IcPreset::random_divfree;
  const Solver a(cfg);
  const Solver b(cfg);
  auto sa = a.initialize();
  auto sb = b.initialize();
  for (int i = 0; i < 3; ++i) {
    a.step(sa);
    b.step(sb);
  }
  EXPECT_TRUE(std::equal(sa.w.data().begin(), sa.w.data().end(), sb.w.data().begin()));
}

TEST(Solver, StaysSolenoidalAndMeanFree) {
  SolverConfig cfg = small_config();
  cfg.ic = IcPreset::random_divfree;
  cfg.forcing = ForcingPreset::steady_trig;
  const Solver solver(cfg);
  auto st = solver.initialize();
  for (int i = 0; i < 5; ++i) solver.step(st);
  EXPECT_LT(divergence_residual(st.w), 1e-14);
  EXPECT_EQ(st.w.at(0), (CVec3{}));
}

TEST(Solver, CflClampsLargeSteps) {
  SolverConfig cfg = small_config();
  cfg.ic = IcPreset::random_divfree;
  const Solver solver(cfg);
  auto st = solver.initialize();
  const double speed = solver.nonlinear_term(st).max_advecting_speed;
  const double limit = solver.cfl_limit(speed);
  ASSERT_LT(limit, 1.0);
  const double taken = solver.step(st, 1.0);
  EXPECT_DOUBLE_EQ(taken, limit);
  EXPECT_DOUBLE_EQ(st.t, limit);
}

TEST(Solver, NonFiniteStateRaisesBlowUp) {
  const Solver solver(small_config());
  auto st = solver.initialize();
  st.w.set(solver.grid().mode_of({1, 1, 0}), {Complex(std::numeric_limits<double>::quiet_NaN(), 0.0), 0.0, 0.0});
  st.w.set(solver.grid().mode_of({-1, -1, 0}), {Complex(std::numeric_limits<double>::quiet_NaN(), 0.0), 0.0, 0.0});
  try {
    solver.step(st);
    FAIL() << "expected BlowUp";
  } catch (const BlowUp& e) {
    EXPECT_EQ(e.step_count(), 1);
  }
}

TEST(Solver, NonSolenoidalForcingIsProjectedWithWarning) {
  SolverConfig cfg = small_config();
  Solver solver(cfg);
  SpectralVectorField f(solver.grid());
  // grad cos(x1) plus a solenoidal part sin(x2) e1.
  f.set_pair({1, 0, 0}, {Complex(0.0, 0.5), 0.0, 0.0});
  f.set_pair({0, 1, 0}, {Complex(0.0, -0.5), 0.0, 0.0});
  solver.set_forcing_shape(f);
  ASSERT_EQ(solver.warnings().size(), 1u);
  EXPECT_TRUE(solver.has_forcing());
  EXPECT_LT(divergence_residual(solver.forcing(0.0)), 1e-16);
  EXPECT_NEAR(l2_norm(solver.forcing(0.0)), std::sqrt(0.5), 1e-15);
}

TEST(Solver, DecayingForcingFactor) {
  SolverConfig cfg = small_config();
  cfg.forcing = ForcingPreset::time_decaying_trig;
  const Solver solver(cfg);
  EXPECT_DOUBLE_EQ(solver.forcing_time_factor(0.0), 1.0);
  EXPECT_DOUBLE_EQ(solver.forcing_time_factor(2.0), std::exp(-2.0));
  EXPECT_NEAR(l2_norm(solver.forcing(1.0)), std::exp(-1.0) * l2_norm(solver.forcing(0.0)), 1e-15);
}

TEST(Solver, PressureOfTaylorGreen) {
  // u x curl u = -grad(sin^2 x1 sin^2 x2), so q = -(sin^2 x1 sin^2 x2) up to its mean.
  SolverConfig cfg = small_config();
  cfg.model_mode = ModelMode::plain_rotational_nse;
  const Solver solver(cfg);
  const auto st = solver.initialize();
  const auto p = solver.recover_pressure(st);
  const auto& grid = solver.grid();
  // -(1 - cos 2x1)(1 - cos 2x2)/4: coefficient of cos 2x1 is +1/4, split over +-2.
  EXPECT_NEAR(p.q[grid.mode_of({2, 0, 0})].real(), 0.125, 1e-15);
  EXPECT_NEAR(p.q[grid.mode_of({0, -2, 0})].real(), 0.125, 1e-15);
  EXPECT_NEAR(p.q[grid.mode_of({2, 2, 0})].real(), -0.0625, 1e-15);
  EXPECT_EQ(p.q[0], Complex(0.0, 0.0));
}

TEST(Solver, StateFromRejectsForeignGrid) {
  const Solver solver(small_config());
  EXPECT_THROW(solver.state_from(SpectralVectorField(WaveGrid(8))), InvalidArgument);
}
