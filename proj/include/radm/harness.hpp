#pragma once

// Scripted experiments over the model: symbol audits, the N -> infinity sweep
// against the A_theta limit system, parameter sweeps, exact-solution checks,
// energy-conservation studies and continuous dependence on initial data.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <future>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "radm/diagnostics.hpp"
#include "radm/errors.hpp"
#include "radm/operators.hpp"
#include "radm/presets.hpp"
#include "radm/spectral_core.hpp"
#include "radm/timestepper.hpp"

namespace radm {

enum class ExperimentKind { symbol_audit, n_sweep, theta_sweep, taylor_green_verify, conservation_audit, stability_audit };

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::symbol_audit;
  SolverConfig base_config{};
  std::vector<double> sweep_values;
  std::string output_path = "experiment.csv";

  void validate() const {
    base_config.validate();
    const bool needs_sweep = kind != ExperimentKind::symbol_audit;
    if (needs_sweep && sweep_values.empty()) throw InvalidArgument("sweep values must be nonempty");
    for (std::size_t i = 1; i < sweep_values.size(); ++i) {
      if (!(sweep_values[i] > sweep_values[i - 1])) throw InvalidArgument("sweep values must be strictly increasing");
    }
  }
};

/// Distance to the next representable double above |x|.
inline double ulp_of(double x) noexcept {
  const double a = std::abs(x);
  return std::nextafter(a, std::numeric_limits<double>::infinity()) - a;
}

/// log2(coarse / fine) for successive entries: observed order under dt halving.
inline std::vector<double> observed_orders(std::span<const double> errors) {
  std::vector<double> out;
  for (std::size_t i = 1; i < errors.size(); ++i) out.push_back(std::log2(errors[i - 1] / errors[i]));
  return out;
}

// ---------------------------------------------------------------------------
// Symbol audit

enum class ModeSet { all, retained };

/// max_k a_hat r^(N+1): the deconvolution gap from the closed form, no cancellation.
inline double closed_form_gap(const SymbolTable& table, ModeSet modes) {
  const auto& grid = table.grid();
  const int order = table.params().deconv_order;
  double worst = 0.0;
  for (std::size_t m = 1; m < grid.size(); ++m) {
    if (modes == ModeSet::retained && !grid.in_mask(m)) continue;
    worst = std::max(worst, table.a_hat(m) * std::pow(table.ratio(m), order + 1));
  }
  return worst;
}

/// max_k (a_hat - d_hat) as stored in the table.
inline double table_gap(const SymbolTable& table, ModeSet modes) {
  const auto& grid = table.grid();
  double worst = 0.0;
  for (std::size_t m = 1; m < grid.size(); ++m) {
    if (modes == ModeSet::retained && !grid.in_mask(m)) continue;
    worst = std::max(worst, table.a_hat(m) - table.d_hat(m));
  }
  return worst;
}

/// max_k r(k)^(N+1).
inline double max_ratio_power(const SymbolTable& table, ModeSet modes) {
  const auto& grid = table.grid();
  double worst = 0.0;
  for (std::size_t m = 1; m < grid.size(); ++m) {
    if (modes == ModeSet::retained && !grid.in_mask(m)) continue;
    worst = std::max(worst, table.ratio(m));
  }
  return std::pow(worst, table.params().deconv_order + 1);
}

/// Smallest N whose closed-form gap max_k a r^(N+1) drops below `threshold`.
/// Evaluated per distinct |k|^2 from the scalar symbol formulas.
inline int first_order_below(const WaveGrid& grid, double alpha, double theta, double threshold, ModeSet modes,
                             int search_limit = 100000) {
  std::vector<double> ksq_values;
  for (std::size_t m = 1; m < grid.size(); ++m) {
    if (modes == ModeSet::retained && !grid.in_mask(m)) continue;
    ksq_values.push_back(grid.k_squared(m));
  }
  std::sort(ksq_values.begin(), ksq_values.end());
  ksq_values.erase(std::unique(ksq_values.begin(), ksq_values.end()), ksq_values.end());
  for (int order = 0; order <= search_limit; ++order) {
    FilterParams p{alpha, theta, order};
    double gap = 0.0;
    for (double ksq : ksq_values) {
      const double s = filter_strength(p, ksq);
      gap = std::max(gap, (1.0 + s) * std::pow(s / (1.0 + s), order + 1));
    }
    if (gap < threshold) return order;
  }
  return -1;
}

struct SymbolAuditReport {
  std::size_t checks = 0;
  std::size_t violations = 0;
  /// min over modes of d_hat - 1 (negative would be a violation beyond rounding).
  double worst_lower_slack = std::numeric_limits<double>::infinity();
  /// min over modes of min(N+1, a_hat) - d_hat.
  double worst_upper_slack = std::numeric_limits<double>::infinity();
  /// max over modes of |(a - d) - a r^(N+1)| / ulp(a).
  double worst_identity_ulps = 0.0;
  /// min over modes of d_hat(N+1) - d_hat(N).
  double worst_monotone_step = std::numeric_limits<double>::infinity();
  std::vector<std::string> offenders;
  double seconds = 0.0;

  bool passed() const noexcept { return violations == 0; }
};

/// Checks 1 <= d_hat <= min(N+1, a_hat), monotonicity in N and
/// a_hat - d_hat = a_hat r^(N+1), each to one ulp, on every grid mode.
inline SymbolAuditReport run_symbol_audit(const WaveGrid& grid, std::span<const double> alphas,
                                          std::span<const double> thetas, int max_order) {
  const auto start = std::chrono::steady_clock::now();
  SymbolAuditReport rep;
  const auto inf = std::numeric_limits<double>::infinity();
  auto offend = [&](const std::string& what, double alpha, double theta, int order, std::size_t m) {
    ++rep.violations;
    if (rep.offenders.size() < 32) {
      const auto k = grid.wavevector(m);
      rep.offenders.push_back(what + " alpha=" + std::to_string(alpha) + " theta=" + std::to_string(theta) +
                              " N=" + std::to_string(order) + " k=(" + std::to_string(k[0]) + "," +
                              std::to_string(k[1]) + "," + std::to_string(k[2]) + ")");
    }
  };
  std::vector<double> previous(grid.size());
  for (double alpha : alphas) {
    for (double theta : thetas) {
      for (int order = 0; order <= max_order; ++order) {
        const SymbolTable table(grid, FilterParams{alpha, theta, order});
        for (std::size_t m = 1; m < grid.size(); ++m) {
          const double a = table.a_hat(m);
          const double d = table.d_hat(m);
          const double r = table.ratio(m);
          rep.checks += 4;
          if (d < std::nextafter(1.0, -inf)) offend("d_hat < 1", alpha, theta, order, m);
          const double upper = std::min(static_cast<double>(order + 1), a);
          if (d > std::nextafter(upper, inf)) offend("d_hat > min(N+1, a_hat)", alpha, theta, order, m);
          const double identity_err = std::abs((a - d) - a * std::pow(r, order + 1));
          const double ulps = identity_err / ulp_of(a);
          if (ulps > 1.0) offend("a_hat - d_hat != a_hat r^(N+1)", alpha, theta, order, m);
          if (order > 0 && d < std::nextafter(previous[m], -inf)) {
            offend("d_hat decreasing in N", alpha, theta, order, m);
          }
          rep.worst_lower_slack = std::min(rep.worst_lower_slack, d - 1.0);
          rep.worst_upper_slack = std::min(rep.worst_upper_slack, upper - d);
          rep.worst_identity_ulps = std::max(rep.worst_identity_ulps, ulps);
          if (order > 0) rep.worst_monotone_step = std::min(rep.worst_monotone_step, d - previous[m]);
          previous[m] = d;
        }
      }
    }
  }
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

// ---------------------------------------------------------------------------
// Lockstep ensembles: several solvers advanced together so trajectories can
// be compared at identical sampling instants without storing them.

namespace detail {

struct Member {
  std::unique_ptr<Solver> solver;
  SolverState state;
  bool blew_up = false;
  std::string failure;
};

/// Steps every live member to t_end with the requested dt, calling
/// `observe` after step 0 and every `sample_every` steps (and at the end).
template <class Observe>
void advance_lockstep(std::vector<Member>& members, double dt, double t_end, int sample_every, Observe&& observe) {
  const auto policy = std::thread::hardware_concurrency() > 1 ? std::launch::async : std::launch::deferred;
  observe();
  long steps = 0;
  double t = 0.0;
  while (t_end - t > 1e-9 * dt) {
    const double h = std::min(dt, t_end - t);
    std::vector<std::future<void>> jobs;
    for (auto& mem : members) {
      if (mem.blew_up) continue;
      jobs.push_back(std::async(policy, [&mem, h] {
        try {
          mem.solver->step(mem.state, h);
        } catch (const BlowUp& e) {
          mem.blew_up = true;
          mem.failure = e.what();
        }
      }));
    }
    for (auto& j : jobs) j.get();
    t += h;
    ++steps;
    const bool last = t_end - t <= 1e-9 * dt;
    if (last || steps % sample_every == 0) observe();
  }
}

inline double trapezoid(std::span<const double> t, std::span<const double> y) {
  double acc = 0.0;
  for (std::size_t i = 1; i < t.size(); ++i) acc += 0.5 * (t[i] - t[i - 1]) * (y[i] + y[i - 1]);
  return acc;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// N sweep against the A_theta limit system

struct ConvergenceRow {
  int N = 0;
  /// ||w_N - w_ref|| in discrete L2(0,T; l2), trapezoid in time.
  double l2l2_gap = 0.0;
  /// sup_t ||w_N - w_ref||_{theta,2}.
  double linf_h_theta_gap = 0.0;
  /// max_k (a_hat - d_hat) over retained modes.
  double symbol_gap = 0.0;
  /// max_k r^(N+1) over retained modes.
  double ratio_power = 0.0;
  bool blew_up = false;
  /// False when CFL clamping desynchronized this run from the reference.
  bool times_matched = true;
};

struct NSweepReport {
  std::vector<ConvergenceRow> rows;
  /// ||w_ref|| in L2(0,T; l2).
  double reference_l2l2_norm = 0.0;
  bool reference_blew_up = false;
};

inline NSweepReport run_n_sweep(const SolverConfig& base, std::span<const int> orders) {
  std::vector<detail::Member> members;
  auto add = [&](SolverConfig cfg) {
    auto solver = std::make_unique<Solver>(cfg);
    SolverState st = solver->initialize();
    members.push_back({std::move(solver), std::move(st), false, {}});
  };
  SolverConfig ref_cfg = base;
  ref_cfg.model_mode = ModelMode::limit_atheta;
  add(ref_cfg);
  for (int order : orders) {
    SolverConfig cfg = base;
    cfg.model_mode = ModelMode::radm;
    cfg.filter.deconv_order = order;
    add(cfg);
  }

  const std::size_t count = orders.size();
  std::vector<double> times;
  std::vector<double> ref_sq;
  std::vector<std::vector<double>> gap_sq(count);
  NSweepReport rep;
  rep.rows.resize(count);
  const double theta = base.filter.theta;
  detail::advance_lockstep(members, base.dt, base.t_end, base.sample_every, [&] {
    const auto& ref = members[0].state;
    times.push_back(ref.t);
    ref_sq.push_back(inner_product(ref.w, ref.w));
    for (std::size_t j = 0; j < count; ++j) {
      auto& mem = members[j + 1];
      auto& row = rep.rows[j];
      if (mem.blew_up || members[0].blew_up) {
        gap_sq[j].push_back(gap_sq[j].empty() ? 0.0 : gap_sq[j].back());
        continue;
      }
      if (std::abs(mem.state.t - ref.t) > 1e-12 * std::max(1.0, ref.t)) row.times_matched = false;
      const SpectralVectorField diff = mem.state.w - ref.w;
      gap_sq[j].push_back(inner_product(diff, diff));
      row.linf_h_theta_gap = std::max(row.linf_h_theta_gap, sobolev_norm(diff, theta));
    }
  });
  rep.reference_blew_up = members[0].blew_up;
  rep.reference_l2l2_norm = std::sqrt(detail::trapezoid(times, ref_sq));
  for (std::size_t j = 0; j < count; ++j) {
    auto& row = rep.rows[j];
    row.N = orders[j];
    row.blew_up = members[j + 1].blew_up;
    row.l2l2_gap = std::sqrt(detail::trapezoid(times, gap_sq[j]));
    const auto& table = members[j + 1].solver->symbols().table();
    row.symbol_gap = table_gap(table, ModeSet::retained);
    row.ratio_power = max_ratio_power(table, ModeSet::retained);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Conservation / energy-budget study under dt refinement

struct ConservationRow {
  double dt = 0.0;
  double initial_energy = 0.0;
  double final_energy = 0.0;
  /// |E(T) - E(0)| / E(0).
  double relative_drift = 0.0;
  double budget_residual = 0.0;
  /// E(t_{i+1}) <= E(t_i) + 1e-12 at every sample.
  bool energy_nonincreasing = true;
  /// E(t_{i+1}) < E(t_i) at every sample.
  bool energy_strictly_decreasing = true;
  double max_div_residual = 0.0;
  double max_orth_defect = 0.0;
  bool bound_holds = true;
  bool blew_up = false;
};

struct ConservationReport {
  std::vector<ConservationRow> rows;
  std::vector<double> drift_orders;
  std::vector<double> residual_orders;
};

inline ConservationRow conservation_row(const SolverConfig& cfg) {
  Solver solver(cfg);
  const SpectralVectorField v0 = solver.initial_velocity();
  const RunResult res = run(solver);
  ConservationRow row;
  row.dt = cfg.dt;
  row.blew_up = res.blew_up;
  const auto& recs = res.records;
  row.initial_energy = recs.front().model_energy;
  row.final_energy = recs.back().model_energy;
  row.relative_drift = std::abs(row.final_energy - row.initial_energy) / row.initial_energy;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    row.max_div_residual = std::max(row.max_div_residual, recs[i].div_residual);
    row.max_orth_defect = std::max(row.max_orth_defect, recs[i].orth_defect);
    if (i > 0) {
      if (recs[i].model_energy > recs[i - 1].model_energy + 1e-12) row.energy_nonincreasing = false;
      if (!(recs[i].model_energy < recs[i - 1].model_energy)) row.energy_strictly_decreasing = false;
    }
  }
  if (recs.size() >= 2) {
    BudgetBound bound{cfg.nu, inner_product(v0, v0), res.forcing_hm1_sq};
    const BudgetReport budget = energy_budget(recs, bound);
    row.budget_residual = budget.final_residual;
    row.bound_holds = budget.bound_holds;
  }
  return row;
}

/// One run per dt (in parallel); orders of drift and budget residual under refinement.
inline ConservationReport run_conservation_audit(const SolverConfig& base, std::span<const double> dts) {
  std::vector<std::future<ConservationRow>> jobs;
  for (double dt : dts) {
    SolverConfig cfg = base;
    cfg.dt = dt;
    jobs.push_back(std::async(std::launch::async, [cfg] { return conservation_row(cfg); }));
  }
  ConservationReport rep;
  for (auto& j : jobs) rep.rows.push_back(j.get());
  std::vector<double> drift;
  std::vector<double> residual;
  for (const auto& r : rep.rows) {
    drift.push_back(std::abs(r.final_energy - r.initial_energy));
    residual.push_back(r.budget_residual);
  }
  rep.drift_orders = observed_orders(drift);
  rep.residual_orders = observed_orders(residual);
  return rep;
}

// ---------------------------------------------------------------------------
// theta sweep: records behaviour, passes no judgement

struct ThetaRow {
  double theta = 0.0;
  bool theory_regime = false;
  double initial_energy = 0.0;
  double final_energy = 0.0;
  double budget_residual = 0.0;
  double max_orth_defect = 0.0;
  double final_norm_1_plus_theta = 0.0;
  bool energy_nonincreasing = true;
  bool blew_up = false;
};

inline std::vector<ThetaRow> run_theta_sweep(const SolverConfig& base, std::span<const double> thetas) {
  std::vector<std::future<ThetaRow>> jobs;
  for (double theta : thetas) {
    SolverConfig cfg = base;
    cfg.filter.theta = theta;
    jobs.push_back(std::async(std::launch::async, [cfg] {
      Solver solver(cfg);
      const RunResult res = run(solver);
      ThetaRow row;
      row.theta = cfg.filter.theta;
      row.theory_regime = cfg.filter.theory_regime();
      row.blew_up = res.blew_up;
      const auto& recs = res.records;
      row.initial_energy = recs.front().model_energy;
      row.final_energy = recs.back().model_energy;
      row.final_norm_1_plus_theta = recs.back().norm_1_plus_theta;
      for (std::size_t i = 0; i < recs.size(); ++i) {
        row.max_orth_defect = std::max(row.max_orth_defect, recs[i].orth_defect);
        if (i > 0 && recs[i].model_energy > recs[i - 1].model_energy + 1e-12) row.energy_nonincreasing = false;
      }
      if (recs.size() >= 2) row.budget_residual = energy_budget(recs).final_residual;
      return row;
    }));
  }
  std::vector<ThetaRow> rows;
  for (auto& j : jobs) rows.push_back(j.get());
  return rows;
}

// ---------------------------------------------------------------------------
// Taylor-Green exact-solution verification

struct TaylorGreenRow {
  double dt = 0.0;
  double error = 0.0;
  double relative_error = 0.0;
  bool blew_up = false;
};

struct TaylorGreenReport {
  std::vector<TaylorGreenRow> rows;
  std::vector<double> orders;
  double min_order = 0.0;
  /// Error floor from round-off: about 1e3 machine epsilons times the field norm.
  double roundoff_floor = 0.0;
  bool below_roundoff_floor = false;
  bool passed(double order_threshold) const noexcept { return min_order >= order_threshold; }
};

/// Runs the 2D Taylor-Green preset, whose exact solution is w0 exp(-2 nu t)
/// in every model mode (the nonlinear term is a pure gradient on its shell).
inline TaylorGreenReport run_taylor_green_verify(const SolverConfig& base, std::span<const double> dts) {
  TaylorGreenReport rep;
  std::vector<double> errors;
  for (double dt : dts) {
    SolverConfig cfg = base;
    cfg.ic = IcPreset::taylor_green_2d;
    cfg.dt = dt;
    Solver solver(cfg);
    const SolverState init = solver.initialize();
    const RunResult res = run(solver);
    TaylorGreenRow row;
    row.dt = dt;
    row.blew_up = res.blew_up;
    const double t = res.final_state.t;
    const SpectralVectorField exact = std::exp(-2.0 * cfg.nu * t) * init.w;
    const SpectralVectorField diff = res.final_state.w - exact;
    row.error = l2_norm(diff);
    row.relative_error = row.error / l2_norm(exact);
    rep.roundoff_floor = std::max(rep.roundoff_floor, 1e3 * std::numeric_limits<double>::epsilon() * l2_norm(exact));
    errors.push_back(row.error);
    rep.rows.push_back(row);
  }
  rep.orders = observed_orders(errors);
  rep.min_order = rep.orders.empty() ? 0.0 : *std::min_element(rep.orders.begin(), rep.orders.end());
  rep.below_roundoff_floor =
      std::all_of(errors.begin(), errors.end(), [&](double e) { return e <= rep.roundoff_floor; });
  return rep;
}

// ---------------------------------------------------------------------------
// Continuous dependence on initial data

struct StabilityRow {
  double epsilon = 0.0;
  /// sup_t ||dw(t)||_{1/6,2} / epsilon.
  double response = 0.0;
  /// ||dw(T)||_{1/6,2} / ||dw(0)||_{1/6,2}.
  double growth = 0.0;
  bool blew_up = false;
};

struct StabilityReport {
  std::vector<StabilityRow> rows;
  /// response(eps_0) / response(eps_1) for the first two rows.
  double normalized_ratio = 0.0;
  /// int_0^T ||w_base||_{7/6,2}^2 dt / nu.
  double gronwall_exponent = 0.0;
  /// Smallest C with growth <= exp(C * gronwall_exponent) over the rows.
  double implied_constant = 0.0;
  bool base_blew_up = false;
};

/// The perturbation is a random solenoidal field scaled to ||.||_{1/6,2} = epsilon,
/// added to w0. All runs advance in lockstep with the base run.
inline StabilityReport run_stability_audit(const SolverConfig& base, std::span<const double> epsilons,
                                           std::uint64_t perturbation_seed = 1234) {
  constexpr double s = 1.0 / 6.0;
  std::vector<detail::Member> members;
  {
    auto solver = std::make_unique<Solver>(base);
    SolverState st = solver->initialize();
    members.push_back({std::move(solver), std::move(st), false, {}});
  }
  const WaveGrid& grid = members[0].solver->grid();
  SpectralVectorField direction = presets::random_divfree(grid, perturbation_seed);
  direction *= 1.0 / sobolev_norm(direction, s);
  for (double eps : epsilons) {
    auto solver = std::make_unique<Solver>(base);
    SolverState st = solver->initialize();
    st.w += eps * direction;
    members.push_back({std::move(solver), std::move(st), false, {}});
  }

  StabilityReport rep;
  rep.rows.resize(epsilons.size());
  std::vector<double> initial(epsilons.size(), 0.0);
  std::vector<double> latest(epsilons.size(), 0.0);
  std::vector<double> times;
  std::vector<double> base_norm_sq;
  detail::advance_lockstep(members, base.dt, base.t_end, base.sample_every, [&] {
    const auto& ref = members[0].state;
    times.push_back(ref.t);
    const double n76 = sobolev_norm(ref.w, 7.0 / 6.0);
    base_norm_sq.push_back(n76 * n76);
    for (std::size_t j = 0; j < epsilons.size(); ++j) {
      auto& mem = members[j + 1];
      if (mem.blew_up || members[0].blew_up) continue;
      const double d = sobolev_norm(mem.state.w - ref.w, s);
      if (times.size() == 1) initial[j] = d;
      latest[j] = d;
      rep.rows[j].response = std::max(rep.rows[j].response, d / epsilons[j]);
    }
  });
  rep.base_blew_up = members[0].blew_up;
  rep.gronwall_exponent = base.nu > 0.0 ? detail::trapezoid(times, base_norm_sq) / base.nu : 0.0;
  for (std::size_t j = 0; j < epsilons.size(); ++j) {
    auto& row = rep.rows[j];
    row.epsilon = epsilons[j];
    row.blew_up = members[j + 1].blew_up;
    row.growth = initial[j] > 0.0 ? latest[j] / initial[j] : 0.0;
    if (row.growth > 1.0 && rep.gronwall_exponent > 0.0) {
      rep.implied_constant = std::max(rep.implied_constant, std::log(row.growth) / rep.gronwall_exponent);
    }
  }
  if (rep.rows.size() >= 2 && rep.rows[1].response > 0.0) {
    rep.normalized_ratio = rep.rows[0].response / rep.rows[1].response;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Trajectory comparison used by the reduction identities

struct TrajectoryComparison {
  /// max over samples of ||w_a - w_b|| / ||w_b||.
  double max_relative_difference = 0.0;
  bool bitwise_identical = true;
  bool blew_up = false;
};

inline TrajectoryComparison compare_trajectories(const SolverConfig& a, const SolverConfig& b) {
  std::vector<detail::Member> members;
  for (const auto* cfg : {&a, &b}) {
    auto solver = std::make_unique<Solver>(*cfg);
    SolverState st = solver->initialize();
    members.push_back({std::move(solver), std::move(st), false, {}});
  }
  TrajectoryComparison cmp;
  detail::advance_lockstep(members, a.dt, a.t_end, a.sample_every, [&] {
    if (members[0].blew_up || members[1].blew_up) return;
    const auto& wa = members[0].state.w;
    const auto& wb = members[1].state.w;
    const SpectralVectorField diff = wa - wb;
    const double denom = l2_norm(wb);
    const double rel = denom > 0.0 ? l2_norm(diff) / denom : l2_norm(diff);
    cmp.max_relative_difference = std::max(cmp.max_relative_difference, rel);
    const auto da = wa.data();
    const auto db = wb.data();
    if (!std::equal(da.begin(), da.end(), db.begin())) cmp.bitwise_identical = false;
  });
  cmp.blew_up = members[0].blew_up || members[1].blew_up;
  return cmp;
}

}  // namespace radm
