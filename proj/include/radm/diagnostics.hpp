#pragma once

// Energy functionals of the model and a time-integrated energy budget.
//
// With M = A^(1/2) D^(1/2) the model energy E = |M w|^2 / 2 obeys
//   dE/dt = -nu |M w|_1^2 + <M filter(f), M w>,
// because the filtered nonlinearity is orthogonal to A D w.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "radm/errors.hpp"
#include "radm/nonlinearity.hpp"
#include "radm/spectral_core.hpp"
#include "radm/timestepper.hpp"

namespace radm {

struct DiagRecord {
  double t = 0.0;
  double model_energy = 0.0;
  double model_dissipation = 0.0;
  double kinetic_energy = 0.0;
  double norm_theta = 0.0;
  double norm_1_plus_theta = 0.0;
  double div_residual = 0.0;
  double orth_defect = 0.0;
  double forcing_power = 0.0;

  friend bool operator==(const DiagRecord&, const DiagRecord&) = default;
};

struct EnergySums {
  /// sum_k weight_k |w_k|^2
  double weighted = 0.0;
  /// sum_k |k|^2 weight_k |w_k|^2
  double weighted_grad = 0.0;
  /// sum_k |w_k|^2, accumulated in the same order so unit weights agree bitwise.
  double plain = 0.0;
};

inline EnergySums weighted_energy_sums(const SpectralVectorField& w, std::span<const double> weight) {
  const auto& grid = w.grid();
  EnergySums out;
  for (std::size_t m = 0; m < grid.size(); ++m) {
    const CVec3 c = w.at(m);
    const double sq = std::norm(c[0]) + std::norm(c[1]) + std::norm(c[2]);
    const double amp = weight[m] * sq;
    out.weighted += amp;
    out.weighted_grad += grid.k_squared(m) * amp;
    out.plain += sq;
  }
  return out;
}

/// Diagnostics of one snapshot. Reuses the state's memoized nonlinear term.
inline DiagRecord sample(const SolverState& state, const Solver& solver) {
  const auto& symbols = solver.symbols();
  const auto weight = symbols.energy_weight();
  const auto& w = state.w;
  DiagRecord r;
  r.t = state.t;
  const EnergySums sums = weighted_energy_sums(w, weight);
  r.model_energy = 0.5 * sums.weighted;
  r.model_dissipation = solver.config().nu * sums.weighted_grad;
  r.kinetic_energy = 0.5 * sums.plain;
  const double theta = symbols.params().theta;
  r.norm_theta = sobolev_norm(w, theta);
  r.norm_1_plus_theta = sobolev_norm(w, 1.0 + theta);
  r.div_residual = divergence_residual(w);
  r.orth_defect = orthogonality_defect(w, solver.nonlinear_term(state), symbols);
  if (solver.has_forcing()) {
    const SpectralVectorField fbar = solver.filtered_forcing(state.t);
    double power = 0.0;
    for (int c = 0; c < 3; ++c) {
      const auto fc = fbar.component(c);
      const auto wc = w.component(c);
      for (std::size_t m = 0; m < fc.size(); ++m) {
        power += weight[m] * (fc[m].real() * wc[m].real() + fc[m].imag() * wc[m].imag());
      }
    }
    r.forcing_power = power;
  }
  return r;
}

/// Right-hand side data of the a priori bound
///   |M w(t)|^2 + int_0^t nu |M w|_1^2 <= |v0|^2 + nu^-1 int_0^T |f|_{-1}^2.
struct BudgetBound {
  double nu = 0.0;
  double initial_velocity_sq = 0.0;
  /// |f(t_i)|_{-1}^2 at the record times; empty means f = 0.
  std::vector<double> forcing_hm1_sq;
};

struct BudgetReport {
  double energy_change = 0.0;
  double integrated_dissipation = 0.0;
  double integrated_power = 0.0;
  /// |E(T) - E(0) + int diss - int power| at the last record.
  double final_residual = 0.0;
  /// Largest residual over all record times.
  double max_residual = 0.0;
  /// max_t (2 E(t) + int_0^t diss).
  double bound_lhs = 0.0;
  double bound_rhs = 0.0;
  bool bound_holds = true;
  bool end_corrected = false;
};

/// Cumulative integrals of samples y at times t: trapezoid, plus Gregory end
/// corrections through second differences when the spacing is uniform and at
/// least four samples exist. The corrected rule is exact for cubics.
inline std::vector<double> cumulative_integral(std::span<const double> t, std::span<const double> y,
                                               bool* end_corrected = nullptr) {
  const std::size_t n = t.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) out[i] = out[i - 1] + 0.5 * (t[i] - t[i - 1]) * (y[i] + y[i - 1]);
  bool uniform = n >= 4;
  const double h = n >= 2 ? t[1] - t[0] : 0.0;
  for (std::size_t i = 1; i < n && uniform; ++i) uniform = std::abs((t[i] - t[i - 1]) - h) <= 1e-9 * std::abs(h);
  if (end_corrected) *end_corrected = uniform;
  if (!uniform) return out;
  // Left-end correction applies to every partial integral that reaches index 3.
  const double left = -h / 12.0 * -(y[1] - y[0]) - h / 24.0 * (y[2] - 2.0 * y[1] + y[0]);
  for (std::size_t i = 3; i < n; ++i) {
    const double right = -h / 12.0 * (y[i] - y[i - 1]) - h / 24.0 * (y[i] - 2.0 * y[i - 1] + y[i - 2]);
    out[i] += left + right;
  }
  return out;
}

inline BudgetReport energy_budget(std::span<const DiagRecord> records, const BudgetBound& bound = {}) {
  if (records.size() < 2) throw InvalidArgument("energy budget needs at least two records");
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (!(records[i].t > records[i - 1].t)) throw OrderingError("record times must be strictly increasing");
  }
  if (!bound.forcing_hm1_sq.empty() && bound.forcing_hm1_sq.size() != records.size()) {
    throw InvalidArgument("forcing norm samples must match the records");
  }
  std::vector<double> t;
  std::vector<double> diss;
  std::vector<double> power;
  for (const auto& r : records) {
    t.push_back(r.t);
    diss.push_back(r.model_dissipation);
    power.push_back(r.forcing_power);
  }
  BudgetReport rep;
  const auto int_diss = cumulative_integral(t, diss, &rep.end_corrected);
  const auto int_power = cumulative_integral(t, power);
  std::vector<double> int_forcing(records.size(), 0.0);
  if (!bound.forcing_hm1_sq.empty()) int_forcing = cumulative_integral(t, bound.forcing_hm1_sq);

  const double e0 = records.front().model_energy;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const double residual = std::abs(records[i].model_energy - e0 + int_diss[i] - int_power[i]);
    rep.max_residual = std::max(rep.max_residual, residual);
    rep.bound_lhs = std::max(rep.bound_lhs, 2.0 * records[i].model_energy + int_diss[i]);
  }
  const std::size_t last = records.size() - 1;
  rep.energy_change = records[last].model_energy - e0;
  rep.integrated_dissipation = int_diss[last];
  rep.integrated_power = int_power[last];
  rep.final_residual = std::abs(rep.energy_change + rep.integrated_dissipation - rep.integrated_power);
  const double forcing_term = bound.nu > 0.0 ? int_forcing[last] / bound.nu : 0.0;
  rep.bound_rhs = bound.initial_velocity_sq + forcing_term;
  // Slack for quadrature and round-off.
  rep.bound_holds = rep.bound_lhs <= rep.bound_rhs * (1.0 + 1e-9) + 1e-12;
  return rep;
}

/// |f|_{-1}^2 = sum_{k != 0} |k|^-2 |f_k|^2.
inline double h_minus_one_sq(const SpectralVectorField& f) {
  const double n = sobolev_norm(f, -1.0);
  return n * n;
}

struct RunResult {
  std::vector<DiagRecord> records;
  std::vector<double> forcing_hm1_sq;
  SolverState final_state;
  bool blew_up = false;
  std::string failure;
};

/// Integrates from `state` to t_end, sampling every `sample_every` steps and
/// at the final time. `on_sample` sees each sampled state.
inline RunResult run_from(const Solver& solver, SolverState state,
                          const std::function<void(const SolverState&, const DiagRecord&)>& on_sample = {}) {
  const auto& cfg = solver.config();
  RunResult result{{}, {}, std::move(state), false, {}};
  auto& st = result.final_state;
  auto record = [&] {
    DiagRecord r = sample(st, solver);
    st.last_diag = std::make_shared<const DiagRecord>(r);
    result.records.push_back(r);
    result.forcing_hm1_sq.push_back(solver.has_forcing() ? h_minus_one_sq(solver.forcing(st.t)) : 0.0);
    if (on_sample) on_sample(st, r);
  };
  record();
  try {
    while (cfg.t_end - st.t > 1e-9 * cfg.dt) {
      solver.step(st, std::min(cfg.dt, cfg.t_end - st.t));
      const bool last = cfg.t_end - st.t <= 1e-9 * cfg.dt;
      if (last || st.step_count % cfg.sample_every == 0) record();
    }
  } catch (const BlowUp& e) {
    result.blew_up = true;
    result.failure = e.what();
  }
  return result;
}

inline RunResult run(const Solver& solver,
                     const std::function<void(const SolverState&, const DiagRecord&)>& on_sample = {}) {
  return run_from(solver, solver.initialize(), on_sample);
}

}  // namespace radm
