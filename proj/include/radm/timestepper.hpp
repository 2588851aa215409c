#pragma once

// Time integration of
//   w_t = P[ filter(D w x curl D w) + filter(f) ] + nu Delta w,   div w = 0,
// with the viscous term absorbed into an exact integrating factor and the
// projected remainder advanced by Williamson's low-storage RK3.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "radm/errors.hpp"
#include "radm/nonlinearity.hpp"
#include "radm/operators.hpp"
#include "radm/presets.hpp"
#include "radm/spectral_core.hpp"

namespace radm {

enum class IcPreset { taylor_green_2d, random_divfree, abc_flow };
enum class ForcingPreset { none, steady_trig, time_decaying_trig };

struct SolverConfig {
  int grid_n = 32;
  double nu = 0.02;
  FilterParams filter{};
  double dt = 1e-3;
  double t_end = 0.5;
  IcPreset ic = IcPreset::taylor_green_2d;
  std::uint64_t seed = 7;
  ForcingPreset forcing = ForcingPreset::none;
  ModelMode model_mode = ModelMode::radm;
  double cfl_safety = 0.5;
  int sample_every = 1;
  std::string out_dir = "out";
  /// Test hook: drop the nonlinear term entirely. Not settable from config files.
  bool nonlinear = true;

  void validate() const {
    filter.validate();
    if (grid_n < 8 || grid_n % 2 != 0) throw InvalidArgument("grid_n must be even and >= 8");
    if (!(nu >= 0.0)) throw InvalidArgument("nu must be >= 0");
    if (nu == 0.0 && forcing != ForcingPreset::none) throw InvalidArgument("nu = 0 requires forcing none");
    if (!(dt > 0.0)) throw InvalidArgument("dt must be > 0");
    if (!(t_end > 0.0)) throw InvalidArgument("t_end must be > 0");
    if (!(cfl_safety > 0.0 && cfl_safety <= 1.0)) throw InvalidArgument("cfl_safety must lie in (0, 1]");
    if (sample_every < 1) throw InvalidArgument("sample_every must be >= 1");
  }
};

struct DiagRecord;

struct SolverState {
  double t = 0.0;
  SpectralVectorField w;
  long step_count = 0;
  std::shared_ptr<const DiagRecord> last_diag;

  // Nonlinear term of the current w, shared by sampling and the first RK stage.
  mutable std::shared_ptr<const NonlinearTerm> cached_term;
};

struct PressureField {
  WaveGrid grid;
  std::vector<Complex> q;
};

class Solver {
 public:
  explicit Solver(SolverConfig cfg)
      : cfg_((cfg.validate(), std::move(cfg))),
        grid_(cfg_.grid_n),
        symbols_(std::make_shared<const ModelSymbols>(grid_, cfg_.filter, cfg_.model_mode)),
        forcing_shape_(grid_),
        filtered_forcing_shape_(grid_) {
    if (cfg_.forcing != ForcingPreset::none) set_forcing_shape(presets::trig_forcing(grid_));
  }

  const SolverConfig& config() const noexcept { return cfg_; }
  const WaveGrid& grid() const noexcept { return grid_; }
  const ModelSymbols& symbols() const noexcept { return *symbols_; }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

  /// Replaces the spatial forcing profile. Non-solenoidal input is projected
  /// and a warning is recorded.
  void set_forcing_shape(SpectralVectorField f) {
    remove_mean(f);
    SpectralVectorField projected = f;
    leray_project_in_place(projected);
    SpectralVectorField diff = f - projected;
    if (l2_norm(diff) > 1e-12 * std::max(1.0, l2_norm(f))) {
      warnings_.push_back("forcing was not divergence-free; projected (removed l2 norm " +
                          std::to_string(l2_norm(diff)) + ")");
    }
    forcing_shape_ = projected;
    filtered_forcing_shape_ = std::move(projected);
    divide_modes(filtered_forcing_shape_, symbols_->divisor());
    has_forcing_ = l2_norm(forcing_shape_) > 0.0;
  }

  double forcing_time_factor(double t) const noexcept {
    switch (cfg_.forcing) {
      case ForcingPreset::time_decaying_trig:
        return std::exp(-t);
      default:
        return 1.0;
    }
  }

  /// f(t) before filtering.
  SpectralVectorField forcing(double t) const { return forcing_time_factor(t) * forcing_shape_; }
  /// filter(f)(t) as it enters the momentum equation.
  SpectralVectorField filtered_forcing(double t) const {
    return forcing_time_factor(t) * filtered_forcing_shape_;
  }
  bool has_forcing() const noexcept { return has_forcing_; }

  /// v0 from the preset: projected, mean-free and restricted to the dealiasing mask.
  SpectralVectorField initial_velocity() const {
    SpectralVectorField v(grid_);
    switch (cfg_.ic) {
      case IcPreset::taylor_green_2d:
      case IcPreset::abc_flow:
        if (grid_.mask_cutoff() < 1) throw InvalidArgument("preset needs |k| = 1 inside the dealiasing mask");
        v = cfg_.ic == IcPreset::taylor_green_2d ? presets::taylor_green_2d(grid_) : presets::abc_flow(grid_);
        break;
      case IcPreset::random_divfree:
        v = presets::random_divfree(grid_, cfg_.seed);
        break;
    }
    leray_project_in_place(v);
    remove_mean(v);
    dealias_in_place(v);
    return v;
  }

  /// w0 = filter(v0).
  SolverState initialize() const {
    SpectralVectorField w = initial_velocity();
    divide_modes(w, symbols_->divisor());
    return SolverState{0.0, std::move(w), 0, nullptr, nullptr};
  }

  SolverState state_from(SpectralVectorField w, double t = 0.0) const {
    if (!(w.grid() == grid_)) throw InvalidArgument("field grid does not match the solver grid");
    return SolverState{t, std::move(w), 0, nullptr, nullptr};
  }

  /// Model nonlinear term of state.w (dealiased, filtered, not projected), memoized on the state.
  const NonlinearTerm& nonlinear_term(const SolverState& state) const {
    if (!state.cached_term) state.cached_term = std::make_shared<const NonlinearTerm>(evaluate_term(state.w));
    return *state.cached_term;
  }

  /// P[ term + filter(f)(t) ]; the viscous part is excluded.
  SpectralVectorField rhs(const SolverState& state) const {
    SpectralVectorField out = nonlinear_term(state).value;
    add_forcing(out, state.t);
    leray_project_in_place(out);
    return out;
  }

  /// Largest admissible step for a given advecting speed.
  double cfl_limit(double speed) const noexcept {
    const double rate = speed * grid_.max_retained_wavenumber();
    return rate > 0.0 ? cfg_.cfl_safety / rate : std::numeric_limits<double>::infinity();
  }

  /// Advances one step of size min(dt_request, CFL limit). Returns the step taken.
  double step(SolverState& state, double dt_request) const {
    const NonlinearTerm& first = nonlinear_term(state);
    const double dt = std::min(dt_request, cfl_limit(first.max_advecting_speed));

    static constexpr std::array<double, 3> A{0.0, -5.0 / 9.0, -153.0 / 128.0};
    static constexpr std::array<double, 3> B{1.0 / 3.0, 15.0 / 16.0, 8.0 / 15.0};
    static constexpr std::array<double, 4> C{0.0, 1.0 / 3.0, 3.0 / 4.0, 1.0};

    const auto factors = decay_factors(dt);
    SpectralVectorField w = state.w;
    SpectralVectorField q(grid_);
    SpectralVectorField stage(grid_);
    for (int i = 0; i < 3; ++i) {
      if (i == 0) {
        stage = first.value;
      } else {
        stage = cfg_.nonlinear ? evaluate_term(w).value : SpectralVectorField(grid_);
      }
      add_forcing(stage, state.t + C[i] * dt);
      leray_project_in_place(stage);

      const auto& e = (*factors)[i];
      for (int c = 0; c < 3; ++c) {
        auto qc = q.component(c);
        auto wc = w.component(c);
        const auto sc = stage.component(c);
        for (std::size_t m = 0; m < qc.size(); ++m) {
          qc[m] = e[m] * (A[i] * qc[m] + dt * sc[m]);
          wc[m] = e[m] * wc[m] + B[i] * qc[m];
        }
      }
      leray_project_in_place(w);
      remove_mean(w);
    }

    if (!w.all_finite()) throw BlowUp(state.t + dt, state.step_count + 1);
    state.w = std::move(w);
    state.t += dt;
    state.step_count += 1;
    state.cached_term.reset();
    return dt;
  }

  double step(SolverState& state) const { return step(state, cfg_.dt); }

  /// q_k = -i k . t_k / |k|^2 for t = term + filter(f); q_0 = 0.
  PressureField recover_pressure(const SolverState& state) const {
    SpectralVectorField total = nonlinear_term(state).value;
    add_forcing(total, state.t);
    PressureField p{grid_, std::vector<Complex>(grid_.size())};
    const Complex i_unit(0.0, 1.0);
    for (std::size_t m = 0; m < grid_.size(); ++m) {
      const double ksq = grid_.derivative_k_squared(m);
      if (ksq == 0.0) continue;
      const Vec3 k = grid_.derivative_wavevector(m);
      const CVec3 t = total.at(m);
      p.q[m] = -i_unit * (k[0] * t[0] + k[1] * t[1] + k[2] * t[2]) / ksq;
    }
    return p;
  }

 private:
  using FactorSet = std::array<std::vector<double>, 3>;

  NonlinearTerm evaluate_term(const SpectralVectorField& w) const {
    if (!cfg_.nonlinear) {
      NonlinearTerm zero{SpectralVectorField(grid_)};
      return zero;
    }
    return rotational_cross(w, *symbols_, true);
  }

  void add_forcing(SpectralVectorField& target, double t) const {
    if (!has_forcing_) return;
    const double g = forcing_time_factor(t);
    const auto src = filtered_forcing_shape_.data();
    auto dst = target.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += g * src[i];
  }

  // exp(-nu |k|^2 (c_{i+1} - c_i) dt) per stage, cached by dt.
  std::shared_ptr<const FactorSet> decay_factors(double dt) const {
    std::lock_guard lock(factor_mutex_);
    if (auto it = factor_cache_.find(dt); it != factor_cache_.end()) return it->second;
    static constexpr std::array<double, 3> span{1.0 / 3.0, 3.0 / 4.0 - 1.0 / 3.0, 1.0 - 3.0 / 4.0};
    auto set = std::make_shared<FactorSet>();
    for (int i = 0; i < 3; ++i) {
      (*set)[i].resize(grid_.size());
      for (std::size_t m = 0; m < grid_.size(); ++m) {
        (*set)[i][m] = std::exp(-cfg_.nu * grid_.k_squared(m) * span[i] * dt);
      }
    }
    if (factor_cache_.size() > 8) factor_cache_.clear();
    factor_cache_.emplace(dt, set);
    return set;
  }

  SolverConfig cfg_;
  WaveGrid grid_;
  std::shared_ptr<const ModelSymbols> symbols_;
  SpectralVectorField forcing_shape_;
  SpectralVectorField filtered_forcing_shape_;
  bool has_forcing_ = false;
  std::vector<std::string> warnings_;
  mutable std::mutex factor_mutex_;
  mutable std::map<double, std::shared_ptr<const FactorSet>> factor_cache_;
};

}  // namespace radm
