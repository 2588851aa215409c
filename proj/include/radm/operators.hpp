#pragma once

// Diagonal Fourier multipliers: the fractional Helmholtz operator
// A = I + alpha^(2 theta) (-Delta)^theta, its inverse (the filter), the
// deconvolution operator D_N = sum_{i=0}^N (I - A^-1)^i, the energy weight
// A^(1/2) D_N^(1/2), the fractional Laplacian and the Leray projector.

#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "radm/errors.hpp"
#include "radm/spectral_core.hpp"

namespace radm {

struct FilterParams {
  double alpha = 0.25;
  double theta = 0.5;
  int deconv_order = 4;

  /// theta >= 1/6, the hypothesis of the well-posedness result.
  bool theory_regime() const noexcept { return theta >= 1.0 / 6.0; }

  void validate() const {
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw InvalidArgument("alpha must be >= 0");
    if (!(theta >= 0.0 && theta <= 1.0)) throw InvalidArgument("theta must lie in [0, 1]");
    if (deconv_order < 0) throw InvalidArgument("deconvolution order must be >= 0");
  }

  friend bool operator==(const FilterParams&, const FilterParams&) = default;
};

/// |k|^(2 theta) from the exact integer |k|^2; zero at k = 0.
inline double fractional_power(double ksq, double theta) noexcept {
  if (ksq == 0.0) return 0.0;
  if (theta == 0.0) return 1.0;
  if (theta == 1.0) return ksq;
  if (theta == 0.5) return std::sqrt(ksq);
  return std::exp(theta * std::log(ksq));
}

/// alpha^(2 theta) |k|^(2 theta). theta = 0 or alpha = 0 switches the filter off.
inline double filter_strength(const FilterParams& p, double ksq) noexcept {
  if (p.theta == 0.0 || p.alpha == 0.0) return 0.0;
  const double alpha_pow = p.theta == 1.0 ? p.alpha * p.alpha
                           : p.theta == 0.5 ? p.alpha
                                            : std::exp(2.0 * p.theta * std::log(p.alpha));
  return alpha_pow * fractional_power(ksq, p.theta);
}

inline double helmholtz_symbol(const FilterParams& p, double ksq) noexcept { return 1.0 + filter_strength(p, ksq); }

/// Closed form (1 + s)(1 - (s / (1 + s))^(N+1)), s = alpha^(2 theta)|k|^(2 theta).
inline double deconv_symbol(const FilterParams& p, double ksq) noexcept {
  const double s = filter_strength(p, ksq);
  const double a = 1.0 + s;
  const double r = s / a;
  // D_0 is the identity; the product form would only reproduce 1 to a few ulps.
  return p.deconv_order == 0 ? 1.0 : a * (1.0 - std::pow(r, p.deconv_order + 1));
}

/// Per-mode symbols for one (grid, params) pair. Immutable once built.
class SymbolTable {
 public:
  SymbolTable(const WaveGrid& grid, const FilterParams& params) : grid_(grid), params_(params) {
    params.validate();
    const auto count = grid.size();
    a_hat_.resize(count);
    d_hat_.resize(count);
    ratio_.resize(count);
    for (std::size_t m = 0; m < count; ++m) {
      const double s = filter_strength(params, grid.k_squared(m));
      const double a = 1.0 + s;
      const double r = s / a;
      a_hat_[m] = a;
      ratio_[m] = r;
      d_hat_[m] = params.deconv_order == 0 ? 1.0 : a * (1.0 - std::pow(r, params.deconv_order + 1));
    }
  }

  const WaveGrid& grid() const noexcept { return grid_; }
  const FilterParams& params() const noexcept { return params_; }

  std::span<const double> a_hat() const noexcept { return a_hat_; }
  std::span<const double> d_hat() const noexcept { return d_hat_; }
  std::span<const double> ratio() const noexcept { return ratio_; }

  double a_hat(std::size_t m) const noexcept { return a_hat_[m]; }
  double d_hat(std::size_t m) const noexcept { return d_hat_[m]; }
  double ratio(std::size_t m) const noexcept { return ratio_[m]; }

 private:
  WaveGrid grid_;
  FilterParams params_;
  std::vector<double> a_hat_;
  std::vector<double> d_hat_;
  std::vector<double> ratio_;
};

/// Shared, cached symbol table for (grid, params).
inline std::shared_ptr<const SymbolTable> symbols_for(const WaveGrid& grid, const FilterParams& params) {
  using Key = std::tuple<int, double, double, int>;
  static std::mutex mutex;
  static std::map<Key, std::shared_ptr<const SymbolTable>> cache;
  const Key key{grid.n(), params.alpha, params.theta, params.deconv_order};
  std::lock_guard lock(mutex);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  if (cache.size() >= 64) cache.clear();
  auto table = std::make_shared<const SymbolTable>(grid, params);
  cache.emplace(key, table);
  return table;
}

/// Multiplies every component of mode m by multiplier[m].
inline void scale_modes(SpectralVectorField& v, std::span<const double> multiplier) noexcept {
  for (int c = 0; c < 3; ++c) {
    auto vc = v.component(c);
    for (std::size_t m = 0; m < vc.size(); ++m) vc[m] *= multiplier[m];
  }
}

inline void divide_modes(SpectralVectorField& v, std::span<const double> divisor) noexcept {
  for (int c = 0; c < 3; ++c) {
    auto vc = v.component(c);
    for (std::size_t m = 0; m < vc.size(); ++m) vc[m] /= divisor[m];
  }
}

inline SpectralVectorField helmholtz_apply(SpectralVectorField v, const SymbolTable& symbols) {
  require_mean_free(v);
  scale_modes(v, symbols.a_hat());
  return v;
}

inline SpectralVectorField helmholtz_apply(SpectralVectorField v, const FilterParams& p) {
  const auto symbols = symbols_for(v.grid(), p);
  return helmholtz_apply(std::move(v), *symbols);
}

/// The filter v -> A^-1 v.
inline SpectralVectorField filter_apply(SpectralVectorField v, const SymbolTable& symbols) {
  require_mean_free(v);
  divide_modes(v, symbols.a_hat());
  return v;
}

inline SpectralVectorField filter_apply(SpectralVectorField v, const FilterParams& p) {
  const auto symbols = symbols_for(v.grid(), p);
  return filter_apply(std::move(v), *symbols);
}

inline SpectralVectorField deconv_apply(SpectralVectorField v, const SymbolTable& symbols) {
  require_mean_free(v);
  scale_modes(v, symbols.d_hat());
  return v;
}

inline SpectralVectorField deconv_apply(SpectralVectorField v, const FilterParams& p) {
  const auto symbols = symbols_for(v.grid(), p);
  return deconv_apply(std::move(v), *symbols);
}

/// v -> A^(1/2) D_N^(1/2) v; the squared l2 norm of the result is twice the model energy.
inline SpectralVectorField model_energy_multiplier(SpectralVectorField v, const SymbolTable& symbols) {
  require_mean_free(v);
  const auto a = symbols.a_hat();
  const auto d = symbols.d_hat();
  for (int c = 0; c < 3; ++c) {
    auto vc = v.component(c);
    for (std::size_t m = 0; m < vc.size(); ++m) vc[m] *= std::sqrt(a[m] * d[m]);
  }
  return v;
}

inline SpectralVectorField model_energy_multiplier(SpectralVectorField v, const FilterParams& p) {
  const auto symbols = symbols_for(v.grid(), p);
  return model_energy_multiplier(std::move(v), *symbols);
}

inline void leray_project_in_place(SpectralVectorField& v) noexcept {
  const auto& grid = v.grid();
  auto c0 = v.component(0);
  auto c1 = v.component(1);
  auto c2 = v.component(2);
  for (std::size_t m = 0; m < grid.size(); ++m) {
    const double ksq = grid.derivative_k_squared(m);
    if (ksq == 0.0) continue;
    const Vec3 k = grid.derivative_wavevector(m);
    const Complex div = (k[0] * c0[m] + k[1] * c1[m] + k[2] * c2[m]) / ksq;
    c0[m] -= k[0] * div;
    c1[m] -= k[1] * div;
    c2[m] -= k[2] * div;
  }
}

/// c_k -> c_k - k (k . c_k) / |k|^2.
inline SpectralVectorField leray_project(SpectralVectorField v) {
  require_mean_free(v);
  leray_project_in_place(v);
  return v;
}

/// (-Delta)^theta: multiplies mode k by |k|^(2 theta).
inline SpectralVectorField fractional_laplacian(SpectralVectorField v, double theta) {
  require_mean_free(v);
  const auto& grid = v.grid();
  for (int c = 0; c < 3; ++c) {
    auto vc = v.component(c);
    for (std::size_t m = 0; m < vc.size(); ++m) vc[m] *= fractional_power(grid.k_squared(m), theta);
  }
  return v;
}

}  // namespace radm
