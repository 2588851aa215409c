#pragma once

// Initial-condition and forcing presets, built directly from Fourier
// coefficients so trigonometric fields carry no transform round-off.

#include <cmath>
#include <cstdint>
#include <random>

#include "radm/operators.hpp"
#include "radm/spectral_core.hpp"

namespace radm::presets {

/// (sin x1 cos x2, -cos x1 sin x2, 0): four modes (+-1, +-1, 0).
inline SpectralVectorField taylor_green_2d(const WaveGrid& grid) {
  SpectralVectorField v(grid);
  for (int k1 : {-1, 1}) {
    for (int k2 : {-1, 1}) {
      // sin(k x) -> -i k / 2 per unit frequency sign, cos -> 1/2.
      v.set(grid.mode_of({k1, k2, 0}), {Complex(0.0, -0.25 * k1), Complex(0.0, 0.25 * k2), 0.0});
    }
  }
  return v;
}

/// ABC (Arnold-Beltrami-Childress) flow with A = B = C = 1:
/// (sin x3 + cos x2, sin x1 + cos x3, sin x2 + cos x1). Curl equals the field.
inline SpectralVectorField abc_flow(const WaveGrid& grid) {
  SpectralVectorField v(grid);
  const Complex sin_c(0.0, -0.5);
  const Complex cos_c(0.5, 0.0);
  v.set_pair({0, 0, 1}, {sin_c, cos_c, 0.0});
  v.set_pair({0, 1, 0}, {cos_c, 0.0, sin_c});
  v.set_pair({1, 0, 0}, {0.0, sin_c, cos_c});
  return v;
}

/// Random solenoidal field inside the dealiasing mask with spectrum
/// E(k) ~ k^4 exp(-2 (k / k_peak)^2), scaled to kinetic energy
/// (1/2) sum |c_k|^2 = energy. Deterministic in `seed`.
inline SpectralVectorField random_divfree(const WaveGrid& grid, std::uint64_t seed, double energy = 0.5,
                                          double k_peak = 2.0) {
  SpectralVectorField v(grid);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t m = 1; m < grid.size(); ++m) {
    const std::size_t partner = grid.conjugate(m);
    if (partner < m || !grid.in_mask(m)) continue;
    const double k = std::sqrt(grid.k_squared(m));
    const double amp = k * std::exp(-(k / k_peak) * (k / k_peak));
    CVec3 c{};
    for (auto& comp : c) {
      const double re = normal(rng);
      const double im = normal(rng);
      comp = partner == m ? Complex(amp * re, 0.0) : amp * Complex(re, im);
    }
    v.set(m, c);
    if (partner != m) v.set(partner, {std::conj(c[0]), std::conj(c[1]), std::conj(c[2])});
  }
  leray_project_in_place(v);
  const double current = 0.5 * inner_product(v, v);
  if (current > 0.0) v *= std::sqrt(energy / current);
  return v;
}

/// (sin 2x2, sin 2x3, sin 2x1), divergence-free.
inline SpectralVectorField trig_forcing(const WaveGrid& grid, double amplitude = 1.0) {
  SpectralVectorField f(grid);
  const Complex s(0.0, -0.5 * amplitude);
  f.set_pair({0, 2, 0}, {s, 0.0, 0.0});
  f.set_pair({0, 0, 2}, {0.0, s, 0.0});
  f.set_pair({2, 0, 0}, {0.0, 0.0, s});
  return f;
}

}  // namespace radm::presets
