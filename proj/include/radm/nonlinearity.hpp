#pragma once

// Pseudo-spectral rotational nonlinearity  filter( D w x curl(D w) ).
// The advected field, its curl and the pointwise cross product are formed on
// the collocation grid; the product is transformed back, truncated by the 2/3
// rule and divided by the Helmholtz symbol.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "radm/operators.hpp"
#include "radm/spectral_core.hpp"

namespace radm {

enum class ModelMode {
  radm,                  // D_{N,theta} advects, outer filter A^-1
  limit_atheta,          // A_theta advects in place of D_{N,theta}
  plain_rotational_nse,  // no filter, no deconvolution
};

/// Per-mode multipliers for one model variant.
///   advect        : w -> advected field (D_N, A_theta or 1)
///   divisor       : outer filter, the term is divided by it (A or 1)
///   energy_weight : advect * divisor; 2E = sum energy_weight |w_k|^2
class ModelSymbols {
 public:
  ModelSymbols(const WaveGrid& grid, const FilterParams& params, ModelMode mode)
      : mode_(mode), table_(symbols_for(grid, params)) {
    const auto count = grid.size();
    advect_.resize(count);
    divisor_.resize(count);
    energy_weight_.resize(count);
    for (std::size_t m = 0; m < count; ++m) {
      switch (mode) {
        case ModelMode::radm:
          advect_[m] = table_->d_hat(m);
          divisor_[m] = table_->a_hat(m);
          break;
        case ModelMode::limit_atheta:
          advect_[m] = table_->a_hat(m);
          divisor_[m] = table_->a_hat(m);
          break;
        case ModelMode::plain_rotational_nse:
          advect_[m] = 1.0;
          divisor_[m] = 1.0;
          break;
      }
      energy_weight_[m] = advect_[m] * divisor_[m];
    }
  }

  ModelMode mode() const noexcept { return mode_; }
  const SymbolTable& table() const noexcept { return *table_; }
  const WaveGrid& grid() const noexcept { return table_->grid(); }
  const FilterParams& params() const noexcept { return table_->params(); }

  std::span<const double> advect() const noexcept { return advect_; }
  std::span<const double> divisor() const noexcept { return divisor_; }
  std::span<const double> energy_weight() const noexcept { return energy_weight_; }

 private:
  ModelMode mode_;
  std::shared_ptr<const SymbolTable> table_;
  std::vector<double> advect_;
  std::vector<double> divisor_;
  std::vector<double> energy_weight_;
};

struct NonlinearTerm {
  SpectralVectorField value;
  /// max_x |(a x w) . a| / max_x |a|^2 |w|, with a the advected field and w its curl.
  double pointwise_orthogonality = 0.0;
  /// max_x |a(x)|, the speed used by the CFL limit.
  double max_advecting_speed = 0.0;
  /// l2 norm of the coefficients removed by the 2/3 rule.
  double dealias_loss = 0.0;
};

inline void curl_into(const SpectralVectorField& v, SpectralVectorField& out) noexcept {
  const auto& grid = v.grid();
  const auto c0 = v.component(0);
  const auto c1 = v.component(1);
  const auto c2 = v.component(2);
  auto o0 = out.component(0);
  auto o1 = out.component(1);
  auto o2 = out.component(2);
  const Complex i_unit(0.0, 1.0);
  for (std::size_t m = 0; m < grid.size(); ++m) {
    const Vec3 k = grid.derivative_wavevector(m);
    o0[m] = i_unit * (k[1] * c2[m] - k[2] * c1[m]);
    o1[m] = i_unit * (k[2] * c0[m] - k[0] * c2[m]);
    o2[m] = i_unit * (k[0] * c1[m] - k[1] * c0[m]);
  }
}

/// (curl v)_k = i k x c_k.
inline SpectralVectorField curl(const SpectralVectorField& v) {
  require_mean_free(v);
  SpectralVectorField out(v.grid());
  curl_into(v, out);
  return out;
}

/// Model nonlinear term for `u` under the given model variant. The zero mode
/// of the product is dropped; no Leray projection is applied here.
inline NonlinearTerm rotational_cross(const SpectralVectorField& u, const ModelSymbols& symbols, bool dealias_on) {
  require_mean_free(u);
  const auto& grid = u.grid();

  SpectralVectorField advected = u;
  scale_modes(advected, symbols.advect());
  SpectralVectorField vorticity(grid);
  curl_into(advected, vorticity);

  RealVectorField a(grid);
  RealVectorField w(grid);
  detail::inverse_pair(advected, vorticity, a, w);

  RealVectorField product(grid);
  double max_speed_sq = 0.0;
  double max_defect = 0.0;
  double max_scale = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Vec3 av = a.at(i);
    const Vec3 wv = w.at(i);
    const Vec3 p{av[1] * wv[2] - av[2] * wv[1], av[2] * wv[0] - av[0] * wv[2], av[0] * wv[1] - av[1] * wv[0]};
    product.set(i, p);
    const double a_sq = av[0] * av[0] + av[1] * av[1] + av[2] * av[2];
    const double w_abs = std::sqrt(wv[0] * wv[0] + wv[1] * wv[1] + wv[2] * wv[2]);
    max_speed_sq = std::max(max_speed_sq, a_sq);
    max_defect = std::max(max_defect, std::abs(p[0] * av[0] + p[1] * av[1] + p[2] * av[2]));
    max_scale = std::max(max_scale, a_sq * w_abs);
  }

  NonlinearTerm term{SpectralVectorField(grid)};
  detail::forward_into(product, term.value);
  remove_mean(term.value);
  if (dealias_on) {
    double removed = 0.0;
    for (int c = 0; c < 3; ++c) {
      auto vc = term.value.component(c);
      for (std::size_t m = 0; m < vc.size(); ++m) {
        if (!grid.in_mask(m)) {
          removed += std::norm(vc[m]);
          vc[m] = 0.0;
        }
      }
    }
    term.dealias_loss = std::sqrt(removed);
  }
  divide_modes(term.value, symbols.divisor());
  term.pointwise_orthogonality = max_scale > 0.0 ? max_defect / max_scale : 0.0;
  term.max_advecting_speed = std::sqrt(max_speed_sq);
  return term;
}

inline NonlinearTerm rotational_cross(const SpectralVectorField& u, const FilterParams& p, bool dealias_on) {
  return rotational_cross(u, ModelSymbols(u.grid(), p, ModelMode::radm), dealias_on);
}

/// |<term, A D u>| / (|term| |A D u| + eps); exactly zero in the continuum.
inline double orthogonality_defect(const SpectralVectorField& u, const NonlinearTerm& term,
                                   const ModelSymbols& symbols) {
  constexpr double eps = 1e-300;
  SpectralVectorField partner = u;
  scale_modes(partner, symbols.energy_weight());
  const double pairing = inner_product(term.value, partner);
  return std::abs(pairing) / (l2_norm(term.value) * l2_norm(partner) + eps);
}

inline double orthogonality_defect(const SpectralVectorField& u, const NonlinearTerm& term, const FilterParams& p) {
  return orthogonality_defect(u, term, ModelSymbols(u.grid(), p, ModelMode::radm));
}

}  // namespace radm
