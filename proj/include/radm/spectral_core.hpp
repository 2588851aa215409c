#pragma once

// Discrete periodic torus [0, 2pi)^3: wavenumber lattice, 2/3-rule mask,
// Fourier transforms (FFTW backed), and Sobolev norms from coefficients.
//
// Layout: both physical points and Fourier modes use the row-major index
// (i1 * n + i2) * n + i3. Point i_j sits at x_j = 2 pi i_j / n; mode index
// i_j carries wavenumber k_j = i_j for i_j <= n/2 and i_j - n otherwise, so
// each axis spans [-n/2 + 1, n/2].
//
// Coefficients follow the Fourier series convention
//   f(x) = sum_k c_k exp(i k.x),   c_k = n^-3 sum_x f(x) exp(-i k.x).

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <vector>

#include <fftw3.h>

#include "radm/errors.hpp"

namespace radm {

using Complex = std::complex<double>;
using Vec3 = std::array<double, 3>;
using CVec3 = std::array<Complex, 3>;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Tolerance above which a spectral field is rejected as non-Hermitian.
inline constexpr double kSymmetryTolerance = 1e-10;
/// Tolerance above which a coefficient at k = 0 counts as a mean.
inline constexpr double kMeanFreeTolerance = 1e-12;

class WaveGrid {
 public:
  explicit WaveGrid(int n_per_axis) : n_(n_per_axis) {
    if (n_per_axis < 8 || n_per_axis % 2 != 0) {
      throw InvalidArgument("grid resolution must be even and >= 8, got " + std::to_string(n_per_axis));
    }
    tables_ = tables_for(n_per_axis);
  }

  int n() const noexcept { return n_; }
  /// Number of points (equivalently modes): n^3.
  std::size_t size() const noexcept { return tables_->ksq.size(); }
  double box_length() const noexcept { return kTwoPi; }

  /// Largest |k_j| kept by the 2/3 rule.
  int mask_cutoff() const noexcept { return n_ / 3; }
  /// Largest |k| among modes inside the dealiasing mask.
  double max_retained_wavenumber() const noexcept {
    return std::sqrt(3.0 * mask_cutoff() * mask_cutoff());
  }
  /// Largest |k| among all grid modes.
  double max_wavenumber() const noexcept { return std::sqrt(3.0 * (n_ / 2) * (n_ / 2)); }

  int wavenumber_of(int index) const noexcept { return index <= n_ / 2 ? index : index - n_; }
  int index_of(int wavenumber) const noexcept { return wavenumber < 0 ? wavenumber + n_ : wavenumber; }

  std::size_t mode_index(int i1, int i2, int i3) const noexcept {
    return (static_cast<std::size_t>(i1) * n_ + i2) * n_ + i3;
  }
  /// Mode index for a wavenumber triple; components must lie in [-n/2+1, n/2].
  std::size_t mode_of(std::array<int, 3> k) const noexcept {
    return mode_index(index_of(k[0]), index_of(k[1]), index_of(k[2]));
  }

  std::array<int, 3> wavevector(std::size_t mode) const noexcept {
    const auto n = static_cast<std::size_t>(n_);
    return {wavenumber_of(static_cast<int>(mode / (n * n))), wavenumber_of(static_cast<int>((mode / n) % n)),
            wavenumber_of(static_cast<int>(mode % n))};
  }

  /// |k|^2, an exact integer stored as double.
  double k_squared(std::size_t mode) const noexcept { return tables_->ksq[mode]; }
  std::span<const double> k_squared() const noexcept { return tables_->ksq; }

  /// Wavevector used by derivative and projection operators. Components at the
  /// Nyquist index are zero so odd-order multipliers keep Hermitian symmetry.
  Vec3 derivative_wavevector(std::size_t mode) const noexcept {
    return {tables_->kd[0][mode], tables_->kd[1][mode], tables_->kd[2][mode]};
  }
  double derivative_k_squared(std::size_t mode) const noexcept { return tables_->kdsq[mode]; }

  bool in_mask(std::size_t mode) const noexcept { return tables_->mask[mode] != 0; }
  std::size_t conjugate(std::size_t mode) const noexcept { return tables_->conj[mode]; }

  Vec3 point(std::size_t index) const noexcept {
    const auto n = static_cast<std::size_t>(n_);
    const double h = kTwoPi / n_;
    return {h * static_cast<double>(index / (n * n)), h * static_cast<double>((index / n) % n),
            h * static_cast<double>(index % n)};
  }

  friend bool operator==(const WaveGrid& a, const WaveGrid& b) noexcept { return a.n_ == b.n_; }

 private:
  struct Tables {
    std::vector<double> ksq;
    std::array<std::vector<double>, 3> kd;
    std::vector<double> kdsq;
    std::vector<std::uint8_t> mask;
    std::vector<std::uint32_t> conj;
  };

  static std::shared_ptr<const Tables> tables_for(int n) {
    static std::mutex mutex;
    static std::map<int, std::shared_ptr<const Tables>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[n];
    if (!slot) slot = build_tables(n);
    return slot;
  }

  static std::shared_ptr<const Tables> build_tables(int n) {
    auto t = std::make_shared<Tables>();
    const std::size_t total = static_cast<std::size_t>(n) * n * n;
    t->ksq.resize(total);
    for (auto& v : t->kd) v.resize(total);
    t->kdsq.resize(total);
    t->mask.resize(total);
    t->conj.resize(total);
    const int cutoff = n / 3;
    auto wn = [n](int i) { return i <= n / 2 ? i : i - n; };
    for (int i1 = 0; i1 < n; ++i1) {
      for (int i2 = 0; i2 < n; ++i2) {
        for (int i3 = 0; i3 < n; ++i3) {
          const std::size_t m = (static_cast<std::size_t>(i1) * n + i2) * n + i3;
          const std::array<int, 3> idx{i1, i2, i3};
          double ksq = 0.0;
          double kdsq = 0.0;
          bool inside = true;
          std::size_t conj = 0;
          for (int j = 0; j < 3; ++j) {
            const int k = wn(idx[j]);
            ksq += static_cast<double>(k) * k;
            const double kd = (idx[j] == n / 2) ? 0.0 : static_cast<double>(k);
            t->kd[j][m] = kd;
            kdsq += kd * kd;
            inside = inside && std::abs(k) <= cutoff;
            conj = conj * n + static_cast<std::size_t>((n - idx[j]) % n);
          }
          t->ksq[m] = ksq;
          t->kdsq[m] = kdsq;
          t->mask[m] = inside ? 1 : 0;
          t->conj[m] = static_cast<std::uint32_t>(conj);
        }
      }
    }
    return t;
  }

  int n_;
  std::shared_ptr<const Tables> tables_;
};

/// Fourier coefficients of a 3-component field, stored component-major.
class SpectralVectorField {
 public:
  explicit SpectralVectorField(WaveGrid grid) : grid_(std::move(grid)), data_(3 * grid_.size()) {}

  const WaveGrid& grid() const noexcept { return grid_; }
  std::size_t modes() const noexcept { return grid_.size(); }

  std::span<Complex> component(int c) noexcept { return {data_.data() + c * modes(), modes()}; }
  std::span<const Complex> component(int c) const noexcept { return {data_.data() + c * modes(), modes()}; }
  std::span<Complex> data() noexcept { return data_; }
  std::span<const Complex> data() const noexcept { return data_; }

  CVec3 at(std::size_t mode) const noexcept {
    const auto m = modes();
    return {data_[mode], data_[m + mode], data_[2 * m + mode]};
  }
  void set(std::size_t mode, const CVec3& c) noexcept {
    const auto m = modes();
    data_[mode] = c[0];
    data_[m + mode] = c[1];
    data_[2 * m + mode] = c[2];
  }
  /// Sets c_k and its conjugate partner c_{-k} = conj(c_k).
  void set_pair(std::array<int, 3> k, const CVec3& c) {
    const auto mode = grid_.mode_of(k);
    set(mode, c);
    set(grid_.conjugate(mode), {std::conj(c[0]), std::conj(c[1]), std::conj(c[2])});
  }

  SpectralVectorField& operator+=(const SpectralVectorField& o) {
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  SpectralVectorField& operator-=(const SpectralVectorField& o) {
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  SpectralVectorField& operator*=(double s) {
    for (auto& c : data_) c *= s;
    return *this;
  }
  friend SpectralVectorField operator+(SpectralVectorField a, const SpectralVectorField& b) { return a += b; }
  friend SpectralVectorField operator-(SpectralVectorField a, const SpectralVectorField& b) { return a -= b; }
  friend SpectralVectorField operator*(double s, SpectralVectorField a) { return a *= s; }

  bool all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(),
                       [](const Complex& c) { return std::isfinite(c.real()) && std::isfinite(c.imag()); });
  }

 private:
  WaveGrid grid_;
  std::vector<Complex> data_;
};

/// Collocation values of a 3-component real field, component-major.
class RealVectorField {
 public:
  explicit RealVectorField(WaveGrid grid) : grid_(std::move(grid)), data_(3 * grid_.size()) {}

  const WaveGrid& grid() const noexcept { return grid_; }
  std::size_t points() const noexcept { return grid_.size(); }

  std::span<double> component(int c) noexcept { return {data_.data() + c * points(), points()}; }
  std::span<const double> component(int c) const noexcept { return {data_.data() + c * points(), points()}; }
  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  Vec3 at(std::size_t i) const noexcept {
    const auto p = points();
    return {data_[i], data_[p + i], data_[2 * p + i]};
  }
  void set(std::size_t i, const Vec3& v) noexcept {
    const auto p = points();
    data_[i] = v[0];
    data_[p + i] = v[1];
    data_[2 * p + i] = v[2];
  }

 private:
  WaveGrid grid_;
  std::vector<double> data_;
};

namespace detail {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

// One in-place n^3 complex transform pair with an aligned work buffer. Plans
// use FFTW_ESTIMATE so repeated runs pick the same algorithm.
class Fft3 {
 public:
  explicit Fft3(int n) : size_(static_cast<std::size_t>(n) * n * n) {
    std::lock_guard lock(fftw_planner_mutex());
    buffer_ = fftw_alloc_complex(size_);
    forward_ = fftw_plan_dft_3d(n, n, n, buffer_, buffer_, FFTW_FORWARD, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_3d(n, n, n, buffer_, buffer_, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  Fft3(const Fft3&) = delete;
  Fft3& operator=(const Fft3&) = delete;
  ~Fft3() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
    fftw_free(buffer_);
  }

  std::span<Complex> buffer() noexcept { return {reinterpret_cast<Complex*>(buffer_), size_}; }
  void forward() noexcept { fftw_execute(forward_); }
  void backward() noexcept { fftw_execute(backward_); }

 private:
  std::size_t size_;
  fftw_complex* buffer_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

inline Fft3& fft_for(int n) {
  thread_local std::map<int, std::unique_ptr<Fft3>> plans;
  auto& slot = plans[n];
  if (!slot) slot = std::make_unique<Fft3>(n);
  return *slot;
}

// Synthesizes two Hermitian fields with one complex transform per component:
// the inverse of (a + i b) is a(x) + i b(x) when both are Hermitian.
inline void inverse_pair(const SpectralVectorField& a, const SpectralVectorField& b, RealVectorField& ra,
                         RealVectorField& rb) {
  auto& fft = fft_for(a.grid().n());
  auto buf = fft.buffer();
  const Complex i_unit(0.0, 1.0);
  for (int c = 0; c < 3; ++c) {
    const auto ac = a.component(c);
    const auto bc = b.component(c);
    for (std::size_t m = 0; m < buf.size(); ++m) buf[m] = ac[m] + i_unit * bc[m];
    fft.backward();
    auto rac = ra.component(c);
    auto rbc = rb.component(c);
    for (std::size_t m = 0; m < buf.size(); ++m) {
      rac[m] = buf[m].real();
      rbc[m] = buf[m].imag();
    }
  }
}

inline void inverse_unchecked(const SpectralVectorField& v, RealVectorField& out) {
  auto& fft = fft_for(v.grid().n());
  auto buf = fft.buffer();
  for (int c = 0; c < 3; ++c) {
    std::copy(v.component(c).begin(), v.component(c).end(), buf.begin());
    fft.backward();
    auto oc = out.component(c);
    for (std::size_t m = 0; m < buf.size(); ++m) oc[m] = buf[m].real();
  }
}

// Forward transform of real data; components 0 and 1 share one complex
// transform and are split using Hermitian symmetry of each.
inline void forward_into(const RealVectorField& f, SpectralVectorField& out) {
  const auto& grid = f.grid();
  auto& fft = fft_for(grid.n());
  auto buf = fft.buffer();
  const double scale = 1.0 / static_cast<double>(buf.size());
  const auto f0 = f.component(0);
  const auto f1 = f.component(1);
  for (std::size_t m = 0; m < buf.size(); ++m) buf[m] = Complex(f0[m], f1[m]);
  fft.forward();
  auto o0 = out.component(0);
  auto o1 = out.component(1);
  for (std::size_t m = 0; m < buf.size(); ++m) {
    const Complex z = buf[m];
    const Complex zc = std::conj(buf[grid.conjugate(m)]);
    o0[m] = 0.5 * scale * (z + zc);
    o1[m] = Complex(0.0, -0.5) * scale * (z - zc);
  }
  const auto f2 = f.component(2);
  for (std::size_t m = 0; m < buf.size(); ++m) buf[m] = Complex(f2[m], 0.0);
  fft.forward();
  auto o2 = out.component(2);
  for (std::size_t m = 0; m < buf.size(); ++m) o2[m] = scale * buf[m];
}

}  // namespace detail

/// Largest |c_{-k} - conj(c_k)| over modes and components.
inline double hermitian_deviation(const SpectralVectorField& v) {
  const auto& grid = v.grid();
  double worst = 0.0;
  for (int c = 0; c < 3; ++c) {
    const auto vc = v.component(c);
    for (std::size_t m = 0; m < vc.size(); ++m) {
      worst = std::max(worst, std::abs(vc[grid.conjugate(m)] - std::conj(vc[m])));
    }
  }
  return worst;
}

inline double max_coefficient(const SpectralVectorField& v) {
  double worst = 0.0;
  for (const auto& c : v.data()) worst = std::max(worst, std::abs(c));
  return worst;
}

/// Throws SymmetryViolation when the deviation exceeds kSymmetryTolerance,
/// measured relative to the largest coefficient once that exceeds 1.
inline void require_hermitian(const SpectralVectorField& v) {
  const double dev = hermitian_deviation(v);
  if (dev > kSymmetryTolerance * std::max(1.0, max_coefficient(v))) throw SymmetryViolation(dev);
}

/// Replaces each coefficient by the average of c_k and conj(c_{-k}).
inline void make_hermitian(SpectralVectorField& v) {
  const auto& grid = v.grid();
  for (int c = 0; c < 3; ++c) {
    auto vc = v.component(c);
    for (std::size_t m = 0; m < vc.size(); ++m) {
      const std::size_t p = grid.conjugate(m);
      if (p < m) continue;
      const Complex avg = 0.5 * (vc[m] + std::conj(vc[p]));
      vc[m] = avg;
      vc[p] = std::conj(avg);
    }
  }
}

inline SpectralVectorField forward_transform(const RealVectorField& f) {
  SpectralVectorField out(f.grid());
  detail::forward_into(f, out);
  return out;
}

inline RealVectorField inverse_transform(const SpectralVectorField& v) {
  require_hermitian(v);
  RealVectorField out(v.grid());
  detail::inverse_unchecked(v, out);
  return out;
}

inline void require_mean_free(const SpectralVectorField& v) {
  const CVec3 c0 = v.at(0);
  const double mag = std::sqrt(std::norm(c0[0]) + std::norm(c0[1]) + std::norm(c0[2]));
  if (mag > kMeanFreeTolerance) throw MeanFreeViolation(mag);
}

inline void remove_mean(SpectralVectorField& v) noexcept { v.set(0, {}); }

/// sum_k conj(v_k) . u_k, real for Hermitian inputs.
inline double inner_product(const SpectralVectorField& u, const SpectralVectorField& v) noexcept {
  double acc = 0.0;
  const auto ud = u.data();
  const auto vd = v.data();
  for (std::size_t i = 0; i < ud.size(); ++i) acc += ud[i].real() * vd[i].real() + ud[i].imag() * vd[i].imag();
  return acc;
}

/// Plain coefficient norm (sum_k |c_k|^2)^(1/2), including k = 0.
inline double l2_norm(const SpectralVectorField& v) noexcept { return std::sqrt(inner_product(v, v)); }

/// (sum_{k != 0} |k|^(2s) |c_k|^2)^(1/2). Rejects fields with a mean.
inline double sobolev_norm(const SpectralVectorField& v, double s) {
  require_mean_free(v);
  const auto& grid = v.grid();
  double acc = 0.0;
  for (std::size_t m = 1; m < v.modes(); ++m) {
    const CVec3 c = v.at(m);
    const double amp = std::norm(c[0]) + std::norm(c[1]) + std::norm(c[2]);
    if (amp == 0.0) continue;
    const double ksq = grid.k_squared(m);
    const double weight = s == 0.0 ? 1.0 : (s == 1.0 ? ksq : std::pow(ksq, s));
    acc += weight * amp;
  }
  return std::sqrt(acc);
}

inline void dealias_in_place(SpectralVectorField& v) noexcept {
  const auto& grid = v.grid();
  for (int c = 0; c < 3; ++c) {
    auto vc = v.component(c);
    for (std::size_t m = 0; m < vc.size(); ++m) {
      if (!grid.in_mask(m)) vc[m] = 0.0;
    }
  }
}

inline SpectralVectorField dealias(SpectralVectorField v) {
  dealias_in_place(v);
  return v;
}

/// max_k |k . c_k| using the derivative wavevector.
inline double divergence_residual(const SpectralVectorField& v) noexcept {
  const auto& grid = v.grid();
  double worst = 0.0;
  for (std::size_t m = 0; m < v.modes(); ++m) {
    const Vec3 k = grid.derivative_wavevector(m);
    const CVec3 c = v.at(m);
    worst = std::max(worst, std::abs(k[0] * c[0] + k[1] * c[1] + k[2] * c[2]));
  }
  return worst;
}

}  // namespace radm
