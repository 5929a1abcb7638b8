#ifndef FRACBURGERS_SPECTRAL_HPP
#define FRACBURGERS_SPECTRAL_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include "errors.hpp"
#include "fft.hpp"

namespace fburg {

using cplx = std::complex<double>;
inline constexpr double kPi = std::numbers::pi;

// Smallest n >= lo whose only prime factors are 2, 3, 5, 7.
inline int next_smooth(int lo) {
  for (int n = std::max(lo, 1);; ++n) {
    int m = n;
    for (int p : {2, 3, 5, 7})
      while (m % p == 0) m /= p;
    if (m == 1) return n;
  }
}

struct SpectralGrid {
  int n_modes = 0;
  double period = 1.0;
  int n_samples = 0;

  // n_samples = 0 picks the smallest FFT-friendly size above 3N.
  static SpectralGrid make(int n_modes, double period, int n_samples = 0) {
    SpectralGrid g{n_modes, period,
                   n_samples > 0 ? n_samples : next_smooth(3 * n_modes + 1)};
    g.validate();
    return g;
  }

  void validate() const {
    require(n_modes >= 1, "n_modes must be positive");
    require(period > 0 && std::isfinite(period), "period must be positive");
    // 3N points alias mode 2N onto -N, so one more point is needed.
    require(n_samples >= 3 * n_modes + 1, "n_samples must exceed 3*n_modes");
  }

  double dx() const { return period / n_samples; }
  double wavenumber(int k) const { return 2.0 * kPi * k / period; }
  bool operator==(const SpectralGrid&) const = default;
};

// Coefficients u(k) of exp(2 pi i k x / period), k in [-N, N], stored at k + N.
class SpectralField {
 public:
  SpectralField() = default;
  explicit SpectralField(const SpectralGrid& g)
      : grid_(g), c_(2 * static_cast<std::size_t>(g.n_modes) + 1) {}

  static SpectralField from_coeffs(const SpectralGrid& g, std::vector<cplx> c) {
    if (c.size() != 2 * static_cast<std::size_t>(g.n_modes) + 1)
      throw DimensionError("coefficient array must have 2N+1 entries");
    SpectralField f(g);
    f.c_ = std::move(c);
    f.symmetrize();
    return f;
  }

  const SpectralGrid& grid() const { return grid_; }
  int n_modes() const { return grid_.n_modes; }
  cplx operator[](int k) const { return c_[k + grid_.n_modes]; }
  std::span<const cplx> coeffs() const { return c_; }

  // Sets u(k) and u(-k) = conj(u(k)).
  void set_mode(int k, cplx v) {
    require(k != 0, "mean mode is fixed at zero");
    require(std::abs(k) <= grid_.n_modes, "mode out of range");
    if (k < 0) {
      k = -k;
      v = std::conj(v);
    }
    c_[grid_.n_modes + k] = v;
    c_[grid_.n_modes - k] = std::conj(v);
  }

  // Raw storage; callers that write here must call symmetrize() afterwards.
  std::vector<cplx>& raw() { return c_; }

  // Rebuilds the negative half from the non-negative half and zeroes the mean.
  void symmetrize() {
    const int n = grid_.n_modes;
    c_[n] = 0.0;
    for (int k = 1; k <= n; ++k) c_[n - k] = std::conj(c_[n + k]);
  }

  bool invariants_hold(double tol = 0.0) const {
    const int n = grid_.n_modes;
    if (std::abs(c_[n]) > tol) return false;
    for (int k = 1; k <= n; ++k)
      if (std::abs(c_[n - k] - std::conj(c_[n + k])) > tol) return false;
    return true;
  }

  bool is_finite() const {
    for (const auto& z : c_)
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    return true;
  }

  SpectralField& operator+=(const SpectralField& o) {
    check_same(o);
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
    return *this;
  }
  SpectralField& operator-=(const SpectralField& o) {
    check_same(o);
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
    return *this;
  }
  SpectralField& operator*=(double s) {
    for (auto& z : c_) z *= s;
    return *this;
  }
  friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
  friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
  friend SpectralField operator*(double s, SpectralField a) { return a *= s; }

 private:
  void check_same(const SpectralField& o) const {
    if (o.grid_.n_modes != grid_.n_modes)
      throw DimensionError("fields live on different grids");
  }

  SpectralGrid grid_{};
  std::vector<cplx> c_;
};

// Samples on m equispaced points of [0, period); m defaults to the grid's
// collocation size and must be at least 2N+1.
inline std::vector<double> synthesize(const SpectralField& f, int m = 0) {
  const int n = f.n_modes();
  if (m <= 0) m = f.grid().n_samples;
  if (m < 2 * n + 1) throw DimensionError("synthesis grid too coarse");
  std::vector<cplx> half(m / 2 + 1, cplx{});
  for (int k = 1; k <= n; ++k) half[k] = f[k];
  std::vector<double> out(m);
  fft::inverse(half, out);
  return out;
}

// Truncating analysis of m >= 2N+1 samples; the mean is discarded.
inline SpectralField analyze_any(std::span<const double> samples,
                                 const SpectralGrid& g) {
  const int m = static_cast<int>(samples.size());
  if (m < 2 * g.n_modes + 1) throw DimensionError("too few samples for grid");
  std::vector<cplx> half(m / 2 + 1);
  fft::forward(samples, half);
  SpectralField f(g);
  auto& c = f.raw();
  for (int k = 1; k <= g.n_modes; ++k) c[g.n_modes + k] = half[k] / double(m);
  f.symmetrize();
  return f;
}

inline SpectralField analyze(std::span<const double> samples,
                             const SpectralGrid& g) {
  if (samples.size() != static_cast<std::size_t>(g.n_samples))
    throw DimensionError("sample count does not match grid.n_samples");
  return analyze_any(samples, g);
}

inline SpectralField derivative(const SpectralField& f, int order = 1) {
  require(order >= 0, "derivative order must be non-negative");
  SpectralField out(f.grid());
  auto& c = out.raw();
  const int n = f.n_modes();
  for (int k = 1; k <= n; ++k) {
    cplx m = std::pow(cplx(0.0, f.grid().wavenumber(k)), order);
    c[n + k] = m * f[k];
  }
  out.symmetrize();
  return out;
}

inline double fractional_symbol(const SpectralGrid& g, int k, double alpha) {
  return std::pow(std::abs(g.wavenumber(k)), 2.0 * alpha);
}

inline SpectralField fractional_laplacian(const SpectralField& f, double alpha) {
  require(alpha > 0.0 && alpha <= 1.0, "alpha must lie in (0, 1]");
  SpectralField out(f.grid());
  auto& c = out.raw();
  const int n = f.n_modes();
  for (int k = 1; k <= n; ++k)
    c[n + k] = fractional_symbol(f.grid(), k, alpha) * f[k];
  out.symmetrize();
  return out;
}

// Projection of u u_x, computed as (u^2)_x / 2 on the dealiased grid.
inline SpectralField nonlinear_term(const SpectralField& f) {
  const auto& g = f.grid();
  auto u = synthesize(f);
  for (auto& v : u) v *= v;
  std::vector<cplx> half(u.size() / 2 + 1);
  fft::forward(u, half);
  SpectralField out(g);
  auto& c = out.raw();
  const int n = g.n_modes;
  const double inv_m = 1.0 / g.n_samples;
  for (int k = 1; k <= n; ++k)
    c[n + k] = cplx(0.0, 0.5 * g.wavenumber(k)) * half[k] * inv_m;
  out.symmetrize();
  return out;
}

inline SpectralField project(const SpectralField& f, int m) {
  require(m >= 0, "projection order must be non-negative");
  require(m <= f.n_modes(), "projection order exceeds n_modes");
  SpectralField out = f;
  for (int k = m + 1; k <= f.n_modes(); ++k) out.set_mode(k, 0.0);
  return out;
}

// Copies the field onto another grid, truncating or zero-padding modes.
inline SpectralField regrid(const SpectralField& f, const SpectralGrid& g) {
  SpectralField out(g);
  const int n = std::min(f.n_modes(), g.n_modes);
  for (int k = 1; k <= n; ++k) out.raw()[g.n_modes + k] = f[k];
  out.symmetrize();
  return out;
}

// Pointwise evaluation by direct summation of the series.
inline double evaluate(const SpectralField& f, double x, int order = 0) {
  const auto& g = f.grid();
  double s = 0.0;
  for (int k = 1; k <= f.n_modes(); ++k) {
    const double w = g.wavenumber(k);
    cplx e = std::polar(1.0, w * x) * f[k];
    if (order) e *= std::pow(cplx(0.0, w), order);
    s += 2.0 * e.real();
  }
  return s;
}

// Real part of sum over k of conj(a(k)) b(k), i.e. (1/period) * integral of a b.
inline double inner(const SpectralField& a, const SpectralField& b) {
  double s = 0.0;
  for (int k = 1; k <= a.n_modes(); ++k) s += 2.0 * (std::conj(a[k]) * b[k]).real();
  return s;
}

}  // namespace fburg

#endif
