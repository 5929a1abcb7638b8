#ifndef FRACBURGERS_DIAGNOSTICS_HPP
#define FRACBURGERS_DIAGNOSTICS_HPP

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spectral.hpp"

namespace fburg {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct DiagnosticsRecord {
  double t = 0.0;
  double l2 = 0.0;
  std::map<double, double> hs;
  double linf = 0.0;
  double w1inf = 0.0;
  std::map<double, double> lp;
  double analyticity_delta = 0.0;
  double y_quartic = kNaN;
  double modulus_margin = kNaN;
  std::optional<bool> envelope_ok;
  // Experiment-specific columns, written after the fixed ones.
  std::map<std::string, double> extra;
};

struct DiagnosticsConfig {
  std::vector<double> hs_orders{1.0};
  std::vector<double> lp_orders;
  bool y_quartic = true;
};

inline double sobolev_norm(const SpectralField& f, double s) {
  require(s >= 0.0, "sobolev order must be non-negative");
  double sum = 0.0;
  for (int k = 1; k <= f.n_modes(); ++k) {
    const double w = s == 0.0 ? 1.0 : std::pow(f.grid().wavenumber(k), 2.0 * s);
    sum += 2.0 * w * std::norm(f[k]);
  }
  return std::sqrt(sum);
}

struct WeightFunction {
  std::string name;
  std::function<double(double)> phi;

  double operator()(double x) const { return phi(x); }

  static WeightFunction unit() { return {"unit", [](double) { return 1.0; }}; }
  static WeightFunction log_weight() {
    return {"log", [](double x) { return 1.0 + std::log1p(x); }};
  }
  static WeightFunction iterated_log() {
    return {"iterated_log",
            [](double x) { return 1.0 + std::log1p(std::log1p(x)); }};
  }

  // Checks phi(1) >= 1, monotonicity and phi(2x) <= 2^c phi(x) on a
  // geometric table of points up to x_max.
  void validate(double c, double x_max = 1e8) const {
    if (phi(1.0) < 1.0) throw ParameterError(name + ": phi(1) < 1");
    double prev = phi(0.0);
    if (prev < 1.0) throw ParameterError(name + ": phi(0) < 1");
    for (double x = 1e-3; x <= x_max; x *= 1.25) {
      const double v = phi(x);
      if (v < prev) throw ParameterError(name + ": not monotone");
      if (phi(2.0 * x) > std::pow(2.0, c) * v)
        throw ParameterError(name + ": doubling bound violated");
      prev = v;
    }
  }
};

// Sobolev sum with the extra factor phi(|k|)^2 at integer wavenumber |k|.
inline double weighted_norm(const SpectralField& f, double s,
                            const WeightFunction& w) {
  require(s >= 0.0, "sobolev order must be non-negative");
  double sum = 0.0;
  for (int k = 1; k <= f.n_modes(); ++k) {
    const double m = s == 0.0 ? 1.0 : std::pow(f.grid().wavenumber(k), 2.0 * s);
    const double p = w(static_cast<double>(k));
    sum += 2.0 * m * p * p * std::norm(f[k]);
  }
  return std::sqrt(sum);
}

struct SupNorms {
  double linf = 0.0;
  double w1inf = 0.0;
};

inline double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

inline SupNorms sup_norms(const SpectralField& f, int oversample = 4) {
  const int m = oversample * f.grid().n_samples;
  return {max_abs(synthesize(f, m)), max_abs(synthesize(derivative(f), m))};
}

// (integral over one period of |u|^p)^(1/p), uniform quadrature on the
// collocation grid.
inline double lp_norm(const SpectralField& f, double p) {
  require(p > 1.0 && std::isfinite(p), "p must lie in (1, inf)");
  const auto u = synthesize(f);
  double sum = 0.0;
  for (double v : u) sum += std::pow(std::abs(v), p);
  return std::pow(sum * f.grid().dx(), 1.0 / p);
}

struct YQuartic {
  double y = 0.0;
  double z = 0.0;
};

// Sums of |k|^4 and |k|^5 times |u(k)|^2 e^{|k| t} over integer k.
inline YQuartic y_quartic(const SpectralField& f, double t) {
  require(t >= 0.0, "t must be non-negative");
  if (f.n_modes() * t > 600.0) throw RangeError("y_quartic: N*t exceeds 600");
  YQuartic r;
  for (int k = 1; k <= f.n_modes(); ++k) {
    const double w = 2.0 * std::norm(f[k]) * std::exp(k * t);
    const double k4 = std::pow(double(k), 4);
    r.y += k4 * w;
    r.z += k4 * k * w;
  }
  return r;
}

// Exponential decay rate of |u(k)|: least-squares slope of log|u(k)| over the
// upper half of the modes above a floor of 1e-13 relative to the peak. With
// fewer than 8 such modes the spectrum has dropped through the floor within a
// few modes, and the rate needed to do so is returned instead.
inline double analyticity_radius(const SpectralField& f) {
  const int n = f.n_modes();
  double peak = 0.0;
  int k_peak = 0;
  for (int k = 1; k <= n; ++k) {
    const double a = std::abs(f[k]);
    if (a > peak) {
      peak = a;
      k_peak = k;
    }
  }
  if (peak == 0.0) return 0.0;
  const double floor = 1e-13 * peak;
  std::vector<int> ks;
  for (int k = 1; k <= n; ++k)
    if (std::abs(f[k]) > floor) ks.push_back(k);
  const int k_lo = ks.front(), k_hi = ks.back();
  if (ks.size() < 8) {
    if (k_hi >= n) return 0.0;
    return std::log(peak / floor) / double(k_hi + 1 - k_peak);
  }
  const double mid = 0.5 * (k_lo + k_hi);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (int k : ks) {
    if (k < mid) continue;
    const double y = std::log(std::abs(f[k]));
    sx += k;
    sy += y;
    sxx += double(k) * k;
    sxy += k * y;
    ++cnt;
  }
  const double den = cnt * sxx - sx * sx;
  if (cnt < 2 || den <= 0.0) return 0.0;
  const double slope = (cnt * sxy - sx * sy) / den;
  return std::max(0.0, -slope);
}

inline DiagnosticsRecord make_record(const SpectralField& f, double t,
                                     const DiagnosticsConfig& cfg) {
  DiagnosticsRecord r;
  r.t = t;
  r.l2 = sobolev_norm(f, 0.0);
  for (double s : cfg.hs_orders) r.hs[s] = sobolev_norm(f, s);
  const auto sn = sup_norms(f);
  r.linf = sn.linf;
  r.w1inf = sn.w1inf;
  for (double p : cfg.lp_orders) r.lp[p] = lp_norm(f, p);
  r.analyticity_delta = analyticity_radius(f);
  if (cfg.y_quartic && f.n_modes() * t <= 600.0) r.y_quartic = y_quartic(f, t).y;
  return r;
}

}  // namespace fburg

#endif
