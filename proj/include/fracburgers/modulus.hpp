#ifndef FRACBURGERS_MODULUS_HPP
#define FRACBURGERS_MODULUS_HPP

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "diagnostics.hpp"
#include "spectral.hpp"

namespace fburg {

enum class Side { left, right };

// omega(xi) = xi / (1 + K sqrt(xi)) up to xi0 = (K / 4 pi)^2, cK log(xi) above.
struct ModulusOfContinuity {
  double K = 0.0;
  double xi0 = 0.0;
  double cK = 0.0;

  static ModulusOfContinuity make(double K) {
    require(K > 4.0 * kPi && std::isfinite(K), "K must exceed 4*pi");
    ModulusOfContinuity m;
    m.K = K;
    m.xi0 = (K / (4.0 * kPi)) * (K / (4.0 * kPi));
    m.cK = m.left_value(m.xi0) / std::log(m.xi0);
    return m;
  }

  double left_value(double xi) const { return xi / (1.0 + K * std::sqrt(xi)); }

  double operator()(double xi) const {
    require(xi >= 0.0, "omega: negative argument");
    return xi <= xi0 ? left_value(xi) : cK * std::log(xi);
  }

  double deriv(double xi, Side side = Side::right) const {
    require(xi >= 0.0, "omega: negative argument");
    if (xi < xi0 || (xi == xi0 && side == Side::left)) {
      const double q = 1.0 + K * std::sqrt(xi);
      return (2.0 + K * std::sqrt(xi)) / (2.0 * q * q);
    }
    return cK / xi;
  }

  // Branch formula; the left branch is used at xi0.
  double second_derivative(double xi) const {
    require(xi > 0.0, "omega'': argument must be positive");
    if (xi <= xi0) {
      const double s = std::sqrt(xi);
      const double q = 1.0 + K * s;
      return -K * (3.0 / s + K) / (4.0 * q * q * q);
    }
    return -cK / (xi * xi);
  }

  bool junction_concave() const { return deriv(xi0, Side::left) >= deriv(xi0, Side::right); }

  // log of the inverse function, by bisection in log(xi).
  double log_inverse(double y) const {
    require(y > 0.0, "omega inverse: argument must be positive");
    double lo = std::log(y);  // omega(x) <= x
    double hi = std::max(std::log(xi0), y / cK) + 1.0;
    for (int it = 0; it < 400 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
      const double mid = 0.5 * (lo + hi);
      if (eval_log(mid) < y) lo = mid;
      else hi = mid;
    }
    return 0.5 * (lo + hi);
  }

  double inverse(double y) const { return y == 0.0 ? 0.0 : std::exp(log_inverse(y)); }

  // omega(exp(s)) without forming exp(s) on the logarithmic branch.
  double eval_log(double s) const {
    if (s >= std::log(xi0)) return cK * s;
    return left_value(std::exp(s));
  }
};

inline double omega_eval(const ModulusOfContinuity& m, double xi) { return m(xi); }
inline double omega_deriv(const ModulusOfContinuity& m, double xi, Side side) {
  return m.deriv(xi, side);
}

// omega(B xi), with B stored as log B since it is routinely astronomically large.
struct ScaledModulus {
  ModulusOfContinuity base;
  double log_B = 0.0;

  double B() const { return std::exp(log_B); }
  double operator()(double xi) const {
    if (xi <= 0.0) return 0.0;
    return base.eval_log(log_B + std::log(xi));
  }
  // B * omega'(0+)
  double slope_at_zero() const { return B(); }
};

struct DissipationIntegrals {
  double I1 = 0.0;
  double I2 = 0.0;
  double err1 = 0.0;
  double err2 = 0.0;
};

namespace detail {

// Adaptive bisection over single 31-point Gauss-Kronrod panels. Boost 1.74
// reports the recursive error estimate in reference-interval units, so the
// panel estimate is rescaled here and the recursion is done by hand.
template <class F>
double gk_panel(const F& f, double a, double b, double tol, int depth, double& err) {
  double e = 0.0;
  const double v =
      boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 0, 0.0, &e);
  e *= 0.5 * (b - a);
  if (depth == 0 || e <= std::max(tol, 1e-13 * std::abs(v))) {
    err += e;
    return v;
  }
  const double mid = 0.5 * (a + b);
  return gk_panel(f, a, mid, 0.5 * tol, depth - 1, err) +
         gk_panel(f, mid, b, 0.5 * tol, depth - 1, err);
}

template <class F>
double gk(const F& f, double a, double b, double& err) {
  return gk_panel(f, a, b, 1e-13, 18, err);
}

// Integrates over [a, b] split at the given interior points.
template <class F>
double gk_split(const F& f, double a, double b, std::vector<double> cuts, double& err) {
  cuts.push_back(a);
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double lo = std::max(a, cuts[i]), hi = std::min(b, cuts[i + 1]);
    if (hi > lo) s += gk(f, lo, hi, err);
  }
  return s;
}

}  // namespace detail

// I1 and I2 for a concave modulus given as a callable; kinks lists the
// arguments where omega is not smooth. The integrands are non-positive, so
// every truncation below yields an upper bound.
template <class Omega>
DissipationIntegrals dissipation_integrals(const Omega& w, double xi,
                                           const std::vector<double>& kinks = {}) {
  require(xi > 0.0 && std::isfinite(xi), "xi must be positive");
  DissipationIntegrals r;
  const double wxi = w(xi);

  // I1 on (0, xi/2]. omega(xi - 2 eta) behaves like a square root near
  // eta = xi/2 for the moduli used here, so the upper half is integrated in v
  // with eta = xi/2 - v^2.
  auto f1 = [&](double eta) {
    return (w(xi + 2.0 * eta) + w(xi - 2.0 * eta) - 2.0 * wxi) / (eta * eta);
  };
  const double eta_s = 1e-4 * xi;
  const double half = 0.5 * xi;
  const double quarter = 0.25 * xi;
  auto to_v1 = [&](double eta) { return std::sqrt(half - eta); };
  auto g1 = [&](double v) { return 2.0 * v * f1(half - v * v); };
  std::vector<double> lo1, hi1;
  double kink_dist = std::numeric_limits<double>::infinity();
  for (double k : kinks) {
    const double e = 0.5 * std::abs(k - xi);
    if (e > eta_s && e < quarter) lo1.push_back(e);
    if (e >= quarter && e < half) hi1.push_back(to_v1(e));
    kink_dist = std::min(kink_dist, e);
  }
  for (double e = 0.25 * quarter; e > eta_s; e *= 0.25) lo1.push_back(e);
  double head = 0.0;
  // Near eta = 0 the second difference cancels; use its limit 4 omega''(xi)
  // when omega is smooth around xi, otherwise drop the (negative) piece.
  if (kink_dist > 2.0 * eta_s) {
    if constexpr (requires { w.second_derivative(xi); }) {
      head = 4.0 * w.second_derivative(xi) * eta_s;
    }
  }
  r.I1 = (head + detail::gk_split(f1, eta_s, quarter, lo1, r.err1) +
          detail::gk_split(g1, 0.0, to_v1(quarter), hi1, r.err1)) /
         kPi;

  // I2 on [xi/2, inf). With tau = 1/eta the integrand becomes the bounded
  // h(tau) = omega(2/tau + xi) - omega(2/tau - xi) - 2 omega(xi); on
  // eta in [xi/2, xi] tau = 2/xi - v^2 removes the square-root endpoint.
  auto h2 = [&](double tau) {
    if (tau <= 0.0) return -2.0 * wxi;
    const double eta = 1.0 / tau;
    return w(2.0 * eta + xi) - w(std::max(0.0, 2.0 * eta - xi)) - 2.0 * wxi;
  };
  const double tau_max = 2.0 / xi;
  const double tau_mid = 1.0 / xi;
  auto to_v2 = [&](double tau) { return std::sqrt(std::max(0.0, tau_max - tau)); };
  auto g2 = [&](double v) { return 2.0 * v * h2(tau_max - v * v); };
  std::vector<double> lo2, hi2;
  for (double k : kinks) {
    for (double e : {0.5 * (k - xi), 0.5 * (k + xi)}) {
      if (e <= half) continue;
      if (e > xi) lo2.push_back(1.0 / e);
      else hi2.push_back(to_v2(1.0 / e));
    }
  }
  for (double e = 4.0 * xi; e < 1e30 * xi; e *= 4.0) lo2.push_back(1.0 / e);
  r.I2 = (detail::gk_split(h2, 0.0, tau_mid, lo2, r.err2) +
          detail::gk_split(g2, 0.0, to_v2(tau_mid), hi2, r.err2)) /
         kPi;
  r.err1 /= kPi;
  r.err2 /= kPi;
  if (r.err1 > 1e-9 || r.err2 > 1e-9)
    throw PrecisionError("dissipation integrals: quadrature error " +
                         std::to_string(std::max(r.err1, r.err2)) + " above 1e-9 at xi " +
                         std::to_string(xi));
  return r;
}

inline DissipationIntegrals dissipation_integrals(const ModulusOfContinuity& m, double xi) {
  return dissipation_integrals(m, xi, std::vector<double>{m.xi0});
}

// 2 omega omega' + I1 on (0, xi0] and 2 omega omega' + I2 on [xi0, ...); the
// larger (left) derivative is used at xi0.
inline double inequality_b(const ModulusOfContinuity& m, double xi) {
  return 2.0 * m(xi) * m.deriv(xi, Side::left) + dissipation_integrals(m, xi).I1;
}
inline double inequality_c(const ModulusOfContinuity& m, double xi) {
  return 2.0 * m(xi) * m.deriv(xi, Side::left) + dissipation_integrals(m, xi).I2;
}

inline std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i)
    v[i] = n == 1 ? hi : lo * std::pow(hi / lo, double(i) / (n - 1));
  v.back() = hi;
  return v;
}

struct InequalityScan {
  double max_b = -std::numeric_limits<double>::infinity();
  double max_c = -std::numeric_limits<double>::infinity();
  double max_err = 0.0;
};

inline InequalityScan scan_inequalities(const ModulusOfContinuity& m, int points) {
  InequalityScan s;
  for (double xi : log_grid(1e-6 * m.xi0, m.xi0, points)) {
    const auto d = dissipation_integrals(m, xi);
    s.max_b = std::max(s.max_b, 2.0 * m(xi) * m.deriv(xi, Side::left) + d.I1);
    s.max_err = std::max(s.max_err, d.err1);
  }
  for (double xi : log_grid(m.xi0, 1e6 * m.xi0, points)) {
    const auto d = dissipation_integrals(m, xi);
    s.max_c = std::max(s.max_c, 2.0 * m(xi) * m.deriv(xi, Side::left) + d.I2);
    s.max_err = std::max(s.max_err, d.err2);
  }
  return s;
}

struct CalibrationEntry {
  double K = 0.0;
  bool concave = false;
  double max_b = kNaN;
  double max_c = kNaN;
  bool pass = false;
};

struct Calibration {
  ModulusOfContinuity modulus;
  int grid_points = 0;
  std::vector<CalibrationEntry> log;
};

// Smallest K in 4 pi * {2, 4, 8, ...} passing junction concavity and both
// inequalities on log grids of grid_points points.
inline Calibration calibrate_K(int grid_points = 60) {
  Calibration cal;
  cal.grid_points = grid_points;
  for (double K = 8.0 * kPi; K <= std::ldexp(1.0, 30); K *= 2.0) {
    const auto m = ModulusOfContinuity::make(K);
    CalibrationEntry e;
    e.K = K;
    e.concave = m.junction_concave();
    if (e.concave) {
      const auto s = scan_inequalities(m, grid_points);
      e.max_b = s.max_b;
      e.max_c = s.max_c;
      e.pass = s.max_b <= s.max_err && s.max_c <= s.max_err;
    }
    cal.log.push_back(e);
    if (e.pass) {
      cal.modulus = m;
      return cal;
    }
  }
  throw CalibrationError("no K up to 2^30 satisfies the modulus inequalities");
}

// Sufficient scale: omega(B xi) >= G xi on [0, O/G] (concavity) and >= O beyond.
// The returned B is the larger of this and G exp(sup|u0| / cK).
inline double gradient_control_log_B(const ModulusOfContinuity& m, double linf,
                                     double w1inf) {
  return std::log(w1inf) + linf / m.cK;
}

inline ScaledModulus choose_B(const ModulusOfContinuity& m, const SpectralField& u0) {
  const int samples = 4 * u0.grid().n_samples;
  const auto u = synthesize(u0, samples);
  const double g = max_abs(synthesize(derivative(u0), samples));
  if (g == 0.0) throw ParameterError("choose_B: zero field");
  const auto [lo, hi] = std::minmax_element(u.begin(), u.end());
  const double osc = *hi - *lo;
  const double displayed = gradient_control_log_B(m, max_abs(u), g);
  const double sufficient = std::log(g / osc) + m.log_inverse(osc);
  return {m, std::max(displayed, sufficient)};
}

struct ModulusCheck {
  double margin = 0.0;
  double grid_tol = 0.0;
  double worst_lag = 0.0;
};

// min over sampled pairs of omega_B(|x - y|) - |u(x) - u(y)| on the 4x grid.
inline ModulusCheck check_field_modulus(const SpectralField& f, const ScaledModulus& w) {
  const int m = 4 * f.grid().n_samples;
  const double dx = f.grid().period / m;
  const auto u = synthesize(f, m);
  std::vector<int> lags;
  if (f.n_modes() <= 256) {
    for (int d = 1; d <= m / 2; ++d) lags.push_back(d);
  } else {
    for (int d = 1; d <= m / 2; d = std::max(d + 1, int(d * 1.05))) lags.push_back(d);
    if (lags.back() != m / 2) lags.push_back(m / 2);
  }
  ModulusCheck r;
  r.margin = std::numeric_limits<double>::infinity();
  for (int d : lags) {
    const double wd = w(d * dx);
    double worst = 0.0;
    for (int i = 0; i < m; ++i) {
      const int j = i + d < m ? i + d : i + d - m;
      worst = std::max(worst, std::abs(u[j] - u[i]));
    }
    if (wd - worst < r.margin) {
      r.margin = wd - worst;
      r.worst_lag = d * dx;
    }
  }
  r.grid_tol = 2.0 * max_abs(synthesize(derivative(f, 2), m)) * dx * dx;
  return r;
}

// t -> F(t) = 1 / integral_0^t G, G(s) = y / omega^{-1}(y), y = c s^{-1/p}.
class RoughSchedule {
 public:
  RoughSchedule(double p, double c_decay, ModulusOfContinuity m)
      : p_(p), c_(c_decay), m_(m) {
    require(p > 1.0 && std::isfinite(p), "p must lie in (1, inf)");
    require(c_decay > 0.0, "c_decay must be positive");
  }

  double log_G(double s) const {
    require(s > 0.0, "s must be positive");
    const double y = c_ * std::pow(s, -1.0 / p_);
    return std::log(y) - m_.log_inverse(y);
  }
  double G(double s) const { return s <= 0.0 ? 0.0 : std::exp(log_G(s)); }

  // log of the integral of G over (0, t], in dyadic pieces down to t 2^-200
  // and scaled by G(t) so that nothing underflows; the pieces must shrink to
  // nothing.
  double log_integral(double t) const {
    require(t > 0.0, "t must be positive");
    const double ref = log_G(t);
    auto g = [&](double s) { return s <= 0.0 ? 0.0 : std::exp(log_G(s) - ref); };
    double total = 0.0, err = 0.0, last = 0.0;
    double hi = t;
    for (int j = 0; j < 200; ++j) {
      const double lo = 0.5 * hi;
      last = detail::gk(g, lo, hi, err);
      total += last;
      hi = lo;
      if (last <= 1e-16 * total && j > 4) break;
    }
    if (!(total > 0.0) || !std::isfinite(total) || last > 1e-12 * total)
      throw ScheduleError("G does not appear integrable at 0");
    return ref + std::log(total);
  }

  double integral(double t) const { return std::exp(log_integral(t)); }
  double log_F(double t) const { return -log_integral(t); }
  double F(double t) const { return std::exp(log_F(t)); }
  double operator()(double t) const { return F(t); }

 private:
  double p_, c_;
  ModulusOfContinuity m_;
};

inline RoughSchedule rough_modulus_schedule(double p, double c_decay,
                                            const ModulusOfContinuity& m) {
  return RoughSchedule(p, c_decay, m);
}

}  // namespace fburg

#endif
