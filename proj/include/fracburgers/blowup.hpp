#ifndef FRACBURGERS_BLOWUP_HPP
#define FRACBURGERS_BLOWUP_HPP

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "diagnostics.hpp"
#include "integrator.hpp"
#include "spectral.hpp"

namespace fburg {

// phi = kappa x on [0, delta], H on [delta, L - a], (H / a)(L - x) on [L - a, L].
struct FrontEnvelope {
  double kappa = 1.0;
  double H = 1.0;
  double a = 1.0;
  double L = 4.0;

  double delta() const { return H / kappa; }

  void validate() const {
    require(kappa > 0 && H > 0 && a > 0 && L > 0, "envelope parameters must be positive");
    require(delta() <= 0.25 * L * (1 + 1e-12), "envelope needs delta <= L/4");
    require(a <= 0.25 * L * (1 + 1e-12), "envelope needs a <= L/4");
  }
};

inline double phi_eval(const FrontEnvelope& e, double x) {
  if (!(x >= 0.0 && x <= e.L)) throw ParameterError("phi_eval: x outside [0, L]");
  if (x <= e.delta()) return e.kappa * x;
  if (x <= e.L - e.a) return e.H;
  return e.H / e.a * (e.L - x);
}

// Odd 2L-periodic extension of phi.
inline double phi_odd(const FrontEnvelope& e, double x) {
  const double p = 2.0 * e.L;
  x = std::fmod(x, p);
  if (x < 0) x += p;
  if (x > e.L) return -phi_eval(e, std::max(0.0, p - x));
  return phi_eval(e, x);
}

namespace detail {

inline std::vector<double> bump_kernel(int m, double dx, double width) {
  std::vector<double> rho(m, 0.0);
  double sum = 0.0;
  for (int j = 0; j < m; ++j) {
    const double x = (j <= m / 2 ? j : j - m) * dx / width;
    if (std::abs(x) < 1.0) rho[j] = std::exp(-1.0 / (1.0 - x * x));
    sum += rho[j];
  }
  for (auto& r : rho) r /= sum;
  return rho;
}

// Samples of u on the points of [0, L] from an m-point synthesis of period 2L.
inline double min_gap(const std::vector<double>& u, const FrontEnvelope& e) {
  const int m = static_cast<int>(u.size());
  const double dx = 2.0 * e.L / m;
  double gap = std::numeric_limits<double>::infinity();
  for (int j = 0; j <= m / 2; ++j) {
    const double x = std::min(j * dx, e.L);
    gap = std::min(gap, u[j] - phi_eval(e, x));
  }
  return gap;
}

}  // namespace detail

// (1 + margin) * phi, extended oddly to period 2L, mollified by a compact bump
// of half-width `smoothing`, then truncated to n_modes.
inline SpectralField make_front_data(const FrontEnvelope& env, double margin,
                                     double smoothing, int n_modes) {
  env.validate();
  require(margin >= 0.0, "margin must be non-negative");
  require(smoothing > 0.0 && smoothing < 0.25 * std::min(env.delta(), env.a),
          "smoothing must lie in (0, min(delta, a)/4)");
  const auto grid = SpectralGrid::make(n_modes, 2.0 * env.L);
  const double p = grid.period;
  const int m = next_smooth(std::max(16 * (2 * n_modes + 1),
                                     int(std::ceil(32.0 * p / smoothing))));
  const double dx = p / m;
  std::vector<double> g(m);
  for (int j = 0; j < m; ++j) g[j] = (1.0 + margin) * phi_odd(env, j * dx);
  const auto rho = detail::bump_kernel(m, dx, smoothing);
  std::vector<cplx> gh(m / 2 + 1), rh(m / 2 + 1);
  fft::forward(g, gh);
  fft::forward(rho, rh);
  SpectralField f(grid);
  for (int k = 1; k <= n_modes; ++k)
    f.raw()[n_modes + k] = cplx(0.0, (gh[k] * rh[k]).imag() / m);
  f.symmetrize();

  const int mc = next_smooth(std::max(20002, 2 * grid.n_samples));
  const auto u = synthesize(f, mc);
  const double gap = detail::min_gap(u, env);
  // u and phi both vanish at 0 and L, where only rounding separates them.
  if (gap < -64.0 * std::numeric_limits<double>::epsilon() * max_abs(u))
    throw ConstructionError("mollified data falls below phi by " + std::to_string(-gap) +
                            "; increase margin");
  if (max_abs(u) > 2.0 * env.H)
    throw ConstructionError("mollified data exceeds 2H; reduce margin");
  return f;
}

namespace detail {

inline std::pair<double, double> eval_with_slope(const SpectralField& f, double x) {
  double u = 0.0, ux = 0.0;
  for (int k = 1; k <= f.n_modes(); ++k) {
    const double w = f.grid().wavenumber(k);
    const cplx e = std::polar(1.0, w * x) * f[k];
    u += 2.0 * e.real();
    ux -= 2.0 * w * e.imag();
  }
  return {u, ux};
}

}  // namespace detail

// Exact inviscid Burgers flow w_t = w w_x over time h, sampled on the
// collocation grid: w(y) = u0(x) with y = x - h u0(x).
inline std::vector<double> characteristics_step(const SpectralField& u0, double h) {
  require(h >= 0.0, "h must be non-negative");
  const auto& g = u0.grid();
  const auto sn = sup_norms(u0);
  if (h * sn.w1inf > 0.5) throw ParameterError("characteristics_step: h*|u0'| > 1/2");
  const int m = g.n_samples;
  std::vector<double> w(m);
  for (int j = 0; j < m; ++j) {
    const double y = j * g.dx();
    if (h == 0.0) {
      w[j] = evaluate(u0, y);
      continue;
    }
    double lo = y - h * sn.linf * (1 + 1e-12) - 1e-300, hi = y + h * sn.linf * (1 + 1e-12) + 1e-300;
    double x = y;
    bool done = false;
    for (int it = 0; it < 50; ++it) {
      const auto [u, ux] = detail::eval_with_slope(u0, x);
      const double F = x - h * u - y;
      if (std::abs(F) <= 4e-16 * (std::abs(y) + g.period) || hi - lo <= 1e-15 * g.period) {
        w[j] = u;
        done = true;
        break;
      }
      if (F > 0) hi = x;
      else lo = x;
      double xn = x - F / (1.0 - h * ux);
      if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
      x = xn;
    }
    if (!done) throw StepError("characteristics_step: Newton did not converge");
  }
  return w;
}

inline SpectralField fractional_heat_step(const SpectralField& f, double h, double alpha) {
  require(h >= 0.0, "h must be non-negative");
  require(alpha > 0.0 && alpha <= 1.0, "alpha must lie in (0, 1]");
  SpectralField out(f.grid());
  const int n = f.n_modes();
  for (int k = 1; k <= n; ++k)
    out.raw()[n + k] = std::exp(-fractional_symbol(f.grid(), k, alpha) * h) * f[k];
  out.symmetrize();
  return out;
}

struct SplittingError {
  double c0 = 0.0;
  double c1 = 0.0;
};

// Compares one Lie step (characteristics, then fractional heat) of size h with
// a fixed-step solver run of step <= reference_dt. With nonlinear = false both
// paths drop the transport term.
inline SplittingError splitting_error(const SpectralField& u0, double h, double alpha,
                                      double reference_dt, bool nonlinear = true) {
  require(h > 0.0 && reference_dt > 0.0, "h and reference_dt must be positive");
  const auto& g = u0.grid();
  SpectralField v = nonlinear ? analyze(characteristics_step(u0, h), g) : u0;
  v = fractional_heat_step(v, h, alpha);
  const long steps = std::max<long>(1, std::lround(std::ceil(h / reference_dt - 1e-9)));
  const double dt = h / steps;
  SpectralField u = u0;
  for (long i = 0; i < steps; ++i) u = step(u, dt, alpha, nonlinear);
  const auto d = u - v;
  const auto sn = sup_norms(d);
  return {sn.linf, sn.w1inf};
}

inline double monotone_quantity(double kappa, double H, double alpha) {
  return std::pow(H, 2 * alpha) * std::pow(kappa, 1 - 2 * alpha);
}

inline std::pair<double, double> envelope_rhs(double kappa, double H, double alpha,
                                              double c) {
  const double q = std::pow(kappa, 2 * alpha) * std::pow(H, -2 * alpha);
  return {kappa * kappa - c * kappa * q, -c * q * H};
}

inline std::pair<double, double> envelope_ode_step(double kappa, double H, double alpha,
                                                   double c, double dt) {
  require(kappa > 0 && H > 0, "kappa and H must be positive");
  require(alpha > 0 && alpha < 0.5, "alpha must lie in (0, 1/2)");
  const auto [k1, h1] = envelope_rhs(kappa, H, alpha, c);
  const auto pos = [](double v) { return std::max(v, 1e-300); };
  const auto [k2, h2] =
      envelope_rhs(pos(kappa + 0.5 * dt * k1), pos(H + 0.5 * dt * h1), alpha, c);
  const auto [k3, h3] =
      envelope_rhs(pos(kappa + 0.5 * dt * k2), pos(H + 0.5 * dt * h2), alpha, c);
  const auto [k4, h4] = envelope_rhs(pos(kappa + dt * k3), pos(H + dt * h3), alpha, c);
  const double kn = kappa + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
  const double hn = H + dt / 6 * (h1 + 2 * h2 + 2 * h3 + h4);
  if (!(kn > 0) || !(hn > 0) || !std::isfinite(kn) || !std::isfinite(hn))
    throw EnvelopeCollapseError("envelope ODE left the positive quadrant");
  return {kn, hn};
}

struct EnvelopeState {
  int n = 0;
  double kappa = 1.0;
  double H = 1.0;
  double a = 1.0;
  double h = 0.0;
  double alpha = 0.25;
  double c_alpha = 1.0;
  double c_n = 0.0;
  double L = 4.0;
  bool valid = true;
  std::string failure;
};

inline EnvelopeState envelope_recursion_step(const EnvelopeState& s, double sup_u0) {
  require(s.kappa * s.h <= 0.5, "recursion needs kappa*h <= 1/2");
  EnvelopeState r = s;
  const double damp =
      1.0 - s.c_alpha * std::pow(s.kappa, 2 * s.alpha) * std::pow(s.H, -2 * s.alpha) * s.h;
  const double h2 = s.c_n * s.h * s.h;
  r.n = s.n + 1;
  r.kappa = s.kappa * damp / (1.0 - s.kappa * s.h) - h2;
  r.H = s.H * damp - h2;
  r.a = s.a + s.h * sup_u0;
  if (!r.valid) return r;
  if (!(r.kappa > 0 && r.H > 0)) {
    r.valid = false;
    r.failure = "non-positive kappa or H";
  } else if (r.H / r.kappa > r.a) {
    r.valid = false;
    r.failure = "H/kappa > a";
  } else if (r.L < 4.0 * r.a) {
    r.valid = false;
    r.failure = "L < 4a";
  } else if (std::pow(r.L, -2 * r.alpha) * sup_u0 > 4.0 * r.H * std::pow(r.a, -2 * r.alpha)) {
    r.valid = false;
    r.failure = "far-field bound violated";
  }
  return r;
}

struct BlowupParams {
  double kappa0 = 0.0;
  double H0 = 1.0;
  double a = 0.0;
  double T = 0.0;
  double L_min = 0.0;
};

inline BlowupParams canonical_blowup_params(double alpha, double c_alpha) {
  require(alpha > 0.0 && alpha < 0.5, "alpha must lie in (0, 1/2)");
  require(c_alpha > 0.0, "c_alpha must be positive");
  BlowupParams p;
  p.kappa0 = std::pow(3.0 * c_alpha / (1.0 - 2.0 * alpha), 1.0 / (1.0 - 2.0 * alpha));
  p.H0 = 1.0;
  p.a = 1.0 / p.kappa0;
  p.T = 1.5 / p.kappa0;
  p.L_min = 16.0 * p.a;
  return p;
}

struct DominationCheck {
  bool ok = false;
  double worst_gap = 0.0;
  double grid_tol = 0.0;
};

inline DominationCheck check_domination(const SpectralField& f, const FrontEnvelope& env) {
  double peak = 0.0, real_part = 0.0;
  for (int k = 1; k <= f.n_modes(); ++k) {
    peak = std::max(peak, std::abs(f[k]));
    real_part = std::max(real_part, std::abs(f[k].real()));
  }
  if (real_part > 1e-8 * peak) throw ParameterError("check_domination: field is not odd");
  const int m = next_smooth(std::max(20002, 4 * f.grid().n_samples));
  const double dx = f.grid().period / m;
  DominationCheck r;
  r.worst_gap = detail::min_gap(synthesize(f, m), env);
  r.grid_tol = 2.0 * max_abs(synthesize(derivative(f, 2), m)) * dx * dx;
  r.ok = r.worst_gap >= -r.grid_tol;
  return r;
}

enum class RescaleMode { full, amplitude_only };

// Runs the solver on L^(2 alpha - 1) u0(L x), period / L, and compares with
// the rescaled snapshots of u_traj. amplitude_only skips the time rescaling.
inline double rescale_check(const Trajectory& tr, double L, double alpha,
                            RescaleMode mode = RescaleMode::full) {
  require(L > 0.0, "L must be positive");
  require(std::abs(alpha - tr.config.alpha) < 1e-15, "alpha differs from trajectory");
  if (tr.snapshots.empty()) throw AlignmentError("trajectory has no snapshots");
  const double amp = std::pow(L, 2 * alpha - 1);
  const double tau = mode == RescaleMode::full ? std::pow(L, 2 * alpha) : 1.0;
  SolverConfig c1 = tr.config;
  c1.period = tr.config.period / L;
  c1.t_end = tr.config.t_end / tau;
  c1.dt_max = tr.config.dt_max / tau;
  c1.record_every = tr.config.record_every / tau;
  if (c1.stop_rule.kind == StopKind::gradient_threshold) c1.stop_rule.value *= amp * L;
  auto to_grid = [&](const SpectralField& u, const SpectralGrid& g) {
    SpectralField v(g);
    for (int k = 1; k <= g.n_modes; ++k) v.raw()[g.n_modes + k] = amp * u[k];
    v.symmetrize();
    return v;
  };
  const auto g1 = c1.grid();
  const auto t1 = run(c1, to_grid(tr.snapshots.front(), g1));
  double worst = 0.0;
  for (std::size_t j = 0; j < t1.times.size(); ++j) {
    const double target = tau * t1.times[j];
    std::size_t i = 0;
    while (i < tr.times.size() &&
           std::abs(tr.times[i] - target) > 1e-9 * std::max(1.0, tr.config.t_end))
      ++i;
    if (i == tr.times.size()) throw AlignmentError("no snapshot at rescaled time");
    const auto d = t1.snapshots[j] - to_grid(tr.snapshots[i], g1);
    worst = std::max(worst, sup_norms(d).linf);
  }
  return worst;
}

struct DissipationConstantFit {
  std::vector<double> h;
  std::vector<double> c_h;  // (1 - min v/phi) / (h (kappa/H)^(2 alpha))
  double pointwise_worst = 0.0;
  double least_squares = 0.0;
};

// One fractional heat step applied to the odd extension of phi(1, 1, 1, L)
// sampled on m points (full discrete spectrum). Rescaling (kappa, H, a) leaves
// the fitted constant unchanged, so the unit envelope suffices.
inline DissipationConstantFit fit_dissipation_constant(double alpha,
                                                       const std::vector<double>& hs,
                                                       double L = 64.0, int m = 1 << 16) {
  require(alpha > 0.0 && alpha <= 1.0, "alpha must lie in (0, 1]");
  const FrontEnvelope env{1.0, 1.0, 1.0, L};
  env.validate();
  const double p = 2.0 * L, dx = p / m;
  std::vector<double> u(m);
  for (int j = 0; j < m; ++j) u[j] = phi_odd(env, j * dx);
  std::vector<cplx> uh(m / 2 + 1), vh(m / 2 + 1);
  fft::forward(u, uh);
  DissipationConstantFit fit;
  double sxy = 0.0, sxx = 0.0;
  for (double h : hs) {
    for (int k = 0; k <= m / 2; ++k)
      vh[k] = uh[k] * std::exp(-std::pow(2 * kPi * k / p, 2 * alpha) * h) / double(m);
    std::vector<double> v(m);
    fft::inverse(vh, v);
    double r = std::numeric_limits<double>::infinity();
    for (int j = 1; j < m / 2; ++j) r = std::min(r, v[j] / phi_eval(env, j * dx));
    const double c = (1.0 - r) / h;
    fit.h.push_back(h);
    fit.c_h.push_back(c);
    fit.pointwise_worst = std::max(fit.pointwise_worst, c);
    sxy += h * (1.0 - r);
    sxx += h * h;
  }
  fit.least_squares = sxy / sxx;
  return fit;
}

}  // namespace fburg

#endif
