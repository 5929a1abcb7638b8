#ifndef FRACBURGERS_INTEGRATOR_HPP
#define FRACBURGERS_INTEGRATOR_HPP

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "diagnostics.hpp"
#include "spectral.hpp"

namespace fburg {

enum class StopKind { time_reached, gradient_threshold, spectral_tail };

struct StopRule {
  StopKind kind = StopKind::time_reached;
  double value = 0.0;

  static StopRule time_reached() { return {}; }
  static StopRule gradient_threshold(double g) { return {StopKind::gradient_threshold, g}; }
  static StopRule spectral_tail(double frac = 1e-4) { return {StopKind::spectral_tail, frac}; }
};

struct SolverConfig {
  double alpha = 0.5;
  int n_modes = 64;
  double period = 1.0;
  int n_samples = 0;
  double cfl = 0.4;
  double t_end = 1.0;
  double dt_max = 1e-2;
  double record_every = 0.1;
  StopRule stop_rule;
  DiagnosticsConfig diagnostics;
  // Off for long runs where only the records are needed; times still grows.
  bool keep_snapshots = true;

  SpectralGrid grid() const { return SpectralGrid::make(n_modes, period, n_samples); }

  void validate() const {
    require(alpha > 0.0 && alpha <= 1.0, "alpha must lie in (0, 1]");
    require(cfl > 0.0 && cfl < 1.0, "cfl must lie in (0, 1)");
    require(t_end > 0.0, "t_end must be positive");
    require(dt_max > 0.0, "dt_max must be positive");
    require(record_every > 0.0, "record_every must be positive");
    if (stop_rule.kind != StopKind::time_reached)
      require(stop_rule.value > 0.0, "stop rule value must be positive");
    grid().validate();
  }
};

enum class Termination { completed, blowup_suspected, step_underflow };

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::completed: return "completed";
    case Termination::blowup_suspected: return "blowup_suspected";
    case Termination::step_underflow: return "step_underflow";
  }
  return "?";
}

struct TerminationInfo {
  Termination kind = Termination::completed;
  double t_star = kNaN;
  std::string reason;
};

struct Trajectory {
  SolverConfig config;
  std::vector<double> times;
  std::vector<SpectralField> snapshots;
  std::vector<DiagnosticsRecord> records;
  TerminationInfo termination;
};

using DiagnosticHook = std::function<void(const SpectralField&, DiagnosticsRecord&)>;

// One RK4 step in the integrating-factor variables exp(lambda_k t) u(k), so
// the dissipative part is propagated exactly. With nonlinear = false only the
// linear propagator acts.
inline SpectralField step(const SpectralField& u, double dt, double alpha,
                          bool nonlinear = true) {
  require(dt > 0.0, "dt must be positive");
  require(alpha > 0.0 && alpha <= 1.0, "alpha must lie in (0, 1]");
  const auto& g = u.grid();
  const int n = g.n_modes;
  std::vector<double> e(n + 1), e2(n + 1);
  for (int k = 1; k <= n; ++k) {
    const double lam = fractional_symbol(g, k, alpha);
    e[k] = std::exp(-lam * dt);
    e2[k] = std::exp(-0.5 * lam * dt);
  }
  SpectralField out(g);
  auto& o = out.raw();
  if (!nonlinear) {
    for (int k = 1; k <= n; ++k) o[n + k] = e[k] * u[k];
    out.symmetrize();
    return out;
  }
  const auto k1 = nonlinear_term(u);
  SpectralField a(g);
  for (int k = 1; k <= n; ++k) a.raw()[n + k] = e2[k] * (u[k] + 0.5 * dt * k1[k]);
  a.symmetrize();
  const auto k2 = nonlinear_term(a);
  SpectralField b(g);
  for (int k = 1; k <= n; ++k) b.raw()[n + k] = e2[k] * u[k] + 0.5 * dt * k2[k];
  b.symmetrize();
  const auto k3 = nonlinear_term(b);
  SpectralField c(g);
  for (int k = 1; k <= n; ++k) c.raw()[n + k] = e[k] * u[k] + dt * e2[k] * k3[k];
  c.symmetrize();
  const auto k4 = nonlinear_term(c);
  for (int k = 1; k <= n; ++k)
    o[n + k] = e[k] * u[k] +
               dt / 6.0 * (e[k] * k1[k] + 2.0 * e2[k] * (k2[k] + k3[k]) + k4[k]);
  out.symmetrize();
  if (!out.is_finite()) throw OverflowError("non-finite coefficients after step");
  return out;
}

// Fraction of the energy carried by the top third of the resolved modes.
inline double spectral_tail_fraction(const SpectralField& f) {
  const int n = f.n_modes();
  const int k0 = n - n / 3 + 1;
  double tail = 0.0, total = 0.0;
  for (int k = 1; k <= n; ++k) {
    const double e = std::norm(f[k]);
    total += e;
    if (k >= k0) tail += e;
  }
  return total > 0.0 ? tail / total : 0.0;
}

// Zero of the least-squares line through the last (up to 10) samples of
// 1/w1inf against t.
inline double estimate_blowup_time(const std::vector<DiagnosticsRecord>& recs) {
  const std::size_t m = std::min<std::size_t>(10, recs.size());
  if (m < 3) return kNaN;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = recs.size() - m; i < recs.size(); ++i) {
    const double x = recs[i].t, y = 1.0 / recs[i].w1inf;
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double den = m * sxx - sx * sx;
  if (den <= 0.0) return kNaN;
  const double slope = (m * sxy - sx * sy) / den;
  const double icpt = (sy - slope * sx) / m;
  if (slope >= 0.0) return kNaN;
  return -icpt / slope;
}

inline Trajectory run(const SolverConfig& cfg, const SpectralField& u0,
                      const std::vector<DiagnosticHook>& hooks = {}) {
  cfg.validate();
  const auto grid = cfg.grid();
  if (u0.n_modes() != grid.n_modes || u0.grid().period != grid.period)
    throw DimensionError("initial field does not match solver grid");

  Trajectory tr;
  tr.config = cfg;
  SpectralField u = regrid(u0, grid);
  double t = 0.0;

  auto record = [&]() {
    auto rec = make_record(u, t, cfg.diagnostics);
    for (const auto& h : hooks) h(u, rec);
    tr.times.push_back(t);
    if (cfg.keep_snapshots) tr.snapshots.push_back(u);
    tr.records.push_back(std::move(rec));
  };
  auto finish = [&](Termination kind, std::string why) {
    if (tr.times.back() < t) record();
    tr.termination.kind = kind;
    tr.termination.reason = std::move(why);
    if (kind == Termination::blowup_suspected)
      tr.termination.t_star = estimate_blowup_time(tr.records);
  };

  record();
  long rec_index = 1;
  const double dx = grid.dx();
  for (;;) {
    const double next_rec = std::min(rec_index * cfg.record_every, cfg.t_end);
    const double linf = max_abs(synthesize(u));
    double dt = cfg.dt_max;
    if (linf > 0.0) dt = std::min(dt, cfg.cfl * dx / linf);
    bool hit = false;
    if (t + dt >= next_rec * (1.0 - 1e-13)) {
      dt = next_rec - t;
      hit = true;
    }
    if (dt < 1e-14) {
      finish(Termination::step_underflow, "dt below 1e-14");
      return tr;
    }
    try {
      u = step(u, dt, cfg.alpha);
    } catch (const OverflowError&) {
      finish(Termination::blowup_suspected, "overflow");
      return tr;
    }
    t = hit ? next_rec : t + dt;

    bool fired = false;
    std::string why;
    if (cfg.stop_rule.kind == StopKind::gradient_threshold) {
      fired = max_abs(synthesize(derivative(u))) > cfg.stop_rule.value;
      why = "gradient_threshold";
    } else if (cfg.stop_rule.kind == StopKind::spectral_tail) {
      fired = spectral_tail_fraction(u) > cfg.stop_rule.value;
      why = "spectral_tail";
    }
    if (hit) {
      record();
      ++rec_index;
    }
    if (fired) {
      finish(Termination::blowup_suspected, why);
      return tr;
    }
    if (t >= cfg.t_end) {
      finish(Termination::completed, "t_end reached");
      return tr;
    }
  }
}

}  // namespace fburg

#endif
