#include <algorithm>
#include <cmath>
#include <random>

#include <fracburgers/blowup.hpp>
#include <fracburgers/experiment.hpp>

namespace fburg {

using nlohmann::ordered_json;

namespace {

ordered_json num(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(); }

ordered_json solver_json(const SolverConfig& c) {
  ordered_json j;
  j["alpha"] = c.alpha;
  j["n_modes"] = c.n_modes;
  j["period"] = c.period;
  j["n_samples"] = c.grid().n_samples;
  j["cfl"] = c.cfl;
  j["t_end"] = c.t_end;
  j["dt_max"] = c.dt_max;
  j["record_every"] = c.record_every;
  switch (c.stop_rule.kind) {
    case StopKind::time_reached: j["stop_rule"] = "time_reached"; break;
    case StopKind::gradient_threshold:
      j["stop_rule"] = "gradient_threshold:" + format_double(c.stop_rule.value);
      break;
    case StopKind::spectral_tail:
      j["stop_rule"] = "spectral_tail:" + format_double(c.stop_rule.value);
      break;
  }
  j["hs_orders"] = c.diagnostics.hs_orders;
  j["lp_orders"] = c.diagnostics.lp_orders;
  j["y_quartic"] = c.diagnostics.y_quartic;
  j["keep_snapshots"] = c.keep_snapshots;
  return j;
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

SpectralField sines(const SpectralGrid& g, const std::vector<double>& amps,
                    const std::vector<double>& modes) {
  if (amps.size() != modes.size())
    throw ConfigError("amplitudes: length differs from wavenumbers");
  SpectralField f(g);
  for (std::size_t i = 0; i < amps.size(); ++i) {
    const int k = static_cast<int>(modes[i]);
    if (k != modes[i] || k < 1 || k > g.n_modes)
      throw ConfigError("wavenumbers: entries must be integers in [1, n_modes]");
    f.set_mode(k, f[k] + cplx(0.0, -0.5 * amps[i]));
  }
  return f;
}

SpectralField initial_data(const ExperimentSpec& s, const SpectralGrid& g,
                           std::vector<double> amps, std::vector<double> modes,
                           ordered_json& resolved) {
  const auto kind = s.text("data", "sines");
  resolved["data"] = kind;
  if (kind == "random") {
    const double amp = s.number("random_amplitude", 1.0);
    const double decay = s.number("random_decay", 2.0);
    resolved["random_amplitude"] = amp;
    resolved["random_decay"] = decay;
    std::mt19937_64 rng(s.seed);
    std::normal_distribution<double> nd;
    SpectralField f(g);
    for (int k = 1; k <= g.n_modes; ++k)
      f.set_mode(k, amp * std::pow(double(k), -decay) * cplx(nd(rng), nd(rng)));
    return f;
  }
  amps = s.numbers("amplitudes", amps);
  modes = s.numbers("wavenumbers", modes);
  resolved["amplitudes"] = amps;
  resolved["wavenumbers"] = modes;
  return sines(g, amps, modes);
}

void forbid(const ExperimentSpec& s, std::initializer_list<const char*> keys, const char* why) {
  for (const char* k : keys)
    if (s.has(k)) throw ConfigError(std::string(k) + ": " + why);
}

ordered_json termination_json(const TerminationInfo& t) {
  ordered_json j;
  j["kind"] = to_string(t.kind);
  j["reason"] = t.reason;
  j["t_star"] = num(t.t_star);
  return j;
}

bool all_true(const ordered_json& checks) {
  for (const auto& [k, v] : checks.items())
    if (!v.get<bool>()) return false;
  return true;
}

// ---------------------------------------------------------------------------

ExperimentResult global_regularity(const ExperimentSpec& s) {
  ExperimentResult r;
  SolverConfig cfg = s.solver;
  if (!s.has("alpha")) cfg.alpha = 0.5;
  if (cfg.alpha < 0.5) throw ConfigError("alpha: global_regularity needs alpha >= 1/2");
  const auto grid = cfg.grid();
  const auto u0 = initial_data(s, grid, {5.0, 2.0}, {1.0, 3.0}, r.resolved);

  Calibration cal;
  if (s.has("K")) {
    cal.modulus = ModulusOfContinuity::make(s.number("K", 0.0));
    r.resolved["K"] = cal.modulus.K;
  } else {
    const int pts = static_cast<int>(s.number("calibration_points", 60));
    r.resolved["calibration_points"] = pts;
    cal = calibrate_K(pts);
  }
  r.calibration = calibration_json(cal);
  const auto w = choose_B(cal.modulus, u0);
  r.calibration["log_B"] = w.log_B;
  r.calibration["B"] = num(w.B());
  const double slack = s.number("gradient_slack", 1e-3);
  r.resolved["gradient_slack"] = slack;

  const auto tr = run(cfg, u0, {[&](const SpectralField& u, DiagnosticsRecord& rec) {
                        const auto chk = check_field_modulus(u, w);
                        rec.modulus_margin = chk.margin;
                        rec.extra["grid_tol"] = chk.grid_tol;
                        rec.extra["worst_lag"] = chk.worst_lag;
                      }});
  r.resolved["solver"] = solver_json(cfg);

  // |u_x| <= B omega'(0+) (1 + slack), compared in logs since B may overflow.
  double max_log_grad = -INFINITY, min_excess = INFINITY;
  bool margins_ok = true, delta_positive = true;
  std::vector<double> early;
  for (const auto& rec : tr.records) {
    max_log_grad = std::max(max_log_grad, std::log(rec.w1inf));
    const double tol = rec.extra.at("grid_tol");
    min_excess = std::min(min_excess, rec.modulus_margin + tol);
    margins_ok = margins_ok && rec.modulus_margin >= -tol;
    if (rec.t >= 0.05) {
      delta_positive = delta_positive && rec.analyticity_delta > 0.0;
      if (early.size() < 10) early.push_back(rec.analyticity_delta);
    }
  }
  bool delta_monotone = early.size() >= 2;
  for (std::size_t i = 1; i < early.size(); ++i)
    delta_monotone = delta_monotone && early[i] >= 0.9 * early[i - 1];

  ordered_json checks;
  checks["completed"] = tr.termination.kind == Termination::completed;
  checks["gradient_bound"] = max_log_grad <= w.log_B + std::log1p(slack);
  checks["modulus_margin"] = margins_ok;
  checks["analyticity_positive"] = delta_positive;
  checks["analyticity_nondecreasing"] = delta_monotone;
  r.summary["termination"] = termination_json(tr.termination);
  r.summary["K"] = cal.modulus.K;
  r.summary["log_B"] = w.log_B;
  r.summary["max_log_w1inf"] = max_log_grad;
  r.summary["min_margin_plus_grid_tol"] = num(min_excess);
  r.summary["analyticity_early"] = early;
  r.summary["checks"] = checks;
  r.pass = all_true(checks);
  r.trajectory = tr;
  return r;
}

// ---------------------------------------------------------------------------

struct BlowupSetup {
  double c_alpha = 0.0;
  BlowupParams params;
  FrontEnvelope env;
};

BlowupSetup blowup_setup(const ExperimentSpec& s, double data_alpha, ordered_json& resolved,
                         ordered_json& calibration, const std::string& c_default) {
  BlowupSetup b;
  const auto c_text = s.text("c_alpha", c_default);
  resolved["c_alpha"] = c_text;
  if (c_text == "fit") {
    const auto steps = s.numbers("fit_steps", {1e-4, 1e-3, 1e-2});
    resolved["fit_steps"] = steps;
    const auto fit = fit_dissipation_constant(data_alpha, steps);
    b.c_alpha = fit.pointwise_worst;
    calibration["c_alpha_pointwise_worst"] = fit.pointwise_worst;
    calibration["c_alpha_least_squares"] = fit.least_squares;
    calibration["c_alpha_per_step"] = fit.c_h;
  } else {
    b.c_alpha = s.number("c_alpha", 1.0);
  }
  calibration["c_alpha"] = b.c_alpha;
  b.params = canonical_blowup_params(data_alpha, b.c_alpha);
  const double L_over_a = s.number("L_over_a", 64.0);
  resolved["L_over_a"] = L_over_a;
  if (L_over_a < 16.0) throw ConfigError("L_over_a: must be at least 16");
  b.env = {b.params.kappa0, b.params.H0, b.params.a, L_over_a * b.params.a};
  calibration["kappa0"] = b.params.kappa0;
  calibration["H0"] = b.params.H0;
  calibration["a"] = b.params.a;
  calibration["T"] = b.params.T;
  calibration["L"] = b.env.L;
  return b;
}

SpectralField blowup_data(const ExperimentSpec& s, const BlowupSetup& b, int n_modes,
                          ordered_json& resolved) {
  const double margin = s.number("margin", 0.05);
  const double smooth = s.number("smoothing_over_delta", 0.125);
  resolved["margin"] = margin;
  resolved["smoothing_over_delta"] = smooth;
  return make_front_data(b.env, margin, smooth * b.env.delta(), n_modes);
}

// Fitted front of an odd field: slope at 0 and minimum over [lo, hi].
std::pair<double, double> fitted_front(const SpectralField& u, double lo, double hi) {
  const double kappa = evaluate(u, 0.0, 1);
  const int m = next_smooth(std::max(20002, 4 * u.grid().n_samples));
  const auto v = synthesize(u, m);
  const double dx = u.grid().period / m;
  double H = INFINITY;
  for (int j = 0; j < m; ++j)
    if (j * dx >= lo && j * dx <= hi) H = std::min(H, v[j]);
  return {kappa, H};
}

ExperimentResult blowup(const ExperimentSpec& s) {
  ExperimentResult r;
  forbid(s, {"period", "t_end", "record_every", "stop_rule"}, "derived from T for blowup");
  SolverConfig cfg = s.solver;
  if (!s.has("alpha")) cfg.alpha = 0.25;
  if (!s.has("n_modes")) cfg.n_modes = 2048;
  const double data_alpha = s.number("data_alpha", cfg.alpha);
  if (!(data_alpha > 0.0 && data_alpha < 0.5))
    throw ConfigError("data_alpha: must lie in (0, 1/2)");
  r.resolved["data_alpha"] = data_alpha;
  const auto b = blowup_setup(s, data_alpha, r.resolved, r.calibration, "fit");
  const double T = b.params.T;
  const double s_crit = 1.5 - 2.0 * data_alpha;
  const double t_end_over_T = s.number("t_end_over_T", 2.0);
  const double per_T = s.number("records_per_T", 400.0);
  const double thr = s.number("threshold_over_kappa0", 8.0);
  const double h1_target = s.number("h1_target", 1e3);
  const double tstar_ratio = s.number("tstar_ratio", 1.5);
  r.resolved["t_end_over_T"] = t_end_over_T;
  r.resolved["records_per_T"] = per_T;
  r.resolved["threshold_over_kappa0"] = thr;
  r.resolved["h1_target"] = h1_target;
  r.resolved["tstar_ratio"] = tstar_ratio;
  cfg.period = 2.0 * b.env.L;
  cfg.t_end = t_end_over_T * T;
  cfg.record_every = T / per_T;
  if (!s.has("dt_max")) cfg.dt_max = cfg.record_every;
  cfg.stop_rule = StopRule::gradient_threshold(thr * b.params.kappa0);
  if (std::find(cfg.diagnostics.hs_orders.begin(), cfg.diagnostics.hs_orders.end(), s_crit) ==
      cfg.diagnostics.hs_orders.end())
    cfg.diagnostics.hs_orders.push_back(s_crit);
  if (!s.has("y_quartic")) cfg.diagnostics.y_quartic = false;
  cfg.validate();

  const auto u0 = blowup_data(s, b, cfg.n_modes, r.resolved);
  const bool track = s.flag("envelope", true);
  r.resolved["envelope"] = track;

  EnvelopeState env;
  env.kappa = b.params.kappa0;
  env.H = b.params.H0;
  env.a = b.params.a;
  env.L = b.env.L;
  env.alpha = data_alpha;
  env.c_alpha = b.c_alpha;
  env.c_n = 0.0;
  env.h = cfg.record_every;
  const double sup0 = sup_norms(u0).linf;
  double env_t = 0.0;
  std::vector<DiagnosticHook> hooks;
  if (track) {
    hooks.push_back([&](const SpectralField& u, DiagnosticsRecord& rec) {
      while (env.valid && env_t + 0.5 * env.h < rec.t && env.kappa * env.h <= 0.5) {
        env = envelope_recursion_step(env, sup0);
        env_t += env.h;
      }
      const auto [kp, Hp] = fitted_front(u, env.H / env.kappa, env.L - env.a);
      rec.extra["kappa_pde"] = kp;
      rec.extra["H_pde"] = Hp;
      rec.extra["kappa_rec"] = env.kappa;
      rec.extra["H_rec"] = env.H;
      if (env.valid && env.H > 0 && env.kappa > 0 && env.H / env.kappa <= 0.25 * env.L &&
          env.a <= 0.25 * env.L) {
        rec.envelope_ok = check_domination(u, {env.kappa, env.H, env.a, env.L}).ok;
      }
    });
  }
  const auto tr = run(cfg, u0, hooks);
  r.resolved["solver"] = solver_json(cfg);

  const double h1_0 = tr.records.front().hs.at(s_crit);
  double h1_max = 0.0, w1_max = 0.0;
  bool finite = true;
  for (const auto& rec : tr.records) {
    h1_max = std::max(h1_max, rec.hs.at(s_crit));
    w1_max = std::max(w1_max, rec.w1inf);
    finite = finite && std::isfinite(rec.w1inf);
  }
  const double growth = h1_max / h1_0;
  const bool expect_blowup = std::abs(data_alpha - cfg.alpha) < 1e-15;
  ordered_json checks;
  if (expect_blowup) {
    checks["blowup_suspected"] = tr.termination.kind == Termination::blowup_suspected;
    checks["t_star_within"] = std::isfinite(tr.termination.t_star) &&
                              tr.termination.t_star <= tstar_ratio * T;
    checks["h1_growth"] = growth >= h1_target;
  } else {
    checks["completed"] = tr.termination.kind == Termination::completed;
    checks["gradient_bounded"] = finite && w1_max < thr * b.params.kappa0;
  }
  r.summary["termination"] = termination_json(tr.termination);
  r.summary["T"] = T;
  r.summary["t_star_over_T"] = num(tr.termination.t_star / T);
  r.summary["kappa0"] = b.params.kappa0;
  r.summary["c_alpha"] = b.c_alpha;
  r.summary["n_modes"] = cfg.n_modes;
  r.summary["sobolev_order"] = s_crit;
  r.summary["h1_initial"] = h1_0;
  r.summary["h1_max"] = h1_max;
  r.summary["h1_growth"] = growth;
  r.summary["max_w1inf"] = w1_max;
  r.summary["checks"] = checks;
  r.pass = all_true(checks);
  r.trajectory = tr;
  return r;
}

// ---------------------------------------------------------------------------

ExperimentResult splitting_order(const ExperimentSpec& s) {
  ExperimentResult r;
  SolverConfig cfg = s.solver;
  const auto alphas = s.numbers("alphas", {0.25, 0.5});
  const auto hs = s.numbers("h_values", {1e-2, 5e-3, 2.5e-3, 1.25e-3});
  const double ref_dt = s.number("reference_dt", 1e-5);
  const bool nonlinear = s.flag("nonlinear", true);
  const double lo = s.number("slope_min", 1.8), hi = s.number("slope_max", 2.2);
  if (hs.size() < 2) throw ConfigError("h_values: need at least two step sizes");
  r.resolved["alphas"] = alphas;
  r.resolved["h_values"] = hs;
  r.resolved["reference_dt"] = ref_dt;
  r.resolved["nonlinear"] = nonlinear;
  r.resolved["slope_min"] = lo;
  r.resolved["slope_max"] = hi;
  const auto u0 = initial_data(s, cfg.grid(), {1.0, 0.3}, {1.0, 2.0}, r.resolved);
  r.resolved["solver"] = solver_json(cfg);

  Table t{"splitting.csv", {"alpha", "h", "c0_err", "c1_err", "C1_err"}, {}};
  ordered_json slopes, checks;
  for (double a : alphas) {
    std::vector<double> lx, ly;
    for (double h : hs) {
      const auto e = splitting_error(u0, h, a, ref_dt, nonlinear);
      const double c1 = e.c0 + e.c1;
      t.rows.push_back({a, h, e.c0, e.c1, c1});
      lx.push_back(std::log(h));
      ly.push_back(std::log(c1));
    }
    const double slope = fit_slope(lx, ly);
    const auto key = "alpha_" + format_double(a);
    slopes[key] = num(slope);
    checks[key] = slope >= lo && slope <= hi;
  }
  r.tables.push_back(t);
  r.summary["slopes"] = slopes;
  r.summary["checks"] = checks;
  r.pass = all_true(checks);
  return r;
}

// ---------------------------------------------------------------------------

ExperimentResult modulus_verify(const ExperimentSpec& s) {
  ExperimentResult r;
  const int pts = static_cast<int>(s.number("grid_points", 200));
  const double tol = s.number("tol", 1e-8);
  if (pts < 2) throw ConfigError("grid_points: need at least 2");
  r.resolved["grid_points"] = pts;
  r.resolved["tol"] = tol;
  Calibration cal;
  if (s.has("K")) {
    cal.modulus = ModulusOfContinuity::make(s.number("K", 0.0));
    r.resolved["K"] = cal.modulus.K;
  } else {
    const int cp = static_cast<int>(s.number("calibration_points", 60));
    r.resolved["calibration_points"] = cp;
    cal = calibrate_K(cp);
  }
  r.calibration = calibration_json(cal);
  const auto& m = cal.modulus;

  Table t{"modulus.csv", {"xi", "branch", "omega", "domega", "integral", "value", "quad_err"}, {}};
  double max_b = -INFINITY, max_c = -INFINITY;
  for (double xi : log_grid(1e-6 * m.xi0, m.xi0, pts)) {
    const auto d = dissipation_integrals(m, xi);
    const double v = 2 * m(xi) * m.deriv(xi, Side::left) + d.I1;
    max_b = std::max(max_b, v);
    t.rows.push_back({xi, 1.0, m(xi), m.deriv(xi, Side::left), d.I1, v, d.err1});
  }
  for (double xi : log_grid(m.xi0, 1e6 * m.xi0, pts)) {
    const auto d = dissipation_integrals(m, xi);
    const double v = 2 * m(xi) * m.deriv(xi, Side::left) + d.I2;
    max_c = std::max(max_c, v);
    t.rows.push_back({xi, 2.0, m(xi), m.deriv(xi, Side::left), d.I2, v, d.err2});
  }
  r.tables.push_back(t);
  ordered_json checks;
  checks["junction_concave"] = m.junction_concave();
  checks["inequality_small_xi"] = max_b <= tol;
  checks["inequality_large_xi"] = max_c <= tol;
  r.summary["K"] = m.K;
  r.summary["xi0"] = m.xi0;
  r.summary["cK"] = m.cK;
  r.summary["max_small_xi"] = max_b;
  r.summary["max_large_xi"] = max_c;
  r.summary["tol"] = tol;
  r.summary["checks"] = checks;
  r.pass = all_true(checks);
  return r;
}

// ---------------------------------------------------------------------------

// kappa(t), H(t) of the ODE on [0, horizon] at the nodes j*h, each interval
// split into `sub` RK4 steps. Also reports whether the monotone quantity
// never decreased.
struct OdePath {
  std::vector<double> kappa, H;
  bool monotone = true;
};

OdePath ode_path(double k0, double H0, double alpha, double c, double h, int n, int sub) {
  OdePath p;
  double k = k0, H = H0, q = monotone_quantity(k, H, alpha);
  p.kappa.push_back(k);
  p.H.push_back(H);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < sub; ++j) {
      std::tie(k, H) = envelope_ode_step(k, H, alpha, c, h / sub);
      const double qn = monotone_quantity(k, H, alpha);
      p.monotone = p.monotone && qn >= q * (1 - 1e-14);
      q = qn;
    }
    p.kappa.push_back(k);
    p.H.push_back(H);
  }
  return p;
}

double ode_blowup_time(double k0, double H0, double alpha, double c) {
  double k = k0, H = H0, t = 0.0;
  while (k < 1e8 * k0) {
    const double dt = 1e-3 / k;
    std::tie(k, H) = envelope_ode_step(k, H, alpha, c, dt);
    t += dt;
  }
  return t;
}

ExperimentResult envelope_compare(const ExperimentSpec& s) {
  ExperimentResult r;
  SolverConfig cfg = s.solver;
  if (!s.has("alpha")) cfg.alpha = 0.25;
  const double alpha = cfg.alpha;
  if (!(alpha > 0.0 && alpha < 0.5)) throw ConfigError("alpha: must lie in (0, 1/2)");
  const auto b = blowup_setup(s, alpha, r.resolved, r.calibration, "1");
  const double c = b.c_alpha;
  const double c_n = s.number("c_n", 0.0);
  const auto fr = s.numbers("h_over_tb", {1.0 / 400, 1.0 / 800, 1.0 / 1600});
  const double horizon = s.number("horizon", 0.8);
  const int sub = static_cast<int>(s.number("substeps", 64));
  const bool run_pde = s.flag("run_pde", false);
  const double lo = s.number("slope_min", 0.8), hi = s.number("slope_max", 1.2);
  if (fr.size() < 2) throw ConfigError("h_over_tb: need at least two step sizes");
  r.resolved["c_n"] = c_n;
  r.resolved["h_over_tb"] = fr;
  r.resolved["horizon"] = horizon;
  r.resolved["substeps"] = sub;
  r.resolved["run_pde"] = run_pde;
  r.resolved["slope_min"] = lo;
  r.resolved["slope_max"] = hi;

  const auto& p = b.params;
  const double tb = ode_blowup_time(p.kappa0, p.H0, alpha, c);
  r.summary["t_blowup_ode"] = tb;
  r.summary["T"] = p.T;

  Table conv{"convergence.csv", {"h", "steps", "max_kappa_err", "recursion_valid"}, {}};
  std::vector<double> lx, ly;
  bool monotone = true;
  EnvelopeState finest;
  std::vector<EnvelopeState> finest_path;
  OdePath finest_ode;
  double h_fine = 0.0;
  for (double f : fr) {
    const int n = std::max(1, static_cast<int>(std::lround(horizon / f)));
    const double h = horizon * tb / n;
    const auto ode = ode_path(p.kappa0, p.H0, alpha, c, h, n, sub);
    monotone = monotone && ode.monotone;
    EnvelopeState st;
    st.kappa = p.kappa0;
    st.H = p.H0;
    st.a = p.a;
    st.L = b.env.L;
    st.h = h;
    st.alpha = alpha;
    st.c_alpha = c;
    st.c_n = c_n;
    std::vector<EnvelopeState> path{st};
    double err = 0.0;
    for (int i = 1; i <= n; ++i) {
      if (st.kappa * st.h > 0.5) throw ConfigError("h_over_tb: kappa*h exceeds 1/2");
      st = envelope_recursion_step(st, 2.0 * p.H0);
      path.push_back(st);
      err = std::max(err, std::abs(st.kappa - ode.kappa[i]));
    }
    conv.rows.push_back({h, double(n), err, st.valid ? 1.0 : 0.0});
    lx.push_back(std::log(h));
    ly.push_back(std::log(err));
    if (h_fine == 0.0 || h < h_fine) {
      h_fine = h;
      finest = st;
      finest_path = path;
      finest_ode = ode;
    }
  }
  const double slope = fit_slope(lx, ly);

  // Rows at up to ~200 nodes of the finest step.
  const int n_fine = static_cast<int>(finest_path.size()) - 1;
  const int stride = std::max(1, n_fine / 200);
  std::map<int, std::pair<double, double>> pde_front;
  std::map<int, double> pde_dom;
  if (run_pde) {
    SolverConfig pc = cfg;
    if (!s.has("n_modes")) pc.n_modes = 1024;
    pc.period = 2.0 * b.env.L;
    pc.t_end = n_fine * h_fine;
    pc.record_every = stride * h_fine;
    if (!s.has("dt_max")) pc.dt_max = pc.record_every;
    pc.diagnostics.y_quartic = false;
    pc.keep_snapshots = false;
    pc.stop_rule = StopRule::gradient_threshold(8.0 * p.kappa0);
    const auto u0 = blowup_data(s, b, pc.n_modes, r.resolved);
    const auto tr = run(pc, u0, {[&](const SpectralField& u, DiagnosticsRecord& rec) {
                          const int i = static_cast<int>(std::lround(rec.t / h_fine));
                          const auto& e = finest_path[std::min(i, n_fine)];
                          pde_front[i] = fitted_front(u, e.H / e.kappa, e.L - e.a);
                          const bool usable = e.valid && e.H / e.kappa <= 0.25 * e.L;
                          pde_dom[i] = usable ? double(check_domination(
                                                           u, {e.kappa, e.H, e.a, e.L})
                                                           .ok)
                                              : kNaN;
                        }});
    r.summary["pde_termination"] = termination_json(tr.termination);
    r.resolved["pde_solver"] = solver_json(pc);
  }
  Table env{"envelope.csv",
            {"t", "kappa_pde", "kappa_ode", "kappa_rec", "H_pde", "H_ode", "H_rec",
             "monotone_qty", "domination_ok"},
            {}};
  for (int i = 0; i <= n_fine; i += stride) {
    const auto& e = finest_path[i];
    const auto it = pde_front.find(i);
    const double kp = it == pde_front.end() ? kNaN : it->second.first;
    const double Hp = it == pde_front.end() ? kNaN : it->second.second;
    const auto d = pde_dom.find(i);
    env.rows.push_back({i * h_fine, kp, finest_ode.kappa[i], e.kappa, Hp, finest_ode.H[i], e.H,
                        monotone_quantity(finest_ode.kappa[i], finest_ode.H[i], alpha),
                        d == pde_dom.end() ? kNaN : d->second});
  }
  r.tables.push_back(conv);
  r.tables.push_back(env);

  ordered_json checks;
  checks["first_order"] = slope >= lo && slope <= hi;
  checks["monotone_quantity"] = monotone;
  r.summary["slope"] = num(slope);
  r.summary["start_ratio"] = monotone_quantity(p.kappa0, p.H0, alpha) / (c / (1 - 2 * alpha));
  r.summary["checks"] = checks;
  r.pass = all_true(checks);
  return r;
}

// ---------------------------------------------------------------------------

// Projected, mean-free periodic Gaussian of width w centred at P/2, scaled
// to unit-period-free L2 norm l2.
SpectralField gaussian_bump(const SpectralGrid& g, double w, double l2) {
  const int m = 8 * g.n_samples;
  std::vector<double> v(m);
  const double P = g.period;
  for (int j = 0; j < m; ++j) {
    double s = 0.0;
    for (int img = -2; img <= 2; ++img) {
      const double x = j * P / m - 0.5 * P + img * P;
      s += std::exp(-0.5 * x * x / (w * w));
    }
    v[j] = s;
  }
  auto f = analyze_any(v, g);
  f *= l2 / lp_norm(f, 2.0);
  return f;
}

ExperimentResult rough_data(const ExperimentSpec& s) {
  ExperimentResult r;
  SolverConfig cfg = s.solver;
  if (!s.has("alpha")) cfg.alpha = 0.5;
  if (!s.has("n_modes")) cfg.n_modes = 1024;
  if (!s.has("period")) cfg.period = 1e-3;
  if (!s.has("t_end")) cfg.t_end = 1.0;
  if (!s.has("record_every")) cfg.record_every = 1e-4;
  if (!s.has("dt_max")) cfg.dt_max = cfg.record_every;
  if (!s.has("keep_snapshots")) cfg.keep_snapshots = false;
  if (!s.has("y_quartic")) cfg.diagnostics.y_quartic = false;
  if (std::find(cfg.diagnostics.lp_orders.begin(), cfg.diagnostics.lp_orders.end(), 2.0) ==
      cfg.diagnostics.lp_orders.end())
    cfg.diagnostics.lp_orders.push_back(2.0);
  const double target_sup = s.number("target_sup", 1e3);
  const double target_l2 = s.number("target_l2", 1.0);
  const double factor = s.number("bound_factor", 10.0);
  const double t_min = s.number("t_min", 1e-4);
  r.resolved["target_sup"] = target_sup;
  r.resolved["target_l2"] = target_l2;
  r.resolved["bound_factor"] = factor;
  r.resolved["t_min"] = t_min;
  cfg.validate();
  const auto g = cfg.grid();
  const double p = 2.0;  // the L^p class of the data

  // sup of the unit-L2 bump decreases with its width; bisect in log width.
  double lo = std::log(1e-3 * g.period / g.n_modes), hi = std::log(0.25 * g.period);
  if (sup_norms(gaussian_bump(g, std::exp(lo), target_l2)).linf < target_sup)
    throw ConfigError("target_sup: not reachable with these n_modes and period");
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (sup_norms(gaussian_bump(g, std::exp(mid), target_l2)).linf > target_sup) lo = mid;
    else hi = mid;
  }
  const double width = std::exp(0.5 * (lo + hi));
  const auto u0 = gaussian_bump(g, width, target_l2);
  r.calibration["width"] = width;
  r.calibration["sup0"] = sup_norms(u0).linf;
  r.calibration["l2_0"] = lp_norm(u0, p);

  const auto tr = run(cfg, u0);
  r.resolved["solver"] = solver_json(cfg);
  const double l2_0 = lp_norm(u0, p);
  double worst = 0.0, worst_t = kNaN;
  bool l2_monotone = true;
  for (std::size_t i = 0; i < tr.records.size(); ++i) {
    const auto& rec = tr.records[i];
    if (rec.t >= t_min * (1 - 1e-12) && rec.t <= 1.0 + 1e-12) {
      const double v = std::sqrt(rec.t) * rec.linf;
      if (v > worst) worst = v, worst_t = rec.t;
    }
    if (i > 0) l2_monotone = l2_monotone && rec.lp.at(p) <= tr.records[i - 1].lp.at(p) * (1 + 1e-12);
  }
  ordered_json checks;
  checks["completed"] = tr.termination.kind == Termination::completed;
  checks["sup_decay"] = worst <= factor * l2_0;
  checks["l2_nonincreasing"] = l2_monotone;
  r.summary["termination"] = termination_json(tr.termination);
  r.summary["sup0"] = sup_norms(u0).linf;
  r.summary["l2_0"] = l2_0;
  r.summary["max_sqrt_t_sup"] = worst;
  r.summary["max_at_t"] = num(worst_t);
  r.summary["bound"] = factor * l2_0;
  r.summary["checks"] = checks;
  r.pass = all_true(checks);
  r.trajectory = tr;
  return r;
}

// ---------------------------------------------------------------------------

ExperimentResult rescale(const ExperimentSpec& s) {
  ExperimentResult r;
  SolverConfig cfg = s.solver;
  const double L = s.number("L", 2.0);
  const double neg_alpha = s.number("negative_alpha", 0.25);
  const double tol = s.number("tol", 1e-6);
  if (!s.has("alpha")) cfg.alpha = 0.5;
  if (!s.has("period")) cfg.period = 2.0 * L;
  if (!s.has("t_end")) cfg.t_end = 0.5;
  if (!s.has("record_every")) cfg.record_every = 0.05;
  if (!s.has("dt_max")) cfg.dt_max = 1e-3;
  if (!s.has("y_quartic")) cfg.diagnostics.y_quartic = false;
  cfg.keep_snapshots = true;
  r.resolved["L"] = L;
  r.resolved["negative_alpha"] = neg_alpha;
  r.resolved["tol"] = tol;
  const auto u0 = initial_data(s, cfg.grid(), {0.5, 0.1}, {1.0, 3.0}, r.resolved);
  const auto tr = run(cfg, u0);
  r.resolved["solver"] = solver_json(cfg);
  const double main = rescale_check(tr, L, cfg.alpha);

  SolverConfig nc = cfg;
  nc.alpha = neg_alpha;
  const auto tn = run(nc, u0);
  const double neg_full = rescale_check(tn, L, neg_alpha);
  const double neg_amp = rescale_check(tn, L, neg_alpha, RescaleMode::amplitude_only);

  ordered_json checks;
  checks["covariance"] = main <= tol;
  checks["negative_control_full"] = neg_full <= tol;
  checks["negative_control_amplitude_only"] = neg_amp > 1e3 * tol;
  r.summary["termination"] = termination_json(tr.termination);
  r.summary["discrepancy"] = main;
  r.summary["negative_alpha_full"] = neg_full;
  r.summary["negative_alpha_amplitude_only"] = neg_amp;
  r.summary["checks"] = checks;
  r.pass = all_true(checks);
  r.trajectory = tr;
  return r;
}

}  // namespace

ExperimentResult execute(const ExperimentSpec& spec) {
  ExperimentResult r;
  switch (spec.name) {
    case ExperimentKind::global_regularity: r = global_regularity(spec); break;
    case ExperimentKind::blowup: r = blowup(spec); break;
    case ExperimentKind::splitting_order: r = splitting_order(spec); break;
    case ExperimentKind::modulus_verify: r = modulus_verify(spec); break;
    case ExperimentKind::envelope_compare: r = envelope_compare(spec); break;
    case ExperimentKind::rough_data: r = rough_data(spec); break;
    case ExperimentKind::rescale_check: r = rescale(spec); break;
  }
  ordered_json resolved;
  resolved["experiment"] = to_string(spec.name);
  resolved["seed"] = spec.seed;
  for (auto& [k, v] : r.resolved.items()) resolved[k] = v;
  r.resolved = resolved;
  return r;
}

}  // namespace fburg
