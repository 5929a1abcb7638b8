#include <gtest/gtest.h>

#include <cmath>
#include <fracburgers/blowup.hpp>

#include "test_util.hpp"

namespace fburg {
namespace {

using testing::random_field;
using testing::sine_field;

TEST(Phi, EndpointsContinuityAndRamp) {
  const FrontEnvelope e{2.0, 1.0, 1.0, 16.0};
  EXPECT_EQ(phi_eval(e, 0.0), 0.0);
  EXPECT_EQ(phi_eval(e, 16.0), 0.0);
  EXPECT_EQ(phi_eval(e, e.delta()), 1.0);
  EXPECT_NEAR(phi_eval(e, 15.5), 0.5, 1e-15);
  EXPECT_EQ(phi_eval(e, 15.0), 1.0);
  EXPECT_THROW(phi_eval(e, -0.1), ParameterError);
  EXPECT_THROW(phi_eval(e, 16.1), ParameterError);
  EXPECT_NEAR(phi_odd(e, -0.25), -0.5, 1e-15);
  EXPECT_NEAR(phi_odd(e, 32.25), 0.5, 1e-15);
  EXPECT_THROW((FrontEnvelope{0.1, 1.0, 1.0, 16.0}.validate()), ParameterError);
}

const FrontEnvelope kEnv{4.0, 1.0, 1.0, 8.0};

TEST(FrontData, OddVanishesAtLAndDominates) {
  const auto f = make_front_data(kEnv, 0.1, 0.05, 128);
  double re = 0.0;
  for (int k = 1; k <= 128; ++k) re = std::max(re, std::abs(f[k].real()));
  EXPECT_LE(re, 1e-12);
  EXPECT_NEAR(evaluate(f, kEnv.L), 0.0, 1e-12);
  int below = 0;
  for (int j = 0; j <= 10000; ++j) {
    const double x = kEnv.L * j / 10000.0;
    if (evaluate(f, x) < phi_eval(kEnv, x)) ++below;
  }
  EXPECT_EQ(below, 0);
  EXPECT_LE(sup_norms(f).linf, 2 * kEnv.H);
}

TEST(FrontData, RejectsWideMollifierAndMissingMargin) {
  EXPECT_THROW(make_front_data(kEnv, 0.1, 0.2, 64), ParameterError);
  EXPECT_THROW(make_front_data(kEnv, 0.0, 0.05, 64), ConstructionError);
}

TEST(Domination, ConstructionPassesAndSteeperEnvelopeFails) {
  const auto f = make_front_data(kEnv, 0.1, 0.05, 128);
  const auto ok = check_domination(f, kEnv);
  EXPECT_TRUE(ok.ok);
  EXPECT_GE(ok.worst_gap, 0.0);
  FrontEnvelope steep = kEnv;
  steep.kappa *= 2.0;
  const auto bad = check_domination(f, steep);
  EXPECT_FALSE(bad.ok);
  EXPECT_THROW(check_domination(random_field(f.grid(), 1), kEnv), ParameterError);
}

// Bisection on y = x - h u0(x), kept separate from the Newton solver.
double characteristic_value(const SpectralField& u0, double h, double y, double sup) {
  double lo = y - h * sup - 1e-12, hi = y + h * sup + 1e-12;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid - h * evaluate(u0, mid) - y > 0) hi = mid;
    else lo = mid;
  }
  return evaluate(u0, 0.5 * (lo + hi));
}

TEST(Characteristics, MatchesBisectionOracle) {
  const auto g = SpectralGrid::make(16, 1.0);
  auto u0 = sine_field(g, 1);
  u0.set_mode(3, cplx(0.05, -0.1));
  const double h = 0.04;
  const auto w = characteristics_step(u0, h);
  const double sup = sup_norms(u0, 16).linf;
  for (int j = 0; j < g.n_samples; j += 7)
    EXPECT_NEAR(w[j], characteristic_value(u0, h, j * g.dx(), sup), 1e-12) << j;
}

TEST(Characteristics, IdentityAtZeroStep) {
  const auto g = SpectralGrid::make(16, 2.0);
  const auto u0 = random_field(g, 4);
  const auto w = characteristics_step(u0, 0.0);
  const auto s = synthesize(u0);
  for (int j = 0; j < g.n_samples; ++j) EXPECT_NEAR(w[j], s[j], 1e-13);
}

TEST(Characteristics, SupConservedAndSlopeSteepens) {
  const auto g = SpectralGrid::make(256, 1.0);
  const double A = 1.0;
  const auto u0 = sine_field(g, 1, A);
  // The crest at x = 1/4 moves to y = 1/4 - h A; put y on the grid.
  const int jc = static_cast<int>(0.2 * g.n_samples);
  const double h = (0.25 - jc * g.dx()) / A;
  ASSERT_LE(h * 2 * kPi * A, 0.5);
  const auto w = characteristics_step(u0, h);
  EXPECT_NEAR(w[jc], A, 1e-13);
  EXPECT_LE(max_abs(w), A * (1 + 1e-13));
  // Odd data keeps the characteristic at the origin: w'(0) = k/(1 - h k).
  const double k = 2 * kPi * A;
  const double slope = (w[1] - w[g.n_samples - 1]) / (2 * g.dx());
  EXPECT_NEAR(slope, k / (1 - h * k), 1e-3 * k / (1 - h * k));
}

TEST(Characteristics, RejectsNearShock) {
  const auto g = SpectralGrid::make(16, 1.0);
  EXPECT_THROW(characteristics_step(sine_field(g, 1), 0.1), ParameterError);
}

TEST(HeatStep, PoissonKernelAtHalf) {
  const auto g = SpectralGrid::make(24, 1.0);
  const auto f = random_field(g, 6, 1.0, 2.0);
  const double h = 0.05, P = g.period;
  const auto v = fractional_heat_step(f, h, 0.5);
  // Periodized (1/pi) h / (x^2 + h^2).
  auto kernel = [&](double x) {
    const double a = 2 * kPi * h / P;
    return std::sinh(a) / (P * (std::cosh(a) - std::cos(2 * kPi * x / P)));
  };
  const int m = 4096;
  std::vector<double> fs(m);
  for (int i = 0; i < m; ++i) fs[i] = evaluate(f, i * P / m);
  for (double x : {0.0, 0.137, 0.5, 0.81}) {
    double s = 0.0;
    for (int i = 0; i < m; ++i) s += kernel(x - i * P / m) * fs[i];
    EXPECT_NEAR(evaluate(v, x), s * P / m, 1e-8) << x;
  }
}

TEST(HeatStep, SemigroupAndMean) {
  const auto g = SpectralGrid::make(32, 3.0);
  const auto f = random_field(g, 8);
  for (double alpha : {0.25, 0.5, 1.0}) {
    const auto a = fractional_heat_step(fractional_heat_step(f, 0.03, alpha), 0.03, alpha);
    const auto b = fractional_heat_step(f, 0.06, alpha);
    EXPECT_LE(testing::max_coeff_diff(a, b), 1e-13);
    EXPECT_EQ(std::abs(b[0]), 0.0);
  }
  EXPECT_LE(testing::max_coeff_diff(fractional_heat_step(f, 0.0, 0.5), f), 0.0);
}

TEST(Splitting, DegenerateLinearCaseIsExact) {
  const auto g = SpectralGrid::make(64, 1.0);
  const auto u0 = random_field(g, 2, 0.3, 2.0);
  const auto e = splitting_error(u0, 1e-2, 0.25, 1e-5, false);
  EXPECT_LE(e.c0, 1e-10);
  EXPECT_LE(e.c1, 1e-10);
}

TEST(Splitting, ZeroDataHasNoError) {
  const auto g = SpectralGrid::make(64, 1.0);
  const auto e = splitting_error(SpectralField(g), 1e-2, 0.25, 1e-4);
  EXPECT_EQ(e.c0, 0.0);
  EXPECT_EQ(e.c1, 0.0);
}

double monotone(double k, double H, double alpha) { return monotone_quantity(k, H, alpha); }

TEST(EnvelopeOde, RiccatiWithoutDissipation) {
  double k = 1.0, H = 2.0;
  const double dt = 1e-3;
  for (int i = 0; i < 500; ++i) std::tie(k, H) = envelope_ode_step(k, H, 0.25, 0.0, dt);
  EXPECT_NEAR(k, 2.0, 1e-10);
  EXPECT_EQ(H, 2.0);
}

TEST(EnvelopeOde, CriticalManifoldIsInvariant) {
  const double alpha = 0.3, c = 1.7, k = 5.0;
  const double q = c / (1 - 2 * alpha);
  const double H = std::pow(q / std::pow(k, 1 - 2 * alpha), 1 / (2 * alpha));
  ASSERT_NEAR(monotone(k, H, alpha), q, 1e-12 * q);
  const double dt = 1e-3;
  const auto [k1, H1] = envelope_ode_step(k, H, alpha, c, dt);
  EXPECT_LE(std::abs(monotone(k1, H1, alpha) - monotone(k, H, alpha)), 1e-10 * dt);
}

TEST(EnvelopeOde, CanonicalRunBlowsUpBeforeT) {
  const double alpha = 0.25, c = 1.0;
  const auto p = canonical_blowup_params(alpha, c);
  double k = p.kappa0, H = p.H0, t = 0.0;
  const double dt = p.T * 1e-5;
  double q = monotone(k, H, alpha);
  while (k < 1e6 * p.kappa0) {
    ASSERT_GE(std::pow(H, 2 * alpha), std::pow(p.H0, 2 * alpha) * (1 - alpha));
    if (monotone(k, H, alpha) >= 3 * c / (1 - 2 * alpha) * (1 - 1e-12)) {
      ASSERT_GE(envelope_rhs(k, H, alpha, c).first, 2.0 / 3.0 * k * k * (1 - 1e-12));
    }
    ASSERT_GE(k, 1.0 / (1.0 / p.kappa0 - 2.0 / 3.0 * t) * (1 - 1e-9));
    const double step = std::min(dt, 0.01 / k);
    std::tie(k, H) = envelope_ode_step(k, H, alpha, c, step);
    t += step;
    const double qn = monotone(k, H, alpha);
    ASSERT_GE(qn, q * (1 - 1e-14));
    q = qn;
  }
  EXPECT_LT(t, p.T);
}

TEST(EnvelopeOde, CollapseIsReported) {
  EXPECT_THROW(envelope_ode_step(1.0, 1e-3, 0.25, 100.0, 0.1), EnvelopeCollapseError);
  EXPECT_THROW(envelope_ode_step(1.0, 1.0, 0.5, 1.0, 0.1), ParameterError);
}

TEST(Recursion, PureSteepeningAndZeroStep) {
  EnvelopeState s;
  s.kappa = 3.0;
  s.H = 1.0;
  s.a = 0.5;
  s.L = 8.0;
  s.h = 0.1;
  s.c_alpha = 0.0;
  s.c_n = 0.0;
  const auto r = envelope_recursion_step(s, 2.0);
  EXPECT_NEAR(r.kappa, 3.0 / 0.7, 1e-14);
  EXPECT_EQ(r.H, 1.0);
  EXPECT_NEAR(r.a, 0.7, 1e-15);
  EXPECT_EQ(r.n, 1);
  s.h = 0.0;
  s.c_alpha = 1.0;
  const auto z = envelope_recursion_step(s, 2.0);
  EXPECT_EQ(z.kappa, s.kappa);
  EXPECT_EQ(z.H, s.H);
  EXPECT_EQ(z.a, s.a);
  s.h = 0.2;
  EXPECT_THROW(envelope_recursion_step(s, 2.0), ParameterError);
}

TEST(Recursion, SideConditionsRecorded) {
  EnvelopeState s;
  s.kappa = 1.0;
  s.H = 1.0;
  s.a = 1.9;
  s.L = 8.0;
  s.h = 0.1;
  const auto r = envelope_recursion_step(s, 2.0);
  EXPECT_FALSE(r.valid);
  EXPECT_EQ(r.failure, "L < 4a");
}

TEST(Recursion, FirstOrderAgreementWithOde) {
  const double alpha = 0.25, c = 1.0;
  const auto p = canonical_blowup_params(alpha, c);
  const double t0 = 0.5 * p.T;
  double k_ref = p.kappa0, H_ref = p.H0;
  const int fine = 200000;
  for (int i = 0; i < fine; ++i)
    std::tie(k_ref, H_ref) = envelope_ode_step(k_ref, H_ref, alpha, c, t0 / fine);
  std::vector<double> lx, ly;
  for (int n : {100, 200, 400, 800}) {
    EnvelopeState s;
    s.kappa = p.kappa0;
    s.H = p.H0;
    s.a = p.a;
    s.L = 1e6;
    s.alpha = alpha;
    s.c_alpha = c;
    s.h = t0 / n;
    for (int i = 0; i < n; ++i) s = envelope_recursion_step(s, 2.0);
    lx.push_back(std::log(s.h));
    ly.push_back(std::log(std::abs(s.kappa - k_ref)));
  }
  const double slope = (ly.back() - ly.front()) / (lx.back() - lx.front());
  EXPECT_GT(slope, 0.8);
  EXPECT_LT(slope, 1.2);
}

TEST(Canonical, QuarterAlphaUnitConstant) {
  const auto p = canonical_blowup_params(0.25, 1.0);
  EXPECT_NEAR(p.kappa0, 36.0, 1e-12);
  EXPECT_NEAR(p.T, 1.0 / 24, 1e-15);
  EXPECT_NEAR(p.a, 1.0 / 36, 1e-15);
  EXPECT_NEAR(p.L_min, 4.0 / 9, 1e-14);
  EXPECT_EQ(p.H0, 1.0);
  for (double alpha : {0.1, 0.25, 0.4}) {
    const auto q = canonical_blowup_params(alpha, 2.5);
    EXPECT_NEAR(monotone(q.kappa0, q.H0, alpha) / (2.5 / (1 - 2 * alpha)), 3.0, 1e-12);
  }
  EXPECT_THROW(canonical_blowup_params(0.5, 1.0), ParameterError);
  EXPECT_THROW(canonical_blowup_params(0.25, 0.0), ParameterError);
}

SolverConfig rescale_config(double alpha) {
  SolverConfig c;
  c.alpha = alpha;
  c.n_modes = 32;
  c.period = 2.0;
  c.t_end = 0.2;
  c.dt_max = 1e-3;
  c.record_every = 0.05;
  return c;
}

TEST(Rescale, IdentityScaling) {
  const auto c = rescale_config(0.25);
  auto u0 = sine_field(c.grid(), 1, 0.5);
  u0.set_mode(2, cplx(0.1, 0.1));
  const auto tr = run(c, u0);
  EXPECT_LE(rescale_check(tr, 1.0, 0.25), 1e-12);
}

TEST(Rescale, CriticalAlphaDoubledLength) {
  auto c = rescale_config(0.5);
  c.period = 4.0;
  auto u0 = sine_field(c.grid(), 1, 0.5);
  u0.set_mode(3, cplx(-0.1, 0.05));
  const auto tr = run(c, u0);
  EXPECT_LE(rescale_check(tr, 2.0, 0.5), 1e-6);
}

TEST(Rescale, AmplitudeOnlyDoesNotMatch) {
  const auto c = rescale_config(0.25);
  auto u0 = sine_field(c.grid(), 1, 0.5);
  u0.set_mode(2, cplx(0.1, 0.1));
  const auto tr = run(c, u0);
  EXPECT_LE(rescale_check(tr, 2.0, 0.25), 1e-6);
  EXPECT_GT(rescale_check(tr, 2.0, 0.25, RescaleMode::amplitude_only), 1e-3);
}

TEST(Rescale, MissingSnapshotsRejected) {
  auto c = rescale_config(0.25);
  c.keep_snapshots = false;
  const auto tr = run(c, sine_field(c.grid(), 1, 0.5));
  EXPECT_THROW(rescale_check(tr, 2.0, 0.25), AlignmentError);
}

TEST(DissipationFit, PositiveAndStableAsStepShrinks) {
  const auto fit = fit_dissipation_constant(0.25, {1e-3, 5e-4, 2.5e-4}, 64.0, 1 << 14);
  ASSERT_EQ(fit.c_h.size(), 3u);
  for (double c : fit.c_h) {
    EXPECT_GT(c, 0.0);
    EXPECT_LE(c, fit.pointwise_worst);
  }
  EXPECT_GT(fit.least_squares, 0.0);
  EXPECT_LT(std::abs(fit.c_h[2] / fit.c_h[1] - 1.0), 0.2);
}

}  // namespace
}  // namespace fburg
