#include <gtest/gtest.h>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <fracburgers/integrator.hpp>
#include <fracburgers/modulus.hpp>
#include <random>

#include "test_util.hpp"

namespace fburg {
namespace {

using testing::sine_field;

const Calibration& calibrated() {
  static const Calibration c = calibrate_K(40);
  return c;
}

TEST(Omega, OriginValues) {
  const auto m = ModulusOfContinuity::make(50.0);
  EXPECT_EQ(m(0.0), 0.0);
  EXPECT_EQ(m.deriv(0.0), 1.0);
  EXPECT_THROW(m(-1e-3), ParameterError);
  EXPECT_THROW(ModulusOfContinuity::make(4 * kPi), ParameterError);
}

TEST(Omega, JunctionContinuity) {
  const auto m = ModulusOfContinuity::make(50.0);
  EXPECT_DOUBLE_EQ(m.xi0, std::pow(50.0 / (4 * kPi), 2));
  EXPECT_NEAR(m.left_value(m.xi0), m.cK * std::log(m.xi0), 1e-14);
}

TEST(Omega, DerivativesMatchDifferences) {
  const auto m = ModulusOfContinuity::make(16 * kPi);
  for (double xi : {1e-4, 0.3, 2.0, 9.0, 15.5, 40.0, 1e5}) {
    const double h = 1e-4 * xi;
    const double d1 = (m(xi + h) - m(xi - h)) / (2 * h);
    const double d2 = (m(xi + h) - 2 * m(xi) + m(xi - h)) / (h * h);
    EXPECT_NEAR(m.deriv(xi), d1, 1e-7 * std::abs(d1)) << xi;
    EXPECT_NEAR(m.second_derivative(xi), d2, 1e-4 * std::abs(d2)) << xi;
  }
  // One-sided difference quotients at the junction.
  const double h = 1e-7 * m.xi0;
  EXPECT_NEAR(m.deriv(m.xi0, Side::left), (m(m.xi0) - m(m.xi0 - h)) / h, 1e-9);
  EXPECT_NEAR(m.deriv(m.xi0, Side::right), (m(m.xi0 + h) - m(m.xi0)) / h, 1e-9);
}

TEST(Omega, JunctionConcavityThreshold) {
  // Left/right slopes at xi0: 8 pi gives 0.00994 < 0.0140, 16 pi gives 0.00249 > 0.00179.
  const auto a = ModulusOfContinuity::make(8 * kPi);
  const auto b = ModulusOfContinuity::make(16 * kPi);
  EXPECT_FALSE(a.junction_concave());
  EXPECT_TRUE(b.junction_concave());
  const double q = 1 + 64 * kPi;
  EXPECT_NEAR(b.deriv(b.xi0, Side::left), (2 + 64 * kPi) / (2 * q * q), 1e-15);
  EXPECT_NEAR(b.deriv(b.xi0, Side::right), 1 / (q * std::log(16.0)), 1e-15);
}

TEST(Omega, ConcaveOnRandomPairs) {
  const auto& m = calibrated().modulus;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-8, 8);
  for (int i = 0; i < 2000; ++i) {
    const double x = std::pow(10.0, u(rng)), y = std::pow(10.0, u(rng));
    EXPECT_GE(m(0.5 * (x + y)), 0.5 * (m(x) + m(y)) * (1 - 1e-14));
  }
}

TEST(Omega, InverseRoundTrip) {
  const auto m = ModulusOfContinuity::make(16 * kPi);
  for (double xi : log_grid(1e-8, 1e12, 60))
    EXPECT_NEAR(m.inverse(m(xi)), xi, 1e-10 * xi);
  EXPECT_EQ(m.inverse(0.0), 0.0);
}

struct Linear {
  double operator()(double x) const { return x; }
};

// a x - b x^2 up to its maximum at x = 3, constant beyond.
struct Quadratic {
  double a = 3.0, b = 0.5;
  double operator()(double x) const {
    x = std::min(x, a / (2 * b));
    return a * x - b * x * x;
  }
  double second_derivative(double) const { return -2 * b; }
};

struct LogModulus {
  double operator()(double x) const { return std::log1p(x); }
  double second_derivative(double x) const { return -1.0 / ((1 + x) * (1 + x)); }
};

TEST(Dissipation, LinearModulusGivesZero) {
  for (double xi : {1e-3, 1.0, 50.0}) {
    const auto d = dissipation_integrals(Linear{}, xi);
    EXPECT_EQ(d.I1, 0.0);
    EXPECT_NEAR(d.I2, 0.0, 1e-15);
  }
}

TEST(Dissipation, QuadraticFirstIntegralClosedForm) {
  // Second difference is -8 b eta^2, so I1 = -4 b xi / pi.
  for (double xi : {0.1, 1.0, 1.4}) {
    const auto d = dissipation_integrals(Quadratic{}, xi, {3.0});
    EXPECT_NEAR(d.I1, -4 * 0.5 * xi / kPi, 1e-10 * xi);
  }
}

TEST(Dissipation, MatchesIndependentQuadrature) {
  const LogModulus w;
  boost::math::quadrature::tanh_sinh<double> ts;
  boost::math::quadrature::exp_sinh<double> es;
  for (double xi : {0.01, 1.0, 30.0}) {
    const double wx = w(xi);
    auto f1 = [&](double e) { return (w(xi + 2 * e) + w(xi - 2 * e) - 2 * wx) / (e * e); };
    auto f2 = [&](double s) {
      const double e = 0.5 * xi + s;
      return (w(2 * e + xi) - w(2 * e - xi) - 2 * wx) / (e * e);
    };
    const double i1 = ts.integrate(f1, 1e-3 * xi, 0.5 * xi) / kPi +
                      4 * w.second_derivative(xi) * 1e-3 * xi / kPi;
    const double i2 = es.integrate(f2) / kPi;
    const auto d = dissipation_integrals(w, xi);
    EXPECT_NEAR(d.I1, i1, 1e-6 * std::abs(i1)) << xi;
    EXPECT_NEAR(d.I2, i2, d.err2 + 1e-9) << xi;
    EXPECT_LT(d.I1, 0.0);
    EXPECT_LT(d.I2, 0.0);
  }
}

TEST(Dissipation, SecondIntegralBoundAtJunction) {
  const auto& m = calibrated().modulus;
  ASSERT_LE(m(2 * m.xi0), 1.5 * m(m.xi0));
  const auto d = dissipation_integrals(m, m.xi0);
  EXPECT_LE(d.I2, -m(m.xi0) / (kPi * m.xi0));
}

TEST(Dissipation, FirstIntegralBelowCurvatureBound) {
  const auto& m = calibrated().modulus;
  for (double xi : log_grid(1e-6 * m.xi0, 0.999 * m.xi0, 30)) {
    const auto d = dissipation_integrals(m, xi);
    EXPECT_LE(d.I1, xi * m.second_derivative(xi) / kPi + d.err1) << xi;
  }
}

TEST(Calibration, ReturnsSixteenPi) {
  const auto& c = calibrated();
  EXPECT_GT(c.modulus.K, 4 * kPi);
  EXPECT_NEAR(c.modulus.K, 16 * kPi, 1e-12);
  EXPECT_TRUE(c.modulus.junction_concave());
  ASSERT_GE(c.log.size(), 2u);
  EXPECT_TRUE(c.log.back().pass);
  for (std::size_t i = 0; i + 1 < c.log.size(); ++i) EXPECT_FALSE(c.log[i].pass);
  // A quarter of the returned K does not define a modulus at all (xi0 = 1).
  EXPECT_THROW(ModulusOfContinuity::make(c.modulus.K / 4), ParameterError);
}

TEST(Calibration, SmallXiIsDominatedByDissipation) {
  const auto& m = calibrated().modulus;
  for (double xi : {1e-10, 1e-8, 1e-6}) EXPECT_LT(inequality_b(m, xi), 0.0);
  // 2 omega omega' ~ 2 xi while I1 ~ xi omega''/pi ~ -sqrt(xi)
  EXPECT_LT(inequality_b(m, 1e-8) / inequality_b(m, 1e-6), 0.2);
}

TEST(ChooseB, ZeroFieldRejected) {
  const auto& m = calibrated().modulus;
  EXPECT_THROW(choose_B(m, SpectralField(SpectralGrid::make(8, 1.0))), ParameterError);
}

TEST(ChooseB, DisplayedFormulaHomogeneity) {
  const auto& m = calibrated().modulus;
  const double a = gradient_control_log_B(m, 0.7, 3.0);
  const double b = gradient_control_log_B(m, 1.4, 3.0);
  EXPECT_NEAR(b - a, 0.7 / m.cK, 1e-12);
}

TEST(ChooseB, SineDataHasModulus) {
  const auto& m = calibrated().modulus;
  const auto g = SpectralGrid::make(64, 1.0);
  const auto u = sine_field(g, 1);
  const auto w = choose_B(m, u);
  const auto chk = check_field_modulus(u, w);
  EXPECT_GE(chk.margin, -chk.grid_tol);
  // The displayed formula alone undershoots for this data.
  const ScaledModulus weak{m, gradient_control_log_B(m, 1.0, 2 * kPi)};
  EXPECT_LT(check_field_modulus(u, weak).margin, 0.0);
}

TEST(CheckModulus, ZeroFieldMarginIsSmallestLag) {
  const auto m = ModulusOfContinuity::make(16 * kPi);
  const auto g = SpectralGrid::make(16, 1.0);
  const ScaledModulus w{m, std::log(3.0)};
  const auto chk = check_field_modulus(SpectralField(g), w);
  EXPECT_DOUBLE_EQ(chk.margin, w(g.period / (4 * g.n_samples)));
}

TEST(CheckModulus, SteepFieldFails) {
  // |u'| = 2 pi > B = pi: the modulus fails, worst at the half-period lag
  // where the increment is 2.
  const auto m = ModulusOfContinuity::make(16 * kPi);
  const auto g = SpectralGrid::make(32, 1.0);
  const auto u = sine_field(g, 1);
  const ScaledModulus w{m, std::log(kPi)};
  const double dx = g.period / (4 * g.n_samples);
  EXPECT_LT(w(dx), 2 * kPi * dx * 0.99);
  const auto chk = check_field_modulus(u, w);
  EXPECT_NEAR(chk.margin, w(0.5) - 2.0, 1e-12);
  EXPECT_NEAR(chk.worst_lag, 0.5, 1e-15);
}

TEST(CheckModulus, SaturatingProfile) {
  // u(x) = omega_B(|x|) on [-1/2, 1/2]: the modulus holds with equality at x = 0.
  const auto m = ModulusOfContinuity::make(16 * kPi);
  const ScaledModulus w{m, std::log(4.0)};
  const auto g = SpectralGrid::make(2048, 1.0);
  const int n = 1 << 16;
  std::vector<double> s(n);
  for (int j = 0; j < n; ++j) {
    const double x = j < n / 2 ? j * 1.0 / n : 1.0 - j * 1.0 / n;
    s[j] = w(x);
  }
  const auto u = analyze_any(s, g);
  const auto chk = check_field_modulus(u, w);
  EXPECT_LT(std::abs(chk.margin), 2e-3);
  EXPECT_LT(chk.worst_lag, 0.01);
}

TEST(CheckModulus, PreservedAlongCriticalRun) {
  const auto& m = calibrated().modulus;
  SolverConfig c;
  c.alpha = 0.5;
  c.n_modes = 128;
  c.t_end = 0.5;
  c.dt_max = 1e-3;
  c.record_every = 0.05;
  auto u0 = sine_field(c.grid(), 1, 1.0);
  u0.set_mode(2, cplx(0.2, 0.1));
  const auto w = choose_B(m, u0);
  const auto tr = run(c, u0, {[&](const SpectralField& u, DiagnosticsRecord& r) {
                        const auto chk = check_field_modulus(u, w);
                        r.modulus_margin = chk.margin;
                        r.extra["grid_tol"] = chk.grid_tol;
                      }});
  for (const auto& r : tr.records) {
    EXPECT_GE(r.modulus_margin, -r.extra.at("grid_tol"));
    EXPECT_LE(std::log(r.w1inf), w.log_B);
  }
}

TEST(RoughSchedule, MonotoneAndNormalized) {
  const auto m = ModulusOfContinuity::make(16 * kPi);
  const auto sch = rough_modulus_schedule(2.0, 0.05, m);
  double prev = std::numeric_limits<double>::infinity();
  for (double t : log_grid(1e-4, 1.0, 20)) {
    const double f = sch.log_F(t);
    EXPECT_LT(f, prev);
    EXPECT_EQ(f + sch.log_integral(t), 0.0);
    prev = f;
  }
  EXPECT_NEAR(sch(1.0) * sch.integral(1.0), 1.0, 1e-14);
  // G is omega(x)/x at x = omega^-1(y), hence at most omega'(0+) = 1.
  for (double s : {1e-6, 1e-2, 1.0, 1e3}) {
    EXPECT_GE(sch.G(s), 0.0);
    EXPECT_LE(sch.G(s), 1.0);
  }
  EXPECT_THROW(rough_modulus_schedule(1.0, 1.0, m), ParameterError);
}

}  // namespace
}  // namespace fburg
