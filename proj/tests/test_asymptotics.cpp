#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <limits>
#include <sstream>

#include "qshoot/asymptotics.hpp"
#include "qshoot/errors.hpp"
#include "qshoot/shooting.hpp"

using namespace qshoot;

namespace {

const Nonlinearity kSquare = Nonlinearity::pow_exp(1.0, 1.0, 2.0, 0.0, 0.0);
const Nonlinearity kSub = Nonlinearity::pow_exp(1.0, 1.0, 1.5, 0.0, 0.0);

// z' written directly from its definition, independent of comparison_z.
double zprime(const GammaSnapshot& s, double t) {
  const double X = std::exp((s.T1 - t) / (s.n - 1.0));
  return (s.n / ((s.n - 1.0) * s.gp)) * X / (1.0 + X);
}

double tail_quad(const std::function<double(double)>& f, double t) {
  boost::math::quadrature::exp_sinh<double> q;
  return q.integrate([&](double u) { return f(t + u); }, 0.0, std::numeric_limits<double>::infinity(), 1e-14);
}

}  // namespace

TEST_CASE("harmonic numbers and exact identities") {
  CHECK(harmonic(1) == 1.0);
  CHECK(harmonic(2) == doctest::Approx(1.5));
  CHECK(harmonic(3) == doctest::Approx(11.0 / 6.0));
  CHECK(1.0 / 2 - 2.0 / 3 + 1.0 / 4 == doctest::Approx(1.0 / 12));
  for (int k = 1; k <= 12; ++k) {
    CHECK(harmonic_identity_exact(k));
    CHECK(beta_identity_exact(k));
  }
}

TEST_CASE("snapshot landmarks") {
  const GammaSnapshot s = make_snapshot(kSquare, 2, 5.0);
  CHECK(s.g == doctest::Approx(25.0));
  CHECK(s.gp == doctest::Approx(10.0));
  CHECK(s.T1 == doctest::Approx(25.0 + std::log(5.0)));
  CHECK(s.T0 < s.T1);
  CHECK(s.alpha_n == doctest::Approx(1.5));

  // T1 - T0 ~ ((n-1)/n) gamma g'
  for (int n : {2, 3}) {
    double prev = 1e9;
    for (double g : {0.3, 0.6, 1.2, 2.4}) {
      const GammaSnapshot q = make_snapshot(kSub, n, g);
      const double ratio = (q.T1 - q.T0) / (((n - 1.0) / n) * g * q.gp);
      CHECK(std::abs(ratio - 1.0) < prev);
      prev = std::abs(ratio - 1.0);
    }
    CHECK(prev < 0.5);
  }
  CHECK_THROWS_AS(make_snapshot(kSquare.scaled(1.0), 2, 0.0), DomainError);
}

TEST_CASE("comparison solution") {
  for (int n : {2, 3}) {
    const GammaSnapshot s = make_snapshot(kSquare, n, 5.0);
    CHECK(std::abs(comparison_z(s, s.T0).z) < 1e-12);
    const ZValue far = comparison_z(s, s.T1 + 80.0 * n);
    CHECK(far.z == doctest::Approx(5.0));
    CHECK(far.zp < 1e-20);
    CHECK(comparison_z(s, s.T1).zp == doctest::Approx((n / (n - 1.0)) / s.gp / 2.0));
    // derivative consistency with the closed form
    const double t = s.T1 + 0.3, h = 1e-5;
    CHECK(comparison_z(s, t).zp ==
          doctest::Approx((comparison_z(s, t + h).z - comparison_z(s, t - h).z) / (2 * h)).epsilon(1e-7));
    CHECK(comparison_z(s, t).zp == doctest::Approx(zprime(s, t)).epsilon(1e-14));
  }
}

TEST_CASE("psi") {
  const GammaSnapshot s = make_snapshot(kSquare, 2, 5.0);
  CHECK(psi_eval(s, kSquare, 5.0) == doctest::Approx(-std::log(5.0)));
  const GammaSnapshot q = make_snapshot(kSub, 3, 8.0);
  CHECK(psi_eval(q, kSub, 8.0) == doctest::Approx(-2.0 * std::log((2.0 / 3.0) * q.gp)));
  for (double a : {0.5, 2.0}) {
    const double b = 8.0;
    CHECK(psi_eval(q, kSub, 0.5 * (a + b)) <= std::max(psi_eval(q, kSub, a), psi_eval(q, kSub, b)));
  }
}

TEST_CASE("predictions") {
  const AsymptoticPrediction p = predict_all(make_snapshot(kSub, 2, 100.0));
  CHECK(p.Tprime_pred == doctest::Approx(3.75));
  const AsymptoticPrediction c = predict_all(make_snapshot(kSquare, 2, 5.0));
  CHECK(c.T_pred == doctest::Approx(std::log(5.0) + 1.5));
  CHECK(c.yprime_T_pred == doctest::Approx(2.0 / 10.0 + 4.0 * 1.5 * 2.0 / 1000.0));
  CHECK_FALSE(c.T_error_order.empty());

  const GammaSnapshot s = make_snapshot(kSub, 2, 37.0);
  const AsymptoticPrediction a = predict_all(s, 0.25), b = predict_all(s, 0.25);
  CHECK(a.T_pred == b.T_pred);
  CHECK(a.S_pred == b.S_pred);
  CHECK(a.T_pred == doctest::Approx(predict_all(s).T_pred + 0.25));
}

TEST_CASE("correction A") {
  const Nonlinearity fam = Nonlinearity::pow_exp(1.0, 1.0, 1.5, 1.0, 1.0);
  const GammaSnapshot sf = make_snapshot(fam, 2, 10.0);
  CHECK(correction_A(sf, fam, 0.0, 0.5) == 0.0);

  // critical growth with f(0) = 1: T stays below the anchor t0 and A is active
  ShootConfig cfg;
  double lo = 1e300, hi = -1e300;
  for (double g : {3.0, 5.0, 8.0, 12.0}) {
    const GammaSnapshot s = make_snapshot(kSquare, 2, g);
    const ShootResult res = shoot_with_trajectory(kSquare, 2, g, cfg);
    const double t0 = correction_A_anchor(s);
    REQUIRE(res.outcome.T < t0);
    REQUIRE(res.trajectory.covers(t0));
    const auto u = res.trajectory.eval(t0);
    const double yp = res.trajectory.derivative(t0, u[1]);
    const double A = correction_A(s, kSquare, res.outcome.T, yp);
    const double theta0 = std::log(yp);  // -log f(0) + (n-1) log y'(t0)
    boost::math::quadrature::tanh_sinh<double> q;
    const double ref = q.integrate([](double v) { return (1.0 + std::exp(-v)) - 1.0; }, res.outcome.T + theta0,
                                   t0 + theta0, 1e-13);
    CHECK(A == doctest::Approx(ref).epsilon(1e-9));
    CHECK(A > 0.0);
    lo = std::min(lo, A);
    hi = std::max(hi, A);
  }
  CHECK(hi - lo < 1.0);
}

TEST_CASE("closed-form integrals against quadrature") {
  const GammaSnapshot s = make_snapshot(kSquare, 2, 5.0);
  const double q3 = tail_quad([&](double u) { return std::pow(zprime(s, u), 3); }, s.T1);
  CHECK(zprime_power_integral(2, s, s.T1) == doctest::Approx(q3).epsilon(1e-10));

  for (int n : {2, 3}) {
    const GammaSnapshot g = make_snapshot(kSub, n, 7.0);
    double prev = 1e300;
    for (double dt : {-3.0, 0.0, 2.0, 10.0, 40.0}) {
      const double v = zprime_power_integral(n, g, g.T1 + dt);
      CHECK(v < prev);
      prev = v;
    }
    CHECK(zprime_power_integral(1, g, g.T1 + 800.0) == doctest::Approx(0.0));
  }

  // I2 at X = 1
  const V2Integrals at1 = v2_weighted_integrals(s, s.T1);
  CHECK(at1.I2 == doctest::Approx(1.0 / (3.0 * s.gp * s.gp)));

  for (int n : {2, 3}) {
    const GammaSnapshot g = make_snapshot(kSquare, n, 5.0);
    const double nm1 = n - 1.0, C = n / (nm1 * g.gp);
    auto v2p = [&](double t) {
      const double X = std::exp((g.T1 - t) / nm1);
      return (n / (nm1 * nm1)) * X / ((1 + X) * (1 + X));
    };
    auto zpp = [&](double t) {
      const double X = std::exp((g.T1 - t) / nm1);
      return -(C / nm1) * X / ((1 + X) * (1 + X));
    };
    for (double dt : {-2.0, 0.0, 5.0 * nm1}) {
      const double t = g.T1 + dt;
      const V2Integrals L = v2_weighted_integrals(g, t);
      const double q1 = tail_quad([&](double u) { return std::pow(zprime(g, u), n - 2) * zpp(u) * v2p(u); }, t);
      const double q2 = tail_quad([&](double u) { return std::pow(zprime(g, u), n) * v2p(u); }, t);
      CHECK(L.I1 == doctest::Approx(q1).epsilon(1e-9));
      CHECK(L.I2 == doctest::Approx(q2).epsilon(1e-9));
      CHECK(L.I == doctest::Approx((g.gpp / g.gp) * L.I1 + g.gpp * L.I2));
    }
    // t -> -inf: I -> g'' C^n [n/((n-1)(n+1)) - 1/((n-1) n (n+1))]
    const double lim = g.gpp * std::pow(C, n) * (n / (nm1 * (n + 1.0)) - 1.0 / (nm1 * n * (n + 1.0)));
    CHECK(v2_weighted_integrals(g, g.T1 - 60.0 * nm1).I == doctest::Approx(lim).epsilon(1e-12));
  }
}

TEST_CASE("polynomial root near a") {
  CHECK(perturbed_root(1.0, 2, 0.0).X == 1.0);
  CHECK(perturbed_root(1.0, 2, 0.1).X == doctest::Approx((1.0 + std::sqrt(1.4)) / 2.0).epsilon(1e-14));
  CHECK(std::abs(perturbed_root(2.0, 3, 0.01).X - 2.0 - 0.01 / 4.0) <= 1e-4);
  double prevC = -1.0;
  for (double b : {1e-2, 1e-3, 1e-4}) {
    const RootResult r = perturbed_root(2.0, 3, b);
    CHECK(r.C == doctest::Approx(2.0).epsilon(0.01));  // second-order coefficient n - 1
    if (prevC >= 0) CHECK(std::abs(r.C - 2.0) < std::abs(prevC - 2.0));
    prevC = r.C;
  }
  CHECK_THROWS_AS(perturbed_root(1.0, 2, -10.0), SolverError);
}

TEST_CASE("error decay report") {
  const auto refused = error_decay_report(Nonlinearity::linear(), 2, {{1.0, 1.0, 1.0}, {2.0, 1.0, 1.0}});
  CHECK(refused.refused);
  CHECK(error_decay_report(kSub, 2, {{20.0, 1.0, 1.0}}).refused);

  ShootConfig cfg;
  std::vector<DecayInput> in;
  for (double g : log_grid(20.0, 200.0, 10)) {
    const ShootOutcome o = shoot(kSub, 2, g, cfg);
    in.push_back({g, o.T, o.yprime_T});
  }
  const DecayReport rep = error_decay_report(kSub, 2, in);
  REQUIRE_FALSE(rep.refused);
  bool seen = false;
  for (const DecayVerdict& v : rep.verdicts) {
    if (v.quantity != "T") continue;
    seen = true;
    CHECK(v.bounded);
    CHECK(v.max_over_min <= 10.0);
  }
  CHECK(seen);
  std::ostringstream os;
  write_decay_csv(rep, os);
  CHECK(os.str().rfind("gamma,gprime,Q,computed,predicted,raw_err,normalized_err\n", 0) == 0);
}
