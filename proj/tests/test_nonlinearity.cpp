#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "qshoot/errors.hpp"
#include "qshoot/nonlinearity.hpp"

using namespace qshoot;

TEST_CASE("g and its derivatives") {
  const auto sq = Nonlinearity::pow_exp(1.0, 1.0, 2.0, 0.0, 0.0);
  CHECK(sq.g(3.0, 0) == doctest::Approx(9.0));
  CHECK(sq.g(3.0, 1) == doctest::Approx(6.0));
  CHECK(sq.g(3.0, 2) == doctest::Approx(2.0));
  CHECK(sq.g(3.0, 3) == doctest::Approx(0.0));

  const auto withlog = Nonlinearity::pow_exp(1.0, 1.0, 2.0, 2.0, 0.0);
  CHECK(withlog.g(std::exp(1.0), 0) == doctest::Approx(std::exp(2.0) + 2.0).epsilon(1e-14));

  // central differences of g against the analytic derivatives
  const auto nl = Nonlinearity::pow_exp(1.0, 1.3, 1.5, 1.0, 0.7);
  const double h = 1e-4;
  for (double u : {0.7, 2.0, 9.0}) {
    for (int k = 0; k < 3; ++k) {
      const double fd = (nl.g(u + h, k) - nl.g(u - h, k)) / (2 * h);
      CHECK(nl.g(u, k + 1) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("source in log space") {
  const auto sq = Nonlinearity::pow_exp(1.0, 1.0, 2.0, 0.0, 0.0);
  CHECK(sq.source(10.0, 100.0) == doctest::Approx(1.0));
  CHECK(sq.source(0.0, 0.0) == doctest::Approx(1.0));
  CHECK(sq.f0() == doctest::Approx(1.0));
  const auto two = Nonlinearity::pow_exp(2.0, 1.0, 2.0, 0.0, 0.0);
  CHECK(two.source(1.0, 1.0) == doctest::Approx(2.0));

  // f alone overflows while the product stays finite
  CHECK(sq.source(30.0, 890.0) == doctest::Approx(std::exp(10.0)));
  CHECK_THROWS_AS(sq.f(30.0), RangeError);
  CHECK(sq.source_prime(30.0, 890.0) == doctest::Approx(60.0 * std::exp(10.0)));

  // f(0) = 0 when a log term is present
  const auto ue = Nonlinearity::pow_exp(1.0, 1.0, 2.0, 1.0, 0.0);
  CHECK(ue.f0() == 0.0);
  CHECK(ue.source(0.0, 0.0) == 0.0);
}

TEST_CASE("growth exponents near zero") {
  CHECK(Nonlinearity::pow_exp(1.0, 1.0, 2.0, 0.5, 0.0).beta_growth() == doctest::Approx(0.5));
  CHECK(Nonlinearity::pow_exp(1.0, 1.0, 2.0, 0.5, 0.0).alpha_growth() == doctest::Approx(0.5));
  CHECK(Nonlinearity::pow_exp(1.0, 1.0, 2.0, 0.0, 1.0).beta_growth() == doctest::Approx(1.0));
}

TEST_CASE("hypothesis gating") {
  CHECK(Nonlinearity::pow_exp(1.0, 1.0, 1.5, 1.0, 1.0).within_hypothesis(2));
  CHECK(Nonlinearity::pow_exp(1.0, 1.0, 2.0, 1.0, 0.0).within_hypothesis(2));
  CHECK_FALSE(Nonlinearity::pow_exp(1.0, 1.0, 2.0, 1.0, 0.0).within_hypothesis(3));
  CHECK_FALSE(Nonlinearity::linear().within_hypothesis(2));
  CHECK_FALSE(Nonlinearity::exponential().within_hypothesis(2));
  CHECK_THROWS_AS(Nonlinearity::pow_exp(-1.0, 1.0, 1.5, 0.0, 0.0), DomainError);
  CHECK_THROWS_AS(family_from_string("cubic"), ConfigError);
}

TEST_CASE("hypothesis probes") {
  const auto grid = default_hypothesis_grid();
  const auto critical = check_hypotheses(Nonlinearity::pow_exp(1.0, 1.0, 2.0, 1.0, 0.0), 2, grid);
  CHECK(critical.h3.verdict == HypothesisVerdict::fails);

  const auto fam2 = check_hypotheses(Nonlinearity::pow_exp(1.0, 1.0, 1.5, 1.0, 1.0), 2, grid);
  CHECK(fam2.h1.verdict == HypothesisVerdict::holds);
  CHECK(fam2.h2.verdict == HypothesisVerdict::holds);
  CHECK(fam2.h3.verdict == HypothesisVerdict::holds);

  const auto sub = check_hypotheses(Nonlinearity::pow_exp(1.0, 1.0, 1.5, 0.0, 0.0), 2, grid);
  CHECK(sub.h3.verdict == HypothesisVerdict::holds);
}

TEST_CASE("convexity threshold") {
  CHECK(find_s0(Nonlinearity::pow_exp(1.0, 1.0, 2.0, 0.0, 0.0)).s0 == doctest::Approx(0.0).epsilon(0.01));

  const auto shifted = Nonlinearity::pow_exp(1.0, 1.0, 2.0, 0.0, -10.0);
  CHECK(find_s0(shifted).s0 == doctest::Approx(5.0).epsilon(0.002));

  // g = u^1.5 + 2 log u: g'' changes sign once at (8/3)^(2/3)
  const auto nl = Nonlinearity::pow_exp(1.0, 1.0, 1.5, 2.0, 0.0);
  const double s0 = find_s0(nl).s0;
  CHECK(s0 == doctest::Approx(std::pow(8.0 / 3.0, 2.0 / 3.0)).epsilon(0.005));
  CHECK(nl.g(s0 + 0.01, 2) > 0.0);
  CHECK(nl.g(s0 - 0.05, 2) < 0.0);
}

TEST_CASE("tabulated correction matches the analytic term") {
  std::vector<double> vals;
  const double h = 0.01;
  for (int i = 0; i <= 2000; ++i) vals.push_back(0.5 * i * h + std::sin(i * h));
  const auto tab = Nonlinearity::tabulated(1.0, 1.0, 1.5, 0.0, 0.0, TabulatedRho(h, vals));
  for (double u : {1.234, 5.0, 12.3456}) {
    CHECK(tab.g(u, 0) == doctest::Approx(std::pow(u, 1.5) + 0.5 * u + std::sin(u)).epsilon(1e-10));
    CHECK(tab.g(u, 1) == doctest::Approx(1.5 * std::sqrt(u) + 0.5 + std::cos(u)).epsilon(1e-8));
    CHECK(tab.rho(u, 3) == doctest::Approx(-std::cos(u)).epsilon(1e-4));
  }
}

TEST_CASE("scaling and description") {
  const auto nl = Nonlinearity::pow_exp(1.0, 1.0, 1.5, 1.0, 1.0);
  const auto s = nl.scaled(3.0);
  CHECK(s.lambda() == doctest::Approx(3.0));
  CHECK(s.log_f(2.0) == doctest::Approx(nl.log_f(2.0) + std::log(3.0)));
  CHECK(nl.describe() == nl.describe());
  CHECK(nl.describe().find("q=1.5") != std::string::npos);
}
