#include "qshoot/oracles.hpp"

#include <boost/numeric/odeint.hpp>

#include <array>
#include <cmath>

#include "qshoot/errors.hpp"

namespace qshoot::oracle {

double bessel_j0_series(double x) {
  const double q = -0.25 * x * x;
  double term = 1.0, sum = 1.0;
  for (int k = 1; k < 200; ++k) {
    term *= q / (static_cast<double>(k) * k);
    sum += term;
    if (std::abs(term) < 1e-18 * std::abs(sum)) break;
  }
  return sum;
}

double bessel_j0_first_zero() {
  double a = 2.0, b = 3.0;  // J0(2) > 0 > J0(3)
  for (int i = 0; i < 200 && b - a > 1e-16; ++i) {
    const double m = 0.5 * (a + b);
    if (bessel_j0_series(m) > 0.0) a = m; else b = m;
  }
  return 0.5 * (a + b);
}

double liouville_radius(double gamma) {
  return std::sqrt(8.0 * std::expm1(0.5 * gamma) * std::exp(-gamma));
}

double liouville_profile(double gamma, double r) {
  const double mu = std::exp(gamma) / 8.0;
  const double d = 1.0 + mu * r * r;
  return std::log(8.0 * mu / (d * d));
}

double weighted_radial_zero(const Nonlinearity& nl, int n, double beta, double gamma, double tol) {
  namespace odeint = boost::numeric::odeint;
  using State = std::array<double, 2>;  // (w, Phi)
  if (!(beta >= 0.0 && beta < n)) throw DomainError("weighted oracle needs 0 <= beta < n");
  const double nm1 = n - 1.0;
  const double k = n - beta;
  const double f = nl.f(gamma);

  auto rhs = [&](const State& s, State& d, double r) {
    const double m = std::abs(s[1]) / std::pow(r, nm1);
    d[0] = (s[1] > 0.0 ? 1.0 : -1.0) * std::pow(m, 1.0 / nm1);
    d[1] = -nl.f(std::max(s[0], 0.0)) * std::pow(r, nm1 - beta);
  };
  // Series start: Phi ~ -f r^k / k, w ~ gamma - ((n-1)/k) (f/k)^{1/(n-1)} r^{k/(n-1)}.
  const double r0 = std::min(1e-4, std::pow(tol * k / f, nm1 / k));
  State s{gamma - (nm1 / k) * std::pow(f / k, 1.0 / nm1) * std::pow(r0, k / nm1), -f * std::pow(r0, k) / k};

  auto stepper = odeint::make_dense_output(tol, tol, odeint::runge_kutta_dopri5<State>());
  stepper.initialize(s, r0, 1e-6 * r0);
  for (int it = 0; it < 10'000'000; ++it) {
    const auto span = stepper.do_step(rhs);
    const State& cur = stepper.current_state();
    if (cur[0] <= 0.0) {
      double a = span.first, b = span.second;
      State tmp;
      while (b - a > 1e-14 * b) {
        const double m = 0.5 * (a + b);
        stepper.calc_state(m, tmp);
        if (tmp[0] > 0.0) a = m; else b = m;
      }
      return 0.5 * (a + b);
    }
    if (stepper.current_time() > 1e8) break;
  }
  throw SolverError("weighted oracle: no zero found", stepper.current_time(), stepper.current_state()[0]);
}

}  // namespace qshoot::oracle
