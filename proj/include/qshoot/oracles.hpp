#pragma once

#include "qshoot/nonlinearity.hpp"

namespace qshoot::oracle {

/// First positive zero of J0 from its power series, refined by bisection.
double bessel_j0_first_zero();

/// J0(x) by the power series; adequate for |x| <= 10.
double bessel_j0_series(double x);

/// First zero of the radial solution of -Delta u = e^u (n = 2) with u(0) = gamma:
/// R^2 = 8 (e^{gamma/2} - 1) e^{-gamma}.
double liouville_radius(double gamma);

/// u(r) = log(8 mu / (1 + mu r^2)^2), mu = e^gamma / 8.
double liouville_profile(double gamma, double r);

/// First zero of -(r^{n-1} |w'|^{n-2} w')' = r^{n-1-beta} f(w), w(0) = gamma, w'(0) = 0,
/// integrated directly in r with Boost.Odeint (independent of the library integrator).
double weighted_radial_zero(const Nonlinearity& nl, int n, double beta, double gamma, double tol = 1e-12);

}  // namespace qshoot::oracle
