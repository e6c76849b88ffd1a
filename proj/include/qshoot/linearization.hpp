#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qshoot/asymptotics.hpp"
#include "qshoot/shooting.hpp"

namespace qshoot {

struct LinearizationResult {
  ShootResult shot;  ///< trajectory carries (V1, phi)
  double V1_at_T = 0.0;
};

/// Co-integrate (y, psi, V1, phi) down to T(gamma). On the radial route the
/// channel is (W1, Phi1) = d(w, Phi)/dgamma and V1(T) = W1(R).
LinearizationResult solve_V1(const Nonlinearity& nl, int n, double gamma, const ShootConfig& cfg);

struct TPrime {
  double value = 0.0;
  bool degenerate = false;  ///< y'(T) below 1e-14: no value
};

/// T'(gamma) = -V1(T) / y'(T).
TPrime t_prime(const ShootOutcome& outcome, double V1_at_T);

/// V2, V2', V2'' at t for the snapshot of (nl, n, gamma).
V2Value v2_eval(const Nonlinearity& nl, int n, double gamma, double t);

struct TurningReport {
  std::optional<double> S1;  ///< largest t where V1 changes sign
  std::optional<double> S;   ///< largest t where V1' changes sign
  double S0 = 0.0;           ///< zero of the comparison V2
  double S_predicted = 0.0;  ///< T1 + (n-1) log((n-1) g''/(g')^2)
  double V2prime_at_S = 0.0; ///< comparator (n/(n-1)) g''/(g')^2
  double S6 = 0.0;           ///< T1 - (4q/(q-1) + 1)(n-1) log g', reported only
  std::optional<bool> S_above_S6;
};

/// Landmarks of a function given as callables on a grid of knots ordered
/// from the largest t downward. Crossings are refined by bisection.
TurningReport detect_turning(const std::function<double(double)>& V1, const std::function<double(double)>& V1prime,
                             const std::vector<double>& knots_descending, const GammaSnapshot& snap, double q);

/// Same on a trajectory with linearization (t or r variable).
TurningReport detect_turning(const Trajectory& lin_traj, const GammaSnapshot& snap, double q);

struct JIdentityReport {
  double a = 0.0;
  double b = 0.0;
  double J_a = 0.0;
  double J_b = 0.0;
  double int_y2 = 0.0;     ///< int (g''/g') y'' (y')^{n-2} V1'
  double int_ypow = 0.0;   ///< int (g'' + g'''/g' - (g''/g')^2) (y')^n V1'
  double residual = 0.0;   ///< |J(a) - J(b) - integrals| / largest term
  /// Same residual with J's first factor taken literally as 1 - g' y' - g''/g'.
  double residual_literal = 0.0;
  std::size_t panels = 0;
  std::size_t panels_failed = 0;
};

/// Check J(a) = J(b) + integrals along a t-trajectory with linearization, where
/// J = (1 - g'(y) y' - (g''(y)/g'(y)) y') (y')^{n-2} V1' + ((y')^{n-2} V1')' and
/// the derivative term comes from the right-hand side.
JIdentityReport j_identity_residual(const Trajectory& lin_traj, const Nonlinearity& nl, double a, double b);

struct Nondegeneracy {
  bool nondegenerate = false;
  double margin = 0.0;     ///< |V1(T)| / threshold
  double threshold = 0.0;  ///< 1e-8 max(1, max |V1|)
};

Nondegeneracy nondegeneracy(double V1_at_T, double max_abs_V1 = 1.0);

double max_abs_V1(const Trajectory& lin_traj);

struct WindowReport {
  std::optional<double> gamma0;  ///< last grid gamma before which monotonicity fails
  bool exists = false;
};

/// First grid point gamma0 after which T' > 0 (and optionally V1(T) < 0) on every later row.
WindowReport uniqueness_window(const BifurcationCurve& curve);

}  // namespace qshoot
