#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "qshoot/nonlinearity.hpp"
#include "qshoot/ode_engine.hpp"

namespace qshoot {

enum class Route { automatic, t, r };

std::string to_string(Route r);
Route route_from_string(const std::string& name);

struct ShootConfig {
  IntegrateConfig integ;
  double c_tail = 6.0;
  double min_offset = 12.0;
  bool picard = false;
  /// gamma <= max(2 s0, gamma_switch) goes through the radial route.
  double gamma_switch = 1.0;
  /// Budget for log(lambda) + g on the radial route and for the largest
  /// combined exponent g(y) - t met at the tail start.
  double exponent_cap = 600.0;
  double t_floor = -200.0;
  double r_max = 1e8;
  Route route = Route::automatic;
  /// Convexity threshold; computed with find_s0 when absent. A failed scan
  /// means the tail asymptotics never apply and every shot goes radial.
  std::optional<double> s0;
  std::size_t threads = 0;  ///< 0: QSHOOT_THREADS or hardware concurrency
};

/// s0 from the config or a default scan; nullopt when g is never increasing and convex.
std::optional<double> resolve_s0(const Nonlinearity& nl, const ShootConfig& cfg);

struct ShootOutcome {
  double gamma = 0.0;
  bool found = false;  ///< a first zero was located
  double T = 0.0;
  double yprime_T = 0.0;
  double R = 0.0;  ///< n e^{-T/n}
  double lambda_of_gamma = 0.0;  ///< R^n
  std::optional<double> Ttilde;  ///< y(Ttilde) = s0
  std::optional<double> V1_at_T;
  Route route = Route::t;
  bool exploratory = false;
  std::size_t steps = 0;
  std::size_t rejected = 0;
  double event_residual = 0.0;
  std::string status;
};

struct ShootResult {
  ShootOutcome outcome;
  Trajectory trajectory;
  std::optional<TailStart> tail;
};

/// Tail start then integrate_t, or integrate_r per the switch rule, down to the
/// first zero. With `linearization` the V1 channel rides along.
ShootResult shoot_with_trajectory(const Nonlinearity& nl, int n, double gamma, const ShootConfig& cfg,
                                  bool linearization = false);
ShootOutcome shoot(const Nonlinearity& nl, int n, double gamma, const ShootConfig& cfg);

struct SweepRow {
  double gamma = 0.0;
  bool ok = false;
  std::string error;
  ShootOutcome outcome;
  std::optional<double> Tprime_v1;
  std::optional<double> Tprime_fd;
};

struct BifurcationCurve {
  std::string nl_description;
  int n = 2;
  double beta = 0.0;
  double rtol = 0.0;
  double atol = 0.0;
  bool exploratory = false;
  std::vector<SweepRow> rows;
};

/// `n` points geometrically spaced from lo to hi inclusive.
std::vector<double> log_grid(double lo, double hi, int count);

/// Worker count: explicit value, else QSHOOT_THREADS, else hardware concurrency.
std::size_t pool_size(std::size_t requested);

/// One row per grid point; errors are collected per row. With `with_derivative`
/// the rows carry T' from the linearization and a central difference
/// (h = 1e-3 gamma, tolerances tightened tenfold) as a cross-check.
BifurcationCurve sweep(const Nonlinearity& nl, int n, const std::vector<double>& gamma_grid,
                       const ShootConfig& cfg, bool with_derivative = false);

/// Central difference of T with step h = rel_step * gamma at tolerance cfg.rtol / 10.
double t_prime_fd(const Nonlinearity& nl, int n, double gamma, const ShootConfig& cfg, double rel_step = 1e-3);

enum class RegimeLabel { diverges_down, bounded, diverges_up, inconclusive };
std::string to_string(RegimeLabel r);

struct RegimeReport {
  RegimeLabel label = RegimeLabel::inconclusive;
  std::vector<double> gamma;
  std::vector<double> T;
  double slope = 0.0;        ///< dT / d log(1/gamma) over the last decade
  double p_estimate = 0.0;   ///< small-u exponent of f
  RegimeLabel expected = RegimeLabel::inconclusive;  ///< from p versus n - 1
  double sup_T = 0.0;        ///< empirical sup of T on the grid
};

/// Least-squares slope of log f against log u over [1e-6, 1e-3].
double estimate_small_u_power(const Nonlinearity& nl);

/// Trend of T(gamma) as gamma decreases toward 0: |slope| < 0.05 is bounded,
/// a positive slope diverges up (T -> +inf), a negative one diverges down.
/// Non-monotone sequences are inconclusive.
RegimeReport classify_small_gamma(const Nonlinearity& nl, int n, const std::vector<double>& gamma_tail,
                                  const ShootConfig& cfg);

struct SingularReduction {
  Nonlinearity reduced;
  double a = 1.0;  ///< time rescale: T_singular = T_reduced / a
};

/// f~ = f / (n^beta a^n), a = 1 - beta/n.
SingularReduction singular_reduce(const Nonlinearity& nl, int n, double beta);

struct SingularOutcome {
  double gamma = 0.0;
  double T = 0.0;       ///< in the singular problem's own time
  double R = 0.0;       ///< n e^{-T/n}
  double lambda = 0.0;  ///< R^{n - beta}
  ShootOutcome reduced;
};

SingularOutcome shoot_singular(const Nonlinearity& nl, int n, double beta, double gamma, const ShootConfig& cfg);

struct ProfilePoint {
  double xi = 0.0;
  double u = 0.0;
};

/// Unit-ball profile u(xi) = w(R xi) at `resolution` evenly spaced radii in [0, 1].
std::vector<ProfilePoint> export_profile(const ShootResult& shot, const Nonlinearity& nl, int resolution);

}  // namespace qshoot
