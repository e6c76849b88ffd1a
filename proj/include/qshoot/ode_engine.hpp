#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <optional>
#include <ostream>
#include <vector>

#include "qshoot/dopri.hpp"
#include "qshoot/nonlinearity.hpp"

namespace qshoot {

/// State in log-radius time t, r = n e^{-t/n}. psi = (y')^{n-1} >= 0.
struct StateT {
  double t = 0.0;
  double y = 0.0;
  double psi = 0.0;
};

/// State in the radius r. Phi = r^{n-1} |w'|^{n-2} w' <= 0 while w > 0.
struct StateR {
  double r = 0.0;
  double w = 0.0;
  double Phi = 0.0;
};

/// Linearization channel: V1 = dy/dgamma and phi = (y')^{n-2} V1'.
struct LinState {
  double t = 0.0;
  double V1 = 1.0;
  double phi = 0.0;
};

enum class Variable { t, r };

enum class StopKind { first_zero, limit, y_reaches };

/// Terminal condition for the integrators. `limit` bounds the independent
/// variable (a floor in t, a ceiling in r) for every stop kind.
struct StopRule {
  StopKind kind = StopKind::first_zero;
  double value = 0.0;  ///< target for y_reaches
  double limit = 0.0;

  static StopRule first_zero(double limit) { return {StopKind::first_zero, 0.0, limit}; }
  static StopRule y_reaches(double value, double limit) { return {StopKind::y_reaches, value, limit}; }
  static StopRule until(double limit) { return {StopKind::limit, 0.0, limit}; }
};

struct IntegrateConfig {
  double rtol = 1e-10;
  double atol = 1e-12;
  double event_tol = 1e-12;
  std::size_t max_steps = 2'000'000;
  bool linearization = false;
};

/// One accepted point. In the t variable: (t, y, psi, V1, phi);
/// in r: (r, w, Phi, W1 = dw/dgamma, Phi1 = dPhi/dgamma).
struct TrajectorySample {
  double x = 0.0;
  double y = 0.0;
  double flux = 0.0;
  double V1 = 0.0;
  double phi = 0.0;
};

/// Accepted steps of one integration with their continuous extensions.
/// Samples are ordered along the integration direction (decreasing t,
/// increasing r), so the abscissae are strictly monotone.
class Trajectory {
 public:
  using Segment = ode::DenseSegment<4>;

  Variable variable = Variable::t;
  int n = 2;
  double gamma = 0.0;
  bool has_linearization = false;

  std::vector<TrajectorySample> samples;
  std::vector<Segment> segments;

  ode::Status status = ode::Status::reached_bound;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  double event_residual = 0.0;

  bool event_found() const { return status == ode::Status::event; }
  double x_begin() const { return samples.front().x; }
  double x_end() const { return samples.back().x; }
  const TrajectorySample& front() const { return samples.front(); }
  const TrajectorySample& back() const { return samples.back(); }

  /// Interpolated (y, flux, V1, phi) at x inside the covered span.
  std::array<double, 4> eval(double x) const;
  bool covers(double x) const;

  /// y' in t, or w' in r, recovered from the flux.
  double derivative(double x_value, double flux) const;
  /// V1' in t (phi / (y')^{n-2}) or W1' in r.
  double lin_derivative(double x_value, double flux, double lin_flux) const;
};

/// Start of the backward march in t from the comparison solution z.
struct TailStart {
  StateT state;
  LinState lin;            ///< V2 closed form at t_start
  double T1 = 0.0;
  double picard_delta = std::numeric_limits<double>::quiet_NaN();
  bool refined = false;
};

struct TailOptions {
  double c_tail = 6.0;
  /// Lower bound on (t_start - T1)/(n-1); keeps X(t_start) <= e^{-12} when g' is close to 1.
  double min_offset = 12.0;
  bool picard = false;
  /// Start from the refined (y, psi) instead of z. Implies picard.
  bool use_refined = false;
};

/// Tail initializer t_start = T1 + (n-1) max(c_tail log g'(gamma), min_offset),
/// (y, psi) = (z, (z')^{n-1}) at t_start. `s0`, when given, must lie below gamma.
TailStart tail_start(const Nonlinearity& nl, int n, double gamma, std::optional<double> s0,
                     const TailOptions& opts = {});

/// March dy/dt = psi^{1/(n-1)}, dpsi/dt = -f(y) e^{-t} backward from `start`.
/// With cfg.linearization the V1 channel starts from `lin` (or (1, 0)).
Trajectory integrate_t(const Nonlinearity& nl, int n, double gamma, const StateT& start,
                       const StopRule& stop, const IntegrateConfig& cfg,
                       std::optional<LinState> lin = std::nullopt);

/// Series startup radius min(1e-3, (tol n / f(gamma))^{(n-1)/n}).
double startup_radius(const Nonlinearity& nl, int n, double gamma, double tol);

/// March the radial problem from the series startup at r0 outward.
Trajectory integrate_r(const Nonlinearity& nl, int n, double gamma, const StopRule& stop,
                       const IntegrateConfig& cfg);

struct EnergyRecord {
  double t = 0.0;
  double E = 0.0;
  double scale = 0.0;  ///< |E| + e^{log f(y) - t}
};

struct EnergyReport {
  std::vector<EnergyRecord> records;  ///< ordered by increasing t
  std::size_t violations = 0;
  double worst_excess = 0.0;  ///< max of (E(t2) - E(t1))/scale over t2 > t1
};

/// E(t) = (y')^{n-1} - ((n-1)/n)(y')^n g'(y) - e^{log f(y) - t} on samples with y >= s0.
/// An increase larger than rel_tol * scale between neighbours counts as a violation.
EnergyReport energy_series(const Trajectory& traj, const Nonlinearity& nl, double s0, double rel_tol = 1e-9);

/// CSV `t,y,yprime,psi` (or `r,w,wprime,Phi`), one row per accepted step.
void write_trajectory_csv(const Trajectory& traj, std::ostream& out);
/// CSV `t,y,yprime,V1,V1prime` for a t-trajectory with linearization.
void write_linearization_csv(const Trajectory& traj, std::ostream& out);

}  // namespace qshoot
