#include "qshoot/ode_engine.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

#include "qshoot/asymptotics.hpp"
#include "qshoot/errors.hpp"

namespace qshoot {

namespace {

using V4 = ode::Vec<4>;
using GK = boost::math::quadrature::gauss_kronrod<double, 31>;

// Flux components are controlled in relative terms only; they start many
// orders of magnitude below y in the tail.
constexpr double kFluxAtol = 1e-30;

// f(y) e^{-s} and f'(y) e^{-s} for the right-hand sides. Overflow yields inf,
// which the integrator rejects like any other non-finite trial step.
double src(const Nonlinearity& nl, double y, double s) {
  const double lf = nl.log_f(y);
  return lf == -std::numeric_limits<double>::infinity() ? 0.0 : std::exp(lf - s);
}

double src_prime(const Nonlinearity& nl, double y, double s) {
  if (y > 0.0) return std::exp(nl.log_f(y) - s) * nl.g(y, 1);
  return nl.source_prime(y, s);
}

ode::Options<4> make_options(const IntegrateConfig& cfg) {
  ode::Options<4> o;
  o.rtol = cfg.rtol;
  o.atol = {cfg.atol, kFluxAtol, cfg.atol, kFluxAtol};
  o.max_steps = cfg.max_steps;
  o.event_tol = cfg.event_tol;
  return o;
}

Trajectory assemble(Variable var, int n, double gamma, bool lin, double x0, const V4& y0,
                    ode::Result<4>&& res) {
  Trajectory tr;
  tr.variable = var;
  tr.n = n;
  tr.gamma = gamma;
  tr.has_linearization = lin;
  tr.status = res.status;
  tr.accepted = res.accepted;
  tr.rejected = res.rejected;
  tr.event_residual = res.event_residual;
  tr.samples.reserve(res.segments.size() + 1);
  tr.samples.push_back({x0, y0[0], y0[1], y0[2], y0[3]});
  for (const auto& seg : res.segments) {
    const V4 v = seg.eval(seg.t1());
    tr.samples.push_back({seg.t1(), v[0], v[1], v[2], v[3]});
  }
  if (!res.segments.empty()) {
    tr.samples.back() = {res.t_end, res.y_end[0], res.y_end[1], res.y_end[2], res.y_end[3]};
  }
  tr.segments = std::move(res.segments);
  return tr;
}

}  // namespace

// ---------------------------------------------------------------- Trajectory

bool Trajectory::covers(double x) const {
  if (samples.empty()) return false;
  const double a = std::min(x_begin(), x_end()), b = std::max(x_begin(), x_end());
  return x >= a && x <= b;
}

std::array<double, 4> Trajectory::eval(double x) const {
  if (!covers(x)) throw DomainError("trajectory does not cover the requested abscissa");
  if (segments.empty()) {
    const auto& s = samples.front();
    return {s.y, s.flux, s.V1, s.phi};
  }
  const bool forward = segments.front().h > 0.0;
  // First segment whose far end reaches x along the integration direction.
  auto it = std::partition_point(segments.begin(), segments.end(), [&](const Segment& s) {
    return forward ? s.t1() < x : s.t1() > x;
  });
  if (it == segments.end()) it = std::prev(segments.end());
  return it->eval(x);
}

double Trajectory::derivative(double x_value, double flux) const {
  const double nm1 = n - 1.0;
  if (variable == Variable::t) {
    const double p = std::max(flux, 0.0);
    return n == 2 ? p : std::pow(p, 1.0 / nm1);
  }
  if (x_value <= 0.0) return 0.0;
  const double m = std::abs(flux) / std::pow(x_value, nm1);
  const double v = n == 2 ? m : std::pow(m, 1.0 / nm1);
  return flux > 0.0 ? v : -v;
}

double Trajectory::lin_derivative(double x_value, double flux, double lin_flux) const {
  const double nm1 = n - 1.0;
  if (variable == Variable::t) {
    if (n == 2) return lin_flux;
    return lin_flux / std::pow(std::max(flux, 1e-300), (n - 2.0) / nm1);
  }
  if (x_value <= 0.0) return 0.0;
  const double rn = std::pow(x_value, nm1);
  const double m = std::max(std::abs(flux) / rn, 1e-300);
  return (n == 2 ? 1.0 : std::pow(m, (2.0 - n) / nm1)) * lin_flux / (nm1 * rn);
}

// ---------------------------------------------------------------- tail start

TailStart tail_start(const Nonlinearity& nl, int n, double gamma, std::optional<double> s0,
                     const TailOptions& opts) {
  if (s0 && !(gamma > *s0)) {
    throw DomainError("tail start needs gamma > s0; use the radial start");
  }
  const GammaSnapshot snap = make_snapshot(nl, n, gamma);
  const double nm1 = n - 1.0;
  const double off = std::max(opts.c_tail * snap.delta, opts.min_offset);
  const double ts = snap.T1 + nm1 * off;

  const ZValue z = comparison_z(snap, ts);
  const V2Value v2 = v2_closed(snap, ts);
  TailStart out;
  out.T1 = snap.T1;
  out.state = {ts, z.z, std::pow(z.zp, nm1)};
  out.lin = {ts, v2.V2, std::pow(z.zp, n - 2.0) * v2.V2p};

  if (opts.picard || opts.use_refined) {
    // One Picard sweep of psi(t) = int_t^inf f(y) e^{-s} ds, y(t) = gamma - int_t^inf y' ds
    // with y replaced by z, truncated at t_start + 40 (n-1).
    const double top = ts + 40.0 * nm1;
    auto src = [&](double u) { return nl.source(comparison_z(snap, u).z, u); };
    auto psi_ref = [&](double t) { return GK::integrate(src, t, top, 12, 1e-13); };
    auto yp_ref = [&](double t) { return std::pow(std::max(psi_ref(t), 0.0), 1.0 / nm1); };
    const double y_ref = gamma - GK::integrate(yp_ref, ts, top, 10, 1e-12);
    const double psi0 = psi_ref(ts);
    out.picard_delta = std::abs(y_ref - z.z);
    out.refined = true;
    if (opts.use_refined) out.state = {ts, y_ref, psi0};
  }
  return out;
}

// ---------------------------------------------------------------- integrators

Trajectory integrate_t(const Nonlinearity& nl, int n, double gamma, const StateT& start, const StopRule& stop,
                       const IntegrateConfig& cfg, std::optional<LinState> lin) {
  if (n < 2) throw DomainError("n must be at least 2");
  if (start.psi < 0.0) throw DomainError("tail state needs psi >= 0");
  if (!(stop.limit < start.t)) throw DomainError("t floor must lie below the start time");
  const double nm1 = n - 1.0;
  const double e_y = 1.0 / nm1;
  const double e_lin = (n - 2.0) / nm1;
  const bool with_lin = cfg.linearization;

  auto rhs = [&](double t, const V4& u, V4& d) {
    const double psi = std::max(u[1], 0.0);
    d[0] = n == 2 ? psi : std::pow(psi, e_y);
    d[1] = -src(nl, u[0], t);
    if (with_lin) {
      d[2] = n == 2 ? u[3] : u[3] / std::pow(std::max(psi, 1e-300), e_lin);
      d[3] = -src_prime(nl, u[0], t) * u[2] / nm1;
    } else {
      d[2] = 0.0;
      d[3] = 0.0;
    }
  };
  const double target = stop.kind == StopKind::y_reaches ? stop.value : 0.0;
  auto event = [&](double, const V4& u) { return stop.kind == StopKind::limit ? 1.0 : u[0] - target; };

  const LinState l = lin.value_or(LinState{start.t, 1.0, 0.0});
  const V4 y0{start.y, start.psi, with_lin ? l.V1 : 0.0, with_lin ? l.phi : 0.0};
  auto res = ode::integrate<4>(rhs, start.t, y0, stop.limit, make_options(cfg), event);
  return assemble(Variable::t, n, gamma, with_lin, start.t, y0, std::move(res));
}

double startup_radius(const Nonlinearity& nl, int n, double gamma, double tol) {
  const double lf = nl.log_f(gamma);
  const double lr = ((n - 1.0) / n) * (std::log(tol * n) - lf);
  return std::min(1e-3, std::exp(lr));
}

Trajectory integrate_r(const Nonlinearity& nl, int n, double gamma, const StopRule& stop,
                       const IntegrateConfig& cfg) {
  if (n < 2) throw DomainError("n must be at least 2");
  if (!(gamma > 0.0)) throw DomainError("gamma must be positive");
  const double nm1 = n - 1.0;
  const double e_y = 1.0 / nm1;
  const double e_lin = (2.0 - n) / nm1;
  const bool with_lin = cfg.linearization;

  const double lf = nl.log_f(gamma);
  if (lf > 700.0) throw RangeError("f(gamma) is not representable");
  const double f = std::exp(lf);
  const double fp = f * nl.g(gamma, 1);
  const double r0 = startup_radius(nl, n, gamma, cfg.rtol);
  if (!(stop.limit > r0)) throw DomainError("radius ceiling must exceed the startup radius");
  const double rp = std::pow(r0, n / nm1);
  const double fn = f / n;
  const V4 y0{gamma - (nm1 / n) * std::pow(fn, e_y) * rp, -fn * std::pow(r0, n),
              1.0 - std::pow(fn, e_lin) * (fp / n) * rp / n, -(fp / n) * std::pow(r0, n)};

  auto rhs = [&](double r, const V4& u, V4& d) {
    const double rn = std::pow(r, nm1);
    const double lr = nm1 * std::log(r);
    const double m = std::abs(u[1]) / rn;
    const double wp = n == 2 ? m : std::pow(m, e_y);
    d[0] = u[1] > 0.0 ? wp : -wp;
    d[1] = -src(nl, u[0], -lr);
    if (with_lin) {
      d[2] = (n == 2 ? 1.0 : std::pow(std::max(m, 1e-300), e_lin)) * u[3] / (nm1 * rn);
      d[3] = -src_prime(nl, u[0], -lr) * u[2];
    } else {
      d[2] = 0.0;
      d[3] = 0.0;
    }
  };
  const double target = stop.kind == StopKind::y_reaches ? stop.value : 0.0;
  auto event = [&](double, const V4& u) { return stop.kind == StopKind::limit ? 1.0 : u[0] - target; };

  V4 start = y0;
  if (!with_lin) start[2] = start[3] = 0.0;
  auto res = ode::integrate<4>(rhs, r0, start, stop.limit, make_options(cfg), event);
  return assemble(Variable::r, n, gamma, with_lin, r0, start, std::move(res));
}

// ---------------------------------------------------------------- energy

EnergyReport energy_series(const Trajectory& traj, const Nonlinearity& nl, double s0, double rel_tol) {
  if (traj.variable != Variable::t) throw DomainError("energy_series needs a t-trajectory");
  const double n = traj.n;
  EnergyReport rep;
  for (auto it = traj.samples.rbegin(); it != traj.samples.rend(); ++it) {
    if (!(it->y >= s0) || it->y <= 0.0) continue;
    const double yp = traj.derivative(it->x, it->flux);
    const double src = nl.source(it->y, it->x);
    const double E = it->flux - ((n - 1.0) / n) * std::pow(yp, n) * nl.g(it->y, 1) - src;
    rep.records.push_back({it->x, E, std::abs(E) + src});
  }
  for (std::size_t i = 1; i < rep.records.size(); ++i) {
    const auto& a = rep.records[i - 1];
    const auto& b = rep.records[i];
    const double scale = std::max(a.scale, b.scale);
    const double excess = scale > 0.0 ? (b.E - a.E) / scale : 0.0;
    rep.worst_excess = std::max(rep.worst_excess, excess);
    if (excess > rel_tol) ++rep.violations;
  }
  return rep;
}

// ---------------------------------------------------------------- CSV

void write_trajectory_csv(const Trajectory& traj, std::ostream& out) {
  const auto old = out.precision(17);
  out << (traj.variable == Variable::t ? "t,y,yprime,psi\n" : "r,w,wprime,Phi\n");
  for (const auto& s : traj.samples) {
    out << s.x << ',' << s.y << ',' << traj.derivative(s.x, s.flux) << ',' << s.flux << '\n';
  }
  out.precision(old);
}

void write_linearization_csv(const Trajectory& traj, std::ostream& out) {
  if (!traj.has_linearization) throw DomainError("trajectory carries no linearization channel");
  const auto old = out.precision(17);
  out << (traj.variable == Variable::t ? "t,y,yprime,V1,V1prime\n" : "r,w,wprime,W1,W1prime\n");
  for (const auto& s : traj.samples) {
    out << s.x << ',' << s.y << ',' << traj.derivative(s.x, s.flux) << ',' << s.V1 << ','
        << traj.lin_derivative(s.x, s.flux, s.phi) << '\n';
  }
  out.precision(old);
}

}  // namespace qshoot
