#include "qshoot/linearization.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

#include "qshoot/errors.hpp"

namespace qshoot {

LinearizationResult solve_V1(const Nonlinearity& nl, int n, double gamma, const ShootConfig& cfg) {
  LinearizationResult out;
  out.shot = shoot_with_trajectory(nl, n, gamma, cfg, true);
  if (!out.shot.outcome.found) throw SolverError("linearization: no first zero", gamma, 0.0);
  out.V1_at_T = *out.shot.outcome.V1_at_T;
  return out;
}

TPrime t_prime(const ShootOutcome& outcome, double V1_at_T) {
  TPrime tp;
  if (!(outcome.yprime_T >= 1e-14)) {
    tp.degenerate = true;
    tp.value = std::numeric_limits<double>::quiet_NaN();
    return tp;
  }
  tp.value = -V1_at_T / outcome.yprime_T;
  return tp;
}

V2Value v2_eval(const Nonlinearity& nl, int n, double gamma, double t) {
  return v2_closed(make_snapshot(nl, n, gamma), t);
}

namespace {

std::optional<double> first_sign_change(const std::function<double(double)>& fn, const std::vector<double>& knots) {
  if (knots.size() < 2) return std::nullopt;
  double prev = fn(knots[0]);
  for (std::size_t i = 1; i < knots.size(); ++i) {
    const double cur = fn(knots[i]);
    if (prev == 0.0) return knots[i - 1];
    if ((prev > 0.0) != (cur > 0.0) || cur == 0.0) {
      double hi = knots[i - 1], lo = knots[i];
      const bool hi_pos = prev > 0.0;
      for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, std::abs(hi)); ++it) {
        const double m = 0.5 * (hi + lo);
        if ((fn(m) > 0.0) == hi_pos) hi = m; else lo = m;
      }
      return 0.5 * (hi + lo);
    }
    prev = cur;
  }
  return std::nullopt;
}

}  // namespace

TurningReport detect_turning(const std::function<double(double)>& V1, const std::function<double(double)>& V1prime,
                             const std::vector<double>& knots, const GammaSnapshot& snap, double q) {
  TurningReport rep;
  const double nm1 = snap.n - 1.0;
  rep.S0 = v2_zero(snap);
  rep.S_predicted = predict_all(snap).S_pred;
  rep.V2prime_at_S = (snap.n / nm1) * snap.gpp / (snap.gp * snap.gp);
  rep.S6 = snap.T1 - (4.0 * q / (q - 1.0) + 1.0) * nm1 * snap.delta;
  rep.S1 = first_sign_change(V1, knots);
  rep.S = first_sign_change(V1prime, knots);
  if (rep.S) rep.S_above_S6 = *rep.S >= rep.S6;
  return rep;
}

TurningReport detect_turning(const Trajectory& tr, const GammaSnapshot& snap, double q) {
  if (!tr.has_linearization) throw DomainError("trajectory carries no linearization channel");
  const double n = tr.n;
  std::vector<double> knots;
  knots.reserve(tr.samples.size());
  if (tr.variable == Variable::t) {
    for (const auto& s : tr.samples) knots.push_back(s.x);
    auto v = [&](double t) { return tr.eval(t)[2]; };
    auto vp = [&](double t) {
      const auto u = tr.eval(t);
      return tr.lin_derivative(t, u[1], u[3]);
    };
    return detect_turning(v, vp, knots, snap, q);
  }
  for (const auto& s : tr.samples) knots.push_back(-n * std::log(s.x / n));
  auto to_r = [&](double t) { return std::clamp(n * std::exp(-t / n), tr.x_begin(), tr.x_end()); };
  auto v = [&](double t) { return tr.eval(to_r(t))[2]; };
  auto vp = [&](double t) {
    const double r = to_r(t);
    const auto u = tr.eval(r);
    return -tr.lin_derivative(r, u[1], u[3]) * r / n;
  };
  return detect_turning(v, vp, knots, snap, q);
}

JIdentityReport j_identity_residual(const Trajectory& tr, const Nonlinearity& nl, double a, double b) {
  if (tr.variable != Variable::t || !tr.has_linearization) {
    throw DomainError("j_identity_residual needs a t-trajectory with linearization");
  }
  if (a > b) throw DomainError("j_identity_residual needs a <= b");
  if (!tr.covers(a) || !tr.covers(b)) throw DomainError("[a, b] must lie inside the trajectory");
  const int n = tr.n;
  const double nm1 = n - 1.0;

  struct Local {
    double y, yp, ypp, V1, phi, g1, g2, g3, dphi;
  };
  auto local = [&](double t, const std::array<double, 4>& u) {
    Local l{};
    l.y = u[0];
    const double psi = std::max(u[1], 0.0);
    l.yp = tr.derivative(t, psi);
    const double src = nl.source(l.y, t);
    l.ypp = n == 2 ? -src : -src * std::pow(std::max(psi, 1e-300), (2.0 - n) / nm1) / nm1;
    l.V1 = u[2];
    l.phi = u[3];
    l.g1 = nl.g(l.y, 1);
    l.g2 = nl.g(l.y, 2);
    l.g3 = nl.g(l.y, 3);
    l.dphi = -nl.source_prime(l.y, t) * l.V1 / nm1;
    return l;
  };
  auto J = [&](double t, bool literal) {
    const Local l = local(t, tr.eval(t));
    const double c = literal ? l.g2 / l.g1 : (l.g2 / l.g1) * l.yp;
    return (1.0 - l.g1 * l.yp - c) * l.phi + l.dphi;
  };

  JIdentityReport rep;
  rep.a = a;
  rep.b = b;
  if (a == b) return rep;

  using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
  for (const auto& seg : tr.segments) {
    const double lo = std::max(seg.lo(), a), hi = std::min(seg.hi(), b);
    if (!(hi > lo)) continue;
    auto f1 = [&](double t) {
      const Local l = local(t, seg.eval(t));
      return (l.g2 / l.g1) * l.ypp * l.phi;
    };
    auto f2 = [&](double t) {
      const Local l = local(t, seg.eval(t));
      const double r = l.g2 / l.g1;
      return (l.g2 + l.g3 / l.g1 - r * r) * l.yp * l.yp * l.phi;
    };
    double e1 = 0.0, e2 = 0.0;
    const double v1 = GK::integrate(f1, lo, hi, 6, 1e-14, &e1);
    const double v2 = GK::integrate(f2, lo, hi, 6, 1e-14, &e2);
    rep.int_y2 += v1;
    rep.int_ypow += v2;
    ++rep.panels;
    if (e1 > 1e-10 * std::abs(v1) + 1e-300 || e2 > 1e-10 * std::abs(v2) + 1e-300) ++rep.panels_failed;
  }

  auto residual = [&](bool literal, double& ja, double& jb) {
    ja = J(a, literal);
    jb = J(b, literal);
    const double scale = std::max({std::abs(ja), std::abs(jb), std::abs(rep.int_y2), std::abs(rep.int_ypow)});
    const double r = std::abs(ja - jb - rep.int_y2 - rep.int_ypow);
    return scale > 0.0 ? r / scale : 0.0;
  };
  double ja = 0.0, jb = 0.0;
  rep.residual_literal = residual(true, ja, jb);
  rep.residual = residual(false, rep.J_a, rep.J_b);
  return rep;
}

Nondegeneracy nondegeneracy(double V1_at_T, double max_abs) {
  Nondegeneracy nd;
  nd.threshold = 1e-8 * std::max(1.0, max_abs);
  nd.margin = std::abs(V1_at_T) / nd.threshold;
  nd.nondegenerate = std::abs(V1_at_T) > nd.threshold;
  return nd;
}

double max_abs_V1(const Trajectory& tr) {
  double m = 0.0;
  for (const auto& s : tr.samples) m = std::max(m, std::abs(s.V1));
  return m;
}

WindowReport uniqueness_window(const BifurcationCurve& curve) {
  WindowReport w;
  const auto& rows = curve.rows;
  if (rows.empty()) return w;
  auto good = [&](std::size_t j) {
    const SweepRow& r = rows[j];
    if (!r.ok) return false;
    if (r.outcome.V1_at_T && !(*r.outcome.V1_at_T < 0.0)) return false;
    if (r.Tprime_v1 && !(*r.Tprime_v1 > 0.0)) return false;
    if (j > 0 && !(rows[j - 1].ok && r.outcome.T > rows[j - 1].outcome.T)) return false;
    return true;
  };
  std::size_t k = rows.size();
  while (k > 0 && good(k - 1)) --k;
  // rows[k..] are good; gamma0 is the grid point just before them.
  const std::size_t g0 = k == 0 ? 0 : k - 1;
  w.gamma0 = rows[g0].gamma;
  w.exists = rows.size() - (g0 + 1) >= 2;
  return w;
}

}  // namespace qshoot
