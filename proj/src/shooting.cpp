#include "qshoot/shooting.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <thread>

#include "qshoot/asymptotics.hpp"
#include "qshoot/errors.hpp"

namespace qshoot {

std::string to_string(Route r) {
  switch (r) {
    case Route::automatic: return "auto";
    case Route::t: return "t";
    case Route::r: return "r";
  }
  return "unknown";
}

Route route_from_string(const std::string& name) {
  if (name == "auto") return Route::automatic;
  if (name == "t") return Route::t;
  if (name == "r") return Route::r;
  throw ConfigError("unknown route '" + name + "' (expected auto, t or r)");
}

std::optional<double> resolve_s0(const Nonlinearity& nl, const ShootConfig& cfg) {
  if (cfg.s0) return cfg.s0;
  try {
    return find_s0(nl).s0;
  } catch (const DomainError&) {
    return std::nullopt;
  }
}

namespace {

Route pick_route(const Nonlinearity& nl, double gamma, const std::optional<double>& s0, const ShootConfig& cfg) {
  if (cfg.route != Route::automatic) return cfg.route;
  if (!s0) return Route::r;
  if (gamma <= std::max(2.0 * *s0, cfg.gamma_switch)) return Route::r;
  if (!(nl.g(gamma, 1) > 0.0)) return Route::r;
  return Route::t;
}

void check_status(const Trajectory& tr) {
  using ode::Status;
  if (tr.status == Status::event || tr.status == Status::reached_bound) return;
  const auto& b = tr.back();
  throw SolverError(std::string("integrator stopped: ") + ode::to_string(tr.status), b.x, b.y);
}

// Abscissa where y (or w) first drops to `level`, by bisection on the dense output.
std::optional<double> crossing(const Trajectory& tr, double level) {
  const auto& s = tr.samples;
  if (s.empty() || !(s.front().y > level)) return std::nullopt;
  for (std::size_t i = 1; i < s.size(); ++i) {
    if (s[i].y <= level) {
      double a = s[i - 1].x, b = s[i].x;
      for (int it = 0; it < 200 && std::abs(b - a) > 1e-13 * std::max(1.0, std::abs(a)); ++it) {
        const double m = 0.5 * (a + b);
        if (tr.eval(m)[0] > level) a = m; else b = m;
      }
      return b;
    }
  }
  return std::nullopt;
}

}  // namespace

ShootResult shoot_with_trajectory(const Nonlinearity& nl, int n, double gamma, const ShootConfig& cfg,
                                  bool linearization) {
  if (n < 2) throw DomainError("n must be at least 2");
  if (!(gamma > 0.0)) throw DomainError("gamma must be positive");
  const std::optional<double> s0 = resolve_s0(nl, cfg);
  const Route route = pick_route(nl, gamma, s0, cfg);

  IntegrateConfig ic = cfg.integ;
  ic.linearization = linearization;

  ShootResult res;
  ShootOutcome& o = res.outcome;
  o.gamma = gamma;
  o.route = route;
  o.exploratory = !nl.within_hypothesis(n);

  if (route == Route::t) {
    TailOptions to;
    to.c_tail = cfg.c_tail;
    to.min_offset = cfg.min_offset;
    to.picard = cfg.picard;
    // An explicit t route skips the s0 guard.
    const std::optional<double> guard = cfg.route == Route::t ? std::nullopt : s0;
    TailStart ts = tail_start(nl, n, gamma, guard, to);
    const double top = nl.log_f(ts.state.y) - ts.state.t;
    if (top > cfg.exponent_cap) throw RangeError("combined exponent at the tail start exceeds the budget");
    res.trajectory = integrate_t(nl, n, gamma, ts.state, StopRule::first_zero(cfg.t_floor), ic, ts.lin);
    res.tail = ts;
  } else {
    if (nl.log_f(gamma) > cfg.exponent_cap) {
      throw RangeError("log(lambda) + g(gamma) exceeds the exponent budget on the radial route");
    }
    res.trajectory = integrate_r(nl, n, gamma, StopRule::first_zero(cfg.r_max), ic);
  }
  const Trajectory& tr = res.trajectory;
  check_status(tr);

  o.steps = tr.accepted;
  o.rejected = tr.rejected;
  o.event_residual = tr.event_residual;
  o.found = tr.event_found();
  o.status = o.found ? "ok" : "no_zero";
  const auto& last = tr.back();
  if (o.found) {
    if (route == Route::t) {
      o.T = last.x;
      o.yprime_T = tr.derivative(last.x, last.flux);
    } else {
      o.T = -n * std::log(last.x / n);
      o.yprime_T = -last.x * tr.derivative(last.x, last.flux) / n;
    }
    o.R = n * std::exp(-o.T / n);
    o.lambda_of_gamma = std::pow(o.R, n);
    if (linearization) o.V1_at_T = last.V1;
  }
  if (s0 && *s0 > 0.0) {
    if (auto x = crossing(tr, *s0)) o.Ttilde = route == Route::t ? *x : -n * std::log(*x / n);
  }
  return res;
}

ShootOutcome shoot(const Nonlinearity& nl, int n, double gamma, const ShootConfig& cfg) {
  return shoot_with_trajectory(nl, n, gamma, cfg, false).outcome;
}

std::vector<double> log_grid(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi >= lo) || count < 1) throw ConfigError("log grid needs 0 < lo <= hi and count >= 1");
  if (count == 1) return {lo};
  std::vector<double> g(count);
  const double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < count; ++i) g[i] = std::exp(a + (b - a) * i / (count - 1));
  g.front() = lo;
  g.back() = hi;
  return g;
}

std::size_t pool_size(std::size_t requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("QSHOOT_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<std::size_t>(v);
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : hc;
}

double t_prime_fd(const Nonlinearity& nl, int n, double gamma, const ShootConfig& cfg, double rel_step) {
  ShootConfig tight = cfg;
  tight.integ.rtol = cfg.integ.rtol / 10.0;
  tight.integ.atol = cfg.integ.atol / 10.0;
  if (!tight.s0) tight.s0 = resolve_s0(nl, cfg);
  if (tight.route == Route::automatic) tight.route = pick_route(nl, gamma, tight.s0, cfg);
  const double h = rel_step * gamma;
  const ShootOutcome up = shoot(nl, n, gamma + h, tight);
  const ShootOutcome dn = shoot(nl, n, gamma - h, tight);
  if (!up.found || !dn.found) throw SolverError("finite difference: no first zero at a stencil point");
  return (up.T - dn.T) / (2.0 * h);
}

BifurcationCurve sweep(const Nonlinearity& nl, int n, const std::vector<double>& gamma_grid,
                       const ShootConfig& cfg, bool with_derivative) {
  for (std::size_t i = 0; i < gamma_grid.size(); ++i) {
    if (!(gamma_grid[i] > 0.0) || (i > 0 && !(gamma_grid[i] > gamma_grid[i - 1]))) {
      throw DomainError("gamma grid must be positive and strictly increasing");
    }
  }
  ShootConfig c = cfg;
  c.s0 = resolve_s0(nl, cfg);

  BifurcationCurve curve;
  curve.nl_description = nl.describe();
  curve.n = n;
  curve.rtol = cfg.integ.rtol;
  curve.atol = cfg.integ.atol;
  curve.exploratory = !nl.within_hypothesis(n);
  curve.rows.resize(gamma_grid.size());

  auto work = [&](std::size_t i) {
    SweepRow& row = curve.rows[i];
    row.gamma = gamma_grid[i];
    try {
      const ShootResult sr = shoot_with_trajectory(nl, n, row.gamma, c, with_derivative);
      row.outcome = sr.outcome;
      row.ok = sr.outcome.found;
      if (!row.ok) row.error = "no first zero before the integration limit";
      if (with_derivative && row.ok) {
        if (sr.outcome.yprime_T > 1e-14 && sr.outcome.V1_at_T) {
          row.Tprime_v1 = -*sr.outcome.V1_at_T / sr.outcome.yprime_T;
        }
        row.Tprime_fd = t_prime_fd(nl, n, row.gamma, c);
      }
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
    }
  };

  const std::size_t workers = std::min(pool_size(cfg.threads), std::max<std::size_t>(gamma_grid.size(), 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < gamma_grid.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < gamma_grid.size(); i = next++) work(i);
      });
    }
    for (auto& th : pool) th.join();
  }
  return curve;
}

std::string to_string(RegimeLabel r) {
  switch (r) {
    case RegimeLabel::diverges_down: return "diverges_down";
    case RegimeLabel::bounded: return "bounded";
    case RegimeLabel::diverges_up: return "diverges_up";
    case RegimeLabel::inconclusive: return "inconclusive";
  }
  return "unknown";
}

double estimate_small_u_power(const Nonlinearity& nl) {
  const int m = 31;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < m; ++i) {
    const double x = std::log(1e-6) + (std::log(1e-3) - std::log(1e-6)) * i / (m - 1);
    const double y = nl.log_f(std::exp(x));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

RegimeReport classify_small_gamma(const Nonlinearity& nl, int n, const std::vector<double>& gamma_tail,
                                  const ShootConfig& cfg) {
  if (gamma_tail.size() < 2) throw DomainError("small-gamma grid needs at least two points");
  for (std::size_t i = 0; i < gamma_tail.size(); ++i) {
    if (!(gamma_tail[i] > 0.0) || (i > 0 && !(gamma_tail[i] < gamma_tail[i - 1]))) {
      throw DomainError("small-gamma grid must be positive and strictly decreasing");
    }
  }
  RegimeReport rep;
  rep.gamma = gamma_tail;
  rep.p_estimate = estimate_small_u_power(nl);
  const double nm1 = n - 1.0;
  if (std::abs(rep.p_estimate - nm1) <= 0.05) rep.expected = RegimeLabel::bounded;
  else rep.expected = rep.p_estimate > nm1 ? RegimeLabel::diverges_down : RegimeLabel::diverges_up;

  ShootConfig c = cfg;
  c.s0 = resolve_s0(nl, cfg);
  for (double g : gamma_tail) {
    const ShootOutcome o = shoot(nl, n, g, c);
    rep.T.push_back(o.found ? o.T : std::numeric_limits<double>::infinity());
  }
  rep.sup_T = *std::max_element(rep.T.begin(), rep.T.end());
  if (!std::all_of(rep.T.begin(), rep.T.end(), [](double t) { return std::isfinite(t); })) return rep;

  bool up = false, down = false;
  for (std::size_t i = 1; i < rep.T.size(); ++i) {
    const double d = rep.T[i] - rep.T[i - 1];
    const double tol = 1e-7 * (1.0 + std::abs(rep.T[i]));
    if (d > tol) up = true;
    if (d < -tol) down = true;
  }
  // Least squares over the last decade of gamma.
  const double g_last = gamma_tail.back();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (std::size_t i = 0; i < gamma_tail.size(); ++i) {
    if (gamma_tail[i] > 10.0 * g_last * (1.0 + 1e-12)) continue;
    const double x = std::log(1.0 / gamma_tail[i]);
    sx += x;
    sy += rep.T[i];
    sxx += x * x;
    sxy += x * rep.T[i];
    ++m;
  }
  if (m < 2) {
    const std::size_t k = rep.T.size() - 1;
    rep.slope = (rep.T[k] - rep.T[k - 1]) / std::log(gamma_tail[k - 1] / gamma_tail[k]);
  } else {
    rep.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  }
  if (std::abs(rep.slope) < 0.05) {
    rep.label = RegimeLabel::bounded;
  } else if (up && down) {
    rep.label = RegimeLabel::inconclusive;
  } else {
    rep.label = rep.slope > 0.0 ? RegimeLabel::diverges_up : RegimeLabel::diverges_down;
  }
  return rep;
}

SingularReduction singular_reduce(const Nonlinearity& nl, int n, double beta) {
  if (!(beta >= 0.0) || !(beta < n)) throw DomainError("singular weight needs 0 <= beta < n");
  if (beta == 0.0) return {nl, 1.0};
  const double a = 1.0 - beta / n;
  return {nl.scaled(1.0 / (std::pow(n, beta) * std::pow(a, n))), a};
}

SingularOutcome shoot_singular(const Nonlinearity& nl, int n, double beta, double gamma, const ShootConfig& cfg) {
  const SingularReduction red = singular_reduce(nl, n, beta);
  SingularOutcome out;
  out.gamma = gamma;
  out.reduced = shoot(red.reduced, n, gamma, cfg);
  if (!out.reduced.found) throw SolverError("singular shot: reduced problem has no first zero");
  out.T = out.reduced.T / red.a;
  out.R = n * std::exp(-out.T / n);
  out.lambda = std::pow(out.R, n - beta);
  return out;
}

std::vector<ProfilePoint> export_profile(const ShootResult& shot, const Nonlinearity& nl, int resolution) {
  if (resolution < 2) throw DomainError("profile resolution must be at least 2");
  const ShootOutcome& o = shot.outcome;
  const Trajectory& tr = shot.trajectory;
  if (!o.found) throw DomainError("profile needs a located first zero");
  const int n = tr.n;
  const double nm1 = n - 1.0;
  std::vector<ProfilePoint> out;
  out.reserve(resolution);
  std::optional<GammaSnapshot> snap;
  for (int i = 0; i < resolution; ++i) {
    const double xi = static_cast<double>(i) / (resolution - 1);
    double u = 0.0;
    if (i == 0) {
      u = o.gamma;
    } else if (i == resolution - 1) {
      u = tr.back().y;
    } else if (tr.variable == Variable::t) {
      const double t = o.T - n * std::log(xi);
      if (t >= tr.x_begin()) {
        if (!snap) snap = make_snapshot(nl, n, o.gamma);
        u = comparison_z(*snap, t).z;
      } else {
        u = tr.eval(std::max(t, tr.x_end()))[0];
      }
    } else {
      const double r = std::min(o.R * xi, tr.x_end());
      if (r <= tr.x_begin()) {
        const double fn = nl.f(o.gamma) / n;
        u = o.gamma - (nm1 / n) * std::pow(fn, 1.0 / nm1) * std::pow(r, n / nm1);
      } else {
        u = tr.eval(r)[0];
      }
    }
    out.push_back({xi, u});
  }
  return out;
}

}  // namespace qshoot
