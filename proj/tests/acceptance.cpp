// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <boost/numeric/odeint.hpp>
#include <boost/rational.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "qshoot/asymptotics.hpp"
#include "qshoot/linearization.hpp"
#include "qshoot/shooting.hpp"

using namespace qshoot;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

int failures = 0;
std::map<int, std::string> lines;  // printed in criterion order at the end

void criterion(int id, const char* name, double budget_s, const std::function<Verdict()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (budget_s > 0 && secs > budget_s) {
    v.pass = false;
    v.detail += " [over time budget " + std::to_string(budget_s) + " s]";
  }
  if (!v.pass) ++failures;
  char buf[512];
  std::snprintf(buf, sizeof buf, "%s  %2d %-34s %8.3f s  %s\n", v.pass ? "PASS" : "FAIL", id, name, secs,
                v.detail.c_str());
  lines[id] = buf;
}

std::string sci(double x) {
  char b[32];
  std::snprintf(b, sizeof b, "%.3e", x);
  return b;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

Nonlinearity mixed_growth() { return Nonlinearity::pow_exp(1.0, 1.0, 1.5, 1.0, 1.0); }
Nonlinearity sub15() { return Nonlinearity::pow_exp(1.0, 1.0, 1.5, 0.0, 0.0); }

double liouville_R(double g) { return std::sqrt(8.0 * (std::exp(g / 2.0) - 1.0) * std::exp(-g)); }

// Every t-trajectory produced below is recorded for the energy criterion.
struct EnergyCase {
  Nonlinearity nl;
  int n;
  double gamma;
};
std::vector<EnergyCase> matrix;

double tail_quad(const std::function<double(double)>& f, double t) {
  boost::math::quadrature::exp_sinh<double> q;
  return q.integrate([&](double u) { return f(t + u); }, 0.0, std::numeric_limits<double>::infinity(), 1e-14);
}

double fd_T(const Nonlinearity& nl, int n, double gamma) {
  ShootConfig c;
  c.integ.rtol = 1e-11;
  c.integ.atol = 1e-13;
  const double h = 1e-3 * gamma;
  return (shoot(nl, n, gamma + h, c).T - shoot(nl, n, gamma - h, c).T) / (2.0 * h);
}

// (r w')' = -r^{1-beta} e^w for n = 2, state (w, r w'); first zero of w.
double weighted_zero_exp(double beta, double gamma) {
  using State = std::array<double, 2>;
  namespace oi = boost::numeric::odeint;
  auto rhs = [beta](const State& x, State& d, double r) {
    d[0] = x[1] / r;
    d[1] = -std::pow(r, 1.0 - beta) * std::exp(x[0]);
  };
  const double r0 = 1e-8, eg = std::exp(gamma), k = 2.0 - beta;
  State x{gamma - eg * std::pow(r0, k) / (k * k), -eg * std::pow(r0, k) / k};
  auto st = oi::make_dense_output(1e-13, 1e-13, oi::runge_kutta_dopri5<State>());
  st.initialize(x, r0, 1e-6);
  do st.do_step(rhs);
  while (st.current_state()[0] > 0.0);
  double lo = st.previous_time(), hi = st.current_time();
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    const double m = 0.5 * (lo + hi);
    State s;
    st.calc_state(m, s);
    (s[0] > 0.0 ? lo : hi) = m;
  }
  return 0.5 * (lo + hi);
}

std::string slurp(const std::string& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main() {
  const ShootConfig cfg;

  criterion(1, "bessel oracle", 1.0, [&] {
    const double j0 = boost::math::cyl_bessel_j_zero(0.0, 1);
    double worst = 0, lo = 1e300, hi = -1e300;
    for (double g : {0.5, 1.0, 2.0}) {
      const double R = shoot(Nonlinearity::linear(), 2, g, cfg).R;
      worst = std::max(worst, std::abs(R - j0));
      lo = std::min(lo, R);
      hi = std::max(hi, R);
    }
    return Verdict{worst <= 1e-6 && hi - lo <= 1e-8 && std::abs(j0 - 2.404825557695773) < 1e-15,
                   "max |R-j0| " + sci(worst) + ", spread " + sci(hi - lo)};
  });

  criterion(2, "liouville oracle", 1.0, [&] {
    double worst = 0;
    for (double g : {1.0, 2.0, 5.0, 10.0}) {
      worst = std::max(worst, rel(shoot(Nonlinearity::exponential(), 2, g, cfg).R, liouville_R(g)));
      if (g > 2.0) matrix.push_back({Nonlinearity::exponential(), 2, g});
    }
    return Verdict{worst <= 1e-6, "max rel " + sci(worst)};
  });

  criterion(3, "cross-variable consistency", 5.0, [&] {
    struct C {
      Nonlinearity nl;
      int n;
      double g;
    };
    const std::vector<C> cases = {{Nonlinearity::exponential(), 2, 1.0},
                                  {Nonlinearity::exponential(), 3, 1.0},
                                  {mixed_growth(), 2, 3.0},
                                  {mixed_growth(), 3, 3.0},
                                  {sub15(), 2, 5.0}};
    double worst = 0;
    for (const C& c : cases) {
      ShootConfig ct = cfg, cr = cfg;
      ct.route = Route::t;
      cr.route = Route::r;
      const double Tt = shoot(c.nl, c.n, c.g, ct).T, Tr = shoot(c.nl, c.n, c.g, cr).T;
      worst = std::max(worst, std::abs(Tt - Tr) / (1.0 + std::abs(Tt)));
      matrix.push_back({c.nl, c.n, c.g});
    }
    return Verdict{worst <= 1e-6, "max |dT|/(1+|T|) " + sci(worst)};
  });

  criterion(4, "identity suite", 5.0, [&] {
    const Nonlinearity nl = mixed_growth();
    double wz = 0, wrel = 0, wv2 = 0;
    for (int n : {2, 3, 4}) {
      for (double g : {3.0, 5.0, 10.0}) {
        const GammaSnapshot s = make_snapshot(nl, n, g);
        const double nm1 = n - 1.0;
        for (int i = 0; i < 100; ++i) {
          const double t = s.T0 + (s.T1 + 20 * nm1 - s.T0) * (i + 0.5) / 100.0;
          const ZValue z = comparison_z(s, t);
          const V2Value v = v2_closed(s, t);
          const double rhs = std::exp(s.g - t + s.gp * (z.z - g));
          wz = std::max(wz, rel(-nm1 * std::pow(z.zp, n - 2) * z.zpp, rhs));
          wrel = std::max(wrel, std::abs(v.V2 - (1.0 - s.gp * z.zp)));
          const double d1 = n == 2 ? 0.0 : (n - 2.0) * std::pow(z.zp, n - 3) * z.zpp * v.V2p;
          const double lhs = -(d1 + std::pow(z.zp, n - 2) * v.V2pp), r2 = (s.gp / nm1) * v.V2 * rhs;
          wv2 = std::max(wv2, std::abs(lhs - r2) / std::max(std::abs(r2), std::abs(std::pow(z.zp, n - 2) * v.V2pp)));
        }
      }
    }
    // alternating binomial sums in exact arithmetic
    using Q = boost::rational<long long>;
    bool exact = true;
    for (int k = 1; k <= 12; ++k) {
      Q a(0), b(0), h(0);
      long long c = 1;
      for (int r = 0; r <= k; ++r) {
        if (r > 0) {
          c = c * (k - r + 1) / r;
          a += Q((r % 2 ? 1 : -1) * c, r);
          h += Q(1, r);
        }
        b += Q((r % 2 ? -1 : 1) * c, r + 2);
      }
      exact = exact && a == h && b == Q(1, (k + 1) * (k + 2)) && std::abs(harmonic(k) - boost::rational_cast<double>(h)) < 1e-15;
    }
    return Verdict{wz <= 1e-9 && wrel <= 1e-12 && wv2 <= 1e-9 && exact,
                   "z-ode " + sci(wz) + ", V2 relation " + sci(wrel) + ", V2-ode " + sci(wv2) +
                       (exact ? ", identities exact" : ", identities FAIL")};
  });

  criterion(5, "closed forms vs quadrature", 10.0, [&] {
    double worst = 0;
    for (int n : {2, 3}) {
      const GammaSnapshot s = make_snapshot(mixed_growth(), n, 5.0);
      const double nm1 = n - 1.0, C = n / (nm1 * s.gp);
      auto X = [&](double t) { return std::exp((s.T1 - t) / nm1); };
      auto zp = [&](double t) { return C * X(t) / (1 + X(t)); };
      auto zpp = [&](double t) { return -(C / nm1) * X(t) / ((1 + X(t)) * (1 + X(t))); };
      auto v2p = [&](double t) { return (n / (nm1 * nm1)) * X(t) / ((1 + X(t)) * (1 + X(t))); };
      for (double t : {s.T1 - 2.0, s.T1, s.T1 + 5.0 * nm1}) {
        for (int k = 1; k <= 4; ++k) {
          worst = std::max(worst, rel(zprime_power_integral(k, s, t), tail_quad([&](double u) { return std::pow(zp(u), k + 1); }, t)));
        }
        const V2Integrals L = v2_weighted_integrals(s, t);
        worst = std::max(worst, rel(L.I1, tail_quad([&](double u) { return std::pow(zp(u), n - 2) * zpp(u) * v2p(u); }, t)));
        worst = std::max(worst, rel(L.I2, tail_quad([&](double u) { return std::pow(zp(u), n) * v2p(u); }, t)));
      }
    }
    return Verdict{worst <= 1e-8, "max rel " + sci(worst)};
  });

  criterion(7, "T' vs finite differences", 30.0, [&] {
    double worst = 0;
    for (double g : {1.5, 2.0, 3.0, 5.0, 8.0}) {
      const LinearizationResult L = solve_V1(mixed_growth(), 2, g, cfg);
      worst = std::max(worst, rel(t_prime(L.shot.outcome, L.V1_at_T).value, fd_T(mixed_growth(), 2, g)));
      matrix.push_back({mixed_growth(), 2, g});
    }
    return Verdict{worst <= 1e-3, "max rel " + sci(worst)};
  });

  criterion(8, "J identity along trajectories", 10.0, [&] {
    double worst = 0;
    for (double g : {3.0, 5.0, 8.0}) {
      const LinearizationResult L = solve_V1(mixed_growth(), 2, g, cfg);
      const Trajectory& tr = L.shot.trajectory;
      worst = std::max(worst, j_identity_residual(tr, mixed_growth(), L.shot.outcome.Ttilde.value(), tr.x_begin()).residual);
    }
    return Verdict{worst <= 1e-6, "max normalized residual " + sci(worst)};
  });

  std::vector<double> grid = log_grid(20.0, 200.0, 10);
  std::vector<LinearizationResult> ladder;
  criterion(9, "T and y'(T) error decay", 60.0, [&] {
    std::vector<DecayInput> in;
    for (double g : grid) {
      ladder.push_back(solve_V1(sub15(), 2, g, cfg));
      const ShootOutcome& o = ladder.back().shot.outcome;
      in.push_back({g, o.T, o.yprime_T, std::nullopt, 0.0});
      matrix.push_back({sub15(), 2, g});
    }
    const DecayReport rep = error_decay_report(sub15(), 2, in);
    if (rep.refused) return Verdict{false, rep.reason};
    double ratio = std::numeric_limits<double>::infinity();
    for (const auto& v : rep.verdicts) {
      if (v.quantity == "T") ratio = v.max_over_min;
    }
    const double gp = 1.5 * std::sqrt(grid.back());
    const double yerr = rel(in.back().yprime_T, 2.0 / gp);
    return Verdict{ratio <= 10.0 && yerr <= 0.10,
                   "normalized T max/min " + sci(ratio) + ", y'(T) rel err at 200 " + sci(yerr)};
  });

  criterion(10, "T' error decay", 60.0, [&] {
    if (ladder.size() != grid.size()) return Verdict{false, "ladder unavailable"};
    std::vector<double> err;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double g = grid[i];
      const double gp = 1.5 * std::sqrt(g), gpp = 0.75 / std::sqrt(g);
      const LinearizationResult& L = ladder[i];
      err.push_back(std::abs(t_prime(L.shot.outcome, L.V1_at_T).value - 0.5 * (gp - g * gpp)));
    }
    bool dec = true;
    for (std::size_t i = grid.size() / 2 + 1; i < grid.size(); ++i) dec = dec && err[i] < err[i - 1];
    return Verdict{dec, "raw error " + sci(err[grid.size() / 2]) + " -> " + sci(err.back())};
  });

  criterion(11, "small-gamma regimes", 30.0, [&] {
    std::vector<double> g = log_grid(1e-4, 1e-1, 13);
    std::reverse(g.begin(), g.end());
    const RegimeLabel want[] = {RegimeLabel::diverges_up, RegimeLabel::bounded, RegimeLabel::diverges_down};
    const double ps[] = {0.3, 1.0, 2.0};
    bool ok = true;
    std::string got;
    for (int i = 0; i < 3; ++i) {
      const RegimeReport r = classify_small_gamma(Nonlinearity::pow_exp(1.0, 1.0, 2.0, ps[i], 0.0), 2, g, cfg);
      ok = ok && r.label == want[i];
      got += (i ? ", " : "") + to_string(r.label);
    }
    return Verdict{ok, got};
  });

  criterion(12, "uniqueness window", 60.0, [&] {
    const BifurcationCurve c = sweep(mixed_growth(), 2, log_grid(2.0, 12.0, 11), cfg, true);
    const WindowReport w = uniqueness_window(c);
    if (!w.exists || !w.gamma0) return Verdict{false, "no window"};
    bool ok = true;
    for (std::size_t i = 0; i < c.rows.size(); ++i) {
      const SweepRow& r = c.rows[i];
      if (r.gamma <= *w.gamma0) continue;
      ok = ok && r.ok && r.outcome.T > c.rows[i - 1].outcome.T && r.outcome.V1_at_T.value_or(1.0) < 0.0;
    }
    return Verdict{ok, "gamma0 " + sci(*w.gamma0)};
  });

  criterion(13, "singular reduction", 10.0, [&] {
    const Nonlinearity ex = Nonlinearity::exponential();
    double id = 0, worst = 0;
    for (double g : {0.5, 1.0, 2.0}) {
      id = std::max(id, rel(shoot_singular(ex, 2, 0.0, g, cfg).R, shoot(ex, 2, g, cfg).R));
      worst = std::max(worst, rel(shoot_singular(ex, 2, 1.0, g, cfg).R, weighted_zero_exp(1.0, g)));
    }
    return Verdict{id <= 1e-14 && worst <= 1e-5, "beta=0 " + sci(id) + ", beta=1 max rel " + sci(worst)};
  });

  criterion(6, "energy monotonicity", 0.0, [&] {
    std::size_t viol = 0, checked = 0;
    double worst = 0;
    for (const EnergyCase& c : matrix) {
      ShootConfig ct = cfg;
      ct.route = Route::t;
      const auto s0 = resolve_s0(c.nl, cfg);
      if (!s0) continue;
      const ShootResult res = shoot_with_trajectory(c.nl, c.n, c.gamma, ct);
      const EnergyReport e = energy_series(res.trajectory, c.nl, *s0, 1e-9);
      viol += e.violations;
      worst = std::max(worst, e.worst_excess);
      ++checked;
    }
    return Verdict{viol == 0 && checked >= 20,
                   std::to_string(checked) + " trajectories, worst increase " + sci(worst)};
  });

  criterion(14, "determinism", 0.0, [&] {
    bool same = true;
    for (const char* suite : {"identities", "oracles", "asymptotics", "regimes"}) {
      std::string out[2];
      for (int i = 0; i < 2; ++i) {
        const std::string path = "acceptance_verify_" + std::string(suite) + std::to_string(i) + ".txt";
        const std::string cmd = std::string(QSHOOT_BIN) + " verify " + suite + " --out " + path + " 2>/dev/null";
        if (std::system(cmd.c_str()) != 0) return Verdict{false, std::string(suite) + " did not pass"};
        out[i] = slurp(path);
        std::remove(path.c_str());
      }
      same = same && !out[0].empty() && out[0] == out[1];
    }
    return Verdict{same, same ? "four suites byte-identical across runs" : "reports differ"};
  });

  for (const auto& [id, line] : lines) std::fputs(line.c_str(), stdout);
  std::printf("%s (%d failed)\n", failures ? "ACCEPTANCE FAILED" : "ACCEPTANCE PASSED", failures);
  return failures ? 1 : 0;
}
