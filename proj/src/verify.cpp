#include "qshoot/verify.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <sstream>

#include "qshoot/asymptotics.hpp"
#include "qshoot/errors.hpp"
#include "qshoot/io.hpp"
#include "qshoot/linearization.hpp"
#include "qshoot/oracles.hpp"

namespace qshoot {

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

void add(VerifyReport& rep, std::string name, double value, double bound, std::string detail = "") {
  const bool pass = std::isfinite(value) && value <= bound;
  rep.rows.push_back({std::move(name), value, bound, pass, std::move(detail)});
}

void add_flag(VerifyReport& rep, std::string name, bool ok, std::string detail = "") {
  rep.rows.push_back({std::move(name), ok ? 0.0 : 1.0, 0.0, ok, std::move(detail)});
}

// A check whose computation throws is recorded as a failure with the message.
void guarded(VerifyReport& rep, const std::string& name, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    rep.rows.push_back({name, std::numeric_limits<double>::quiet_NaN(), 0.0, false, e.what()});
  }
}

// Uniform in [0, 1) from the top 53 bits; independent of the library's distributions.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

double integrate_tail(const std::function<double(double)>& f, double t) {
  boost::math::quadrature::exp_sinh<double> q;
  double err = 0.0;
  return q.integrate([&](double u) { return f(t + u); }, 0.0, std::numeric_limits<double>::infinity(), 1e-13, &err);
}

Nonlinearity mixed_growth() { return Nonlinearity::pow_exp(1.0, 1.0, 1.5, 1.0, 1.0); }

ShootConfig base_config(const RunConfig& cfg) {
  ShootConfig c = cfg.shoot_config();
  c.route = Route::automatic;
  return c;
}

}  // namespace

bool VerifyReport::all_pass() const {
  return !rows.empty() && std::all_of(rows.begin(), rows.end(), [](const CheckRow& r) { return r.pass; });
}

std::string VerifyReport::table() const {
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-44s %-14s %-14s %s\n", "check", "value", "bound", "result");
  os << "suite " << suite << '\n' << buf;
  for (const CheckRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%-44s %-14.6e %-14.6e %s", r.name.c_str(), r.value, r.bound,
                  r.pass ? "PASS" : "FAIL");
    os << buf;
    if (!r.detail.empty()) os << "  " << r.detail;
    os << '\n';
  }
  const auto failed = std::count_if(rows.begin(), rows.end(), [](const CheckRow& r) { return !r.pass; });
  os << (all_pass() ? "ALL PASS" : "FAILED") << " (" << rows.size() - failed << '/' << rows.size() << ")\n";
  return os.str();
}

nlohmann::ordered_json VerifyReport::json() const {
  nlohmann::ordered_json j;
  j["suite"] = suite;
  j["all_pass"] = all_pass();
  auto arr = nlohmann::ordered_json::array();
  for (const CheckRow& r : rows) {
    nlohmann::ordered_json o;
    o["check"] = r.name;
    o["value"] = io::num(r.value);
    o["bound"] = io::num(r.bound);
    o["pass"] = r.pass;
    if (!r.detail.empty()) o["detail"] = r.detail;
    arr.push_back(o);
  }
  j["rows"] = arr;
  return j;
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> s = {"identities", "oracles", "asymptotics", "regimes"};
  return s;
}

VerifyReport run_suite(const std::string& suite, const RunConfig& cfg) {
  if (suite == "identities") return verify_identities(cfg);
  if (suite == "oracles") return verify_oracles(cfg);
  if (suite == "asymptotics") return verify_asymptotics(cfg);
  if (suite == "regimes") return verify_regimes(cfg);
  throw ConfigError("unknown suite '" + suite + "' (identities, oracles, asymptotics, regimes)");
}

// ---------------------------------------------------------------- identities

VerifyReport verify_identities(const RunConfig& cfg) {
  VerifyReport rep;
  rep.suite = "identities";
  std::mt19937_64 rng(cfg.seed);
  const Nonlinearity nl = mixed_growth();

  for (int n : {2, 3, 4}) {
    for (double gamma : {3.0, 5.0, 10.0}) {
      const std::string tag = "n=" + std::to_string(n) + " gamma=" + fmt("%g", gamma);
      guarded(rep, "z ode " + tag, [&] {
        const GammaSnapshot s = make_snapshot(nl, n, gamma);
        const double nm1 = n - 1.0;
        const double lo = s.T0, hi = s.T1 + 20.0 * nm1;
        double worst_z = 0.0, worst_rel = 0.0, worst_v2 = 0.0;
        for (int i = 0; i < 100; ++i) {
          const double t = lo + (hi - lo) * (i + unit(rng)) / 100.0;
          const ZValue z = comparison_z(s, t);
          const double lhs = -nm1 * std::pow(z.zp, n - 2) * z.zpp;
          const double rhs = std::exp(s.g - t + s.gp * (z.z - gamma));
          worst_z = std::max(worst_z, rel(lhs, rhs));

          const V2Value v = v2_closed(s, t);
          worst_rel = std::max(worst_rel, std::abs(v.V2 - (1.0 - s.gp * z.zp)));

          const double zp_nm3 = n == 2 ? 0.0 : std::pow(z.zp, n - 3);
          const double vl = -((n - 2.0) * zp_nm3 * z.zpp * v.V2p + std::pow(z.zp, n - 2) * v.V2pp);
          const double vr = (s.gp / nm1) * v.V2 * rhs;
          const double scale = std::max(std::abs(std::pow(z.zp, n - 2) * v.V2pp), std::abs(vr));
          worst_v2 = std::max(worst_v2, std::abs(vl - vr) / std::max(scale, 1e-300));
        }
        add(rep, "z ode " + tag, worst_z, 1e-9);
        add(rep, "v2 relation " + tag, worst_rel, 1e-12);
        add(rep, "v2 ode " + tag, worst_v2, 1e-9);
      });
    }
  }

  bool harm = true, beta = true;
  for (int k = 1; k <= 12; ++k) {
    harm = harm && harmonic_identity_exact(k);
    beta = beta && beta_identity_exact(k);
  }
  add_flag(rep, "harmonic identity exact k<=12", harm);
  add_flag(rep, "beta identity exact k<=12", beta);

  for (int n : {2, 3}) {
    const GammaSnapshot s = make_snapshot(nl, n, 5.0);
    const double nm1 = n - 1.0;
    for (double dt : {-2.0, 0.0, 5.0 * nm1}) {
      const double t = s.T1 + dt;
      const std::string tag = "n=" + std::to_string(n) + " t=T1" + (dt < 0 ? "" : "+") + fmt("%g", dt);
      guarded(rep, "integrals " + tag, [&] {
        auto zp = [&](double u) { return comparison_z(s, u).zp; };
        for (int k : {1, 2, 3}) {
          const double quad = integrate_tail([&](double u) { return std::pow(zp(u), k + 1); }, t);
          add(rep, "zprime power k=" + std::to_string(k) + " " + tag, rel(zprime_power_integral(k, s, t), quad), 1e-8);
        }
        const V2Integrals L = v2_weighted_integrals(s, t);
        const double q1 = integrate_tail(
            [&](double u) {
              const ZValue z = comparison_z(s, u);
              return std::pow(z.zp, n - 2) * z.zpp * v2_closed(s, u).V2p;
            },
            t);
        const double q2 = integrate_tail(
            [&](double u) { return std::pow(zp(u), n) * v2_closed(s, u).V2p; }, t);
        add(rep, "v2 integral I1 " + tag, rel(L.I1, q1), 1e-8);
        add(rep, "v2 integral I2 " + tag, rel(L.I2, q2), 1e-8);
      });
    }
  }

  for (int n : {2, 3}) {
    guarded(rep, "v2 zero detector n=" + std::to_string(n), [&] {
      const GammaSnapshot s = make_snapshot(nl, n, 5.0);
      std::vector<double> knots;
      for (int i = 0; i <= 400; ++i) knots.push_back(s.T1 + 20.0 * (n - 1) - 0.1 * (n - 1) * i);
      const TurningReport tr = detect_turning([&](double t) { return v2_closed(s, t).V2; },
                                              [&](double t) { return v2_closed(s, t).V2p; }, knots, s, 1.5);
      const double err = tr.S1 ? std::abs(*tr.S1 - tr.S0) : std::numeric_limits<double>::infinity();
      add(rep, "v2 zero detector n=" + std::to_string(n), err, 1e-9);
    });
  }

  guarded(rep, "root a=1 n=2 b=0.1", [&] {
    add(rep, "root a=1 n=2 b=0.1", std::abs(perturbed_root(1.0, 2, 0.1).X - (1.0 + std::sqrt(1.4)) / 2.0), 1e-12);
    add(rep, "root a=1.7 n=3 b=0", std::abs(perturbed_root(1.7, 3, 0.0).X - 1.7), 1e-15);
    add(rep, "root a=2 n=3 b=0.01 second order", std::abs(perturbed_root(2.0, 3, 0.01).X - 2.0 - 0.01 / 4.0), 1e-4);
  });
  return rep;
}

// ---------------------------------------------------------------- oracles

VerifyReport verify_oracles(const RunConfig& cfg) {
  VerifyReport rep;
  rep.suite = "oracles";
  const ShootConfig sc = base_config(cfg);

  guarded(rep, "bessel", [&] {
    const double j0 = oracle::bessel_j0_first_zero();
    const Nonlinearity lin = Nonlinearity::linear();
    double lo = 1e300, hi = -1e300;
    for (double g : {0.5, 1.0, 2.0}) {
      const double R = shoot(lin, 2, g, sc).R;
      lo = std::min(lo, R);
      hi = std::max(hi, R);
      add(rep, "bessel R gamma=" + fmt("%g", g), std::abs(R - j0), 1e-6);
    }
    add(rep, "bessel R spread", hi - lo, 1e-8);
  });

  guarded(rep, "liouville", [&] {
    const Nonlinearity ex = Nonlinearity::exponential();
    for (double g : {1.0, 2.0, 5.0, 10.0}) {
      add(rep, "liouville R gamma=" + fmt("%g", g), rel(shoot(ex, 2, g, sc).R, oracle::liouville_radius(g)), 1e-6);
    }
  });

  guarded(rep, "liouville profile", [&] {
    const Nonlinearity ex = Nonlinearity::exponential();
    const ShootResult shot = shoot_with_trajectory(ex, 2, 2.0, sc);
    double worst = 0.0;
    for (const ProfilePoint& p : export_profile(shot, ex, 101)) {
      worst = std::max(worst, std::abs(p.u - oracle::liouville_profile(2.0, p.xi * shot.outcome.R)));
    }
    add(rep, "liouville profile gamma=2 max abs", worst, 1e-6);
  });

  struct Case {
    const char* name;
    Nonlinearity nl;
    int n;
    double gamma;
  };
  const std::vector<Case> cases = {
      {"exp n=2 gamma=1", Nonlinearity::exponential(), 2, 1.0},
      {"exp n=3 gamma=1", Nonlinearity::exponential(), 3, 1.0},
      {"u e^{u^1.5+u} n=2 gamma=3", mixed_growth(), 2, 3.0},
      {"u e^{u^1.5+u} n=3 gamma=3", mixed_growth(), 3, 3.0},
      {"u^1.5 n=2 gamma=5", Nonlinearity::pow_exp(1.0, 1.0, 1.5, 0.0, 0.0), 2, 5.0},
  };
  for (const Case& c : cases) {
    guarded(rep, std::string("cross variable ") + c.name, [&] {
      ShootConfig ct = sc, cr = sc;
      ct.route = Route::t;
      cr.route = Route::r;
      const double Tt = shoot(c.nl, c.n, c.gamma, ct).T;
      const double Tr = shoot(c.nl, c.n, c.gamma, cr).T;
      add(rep, std::string("cross variable ") + c.name, std::abs(Tt - Tr) / (1.0 + std::abs(Tt)), 1e-6);
    });
  }

  guarded(rep, "linear invariance", [&] {
    const Nonlinearity lin = Nonlinearity::linear(2.0);
    double worst = 0.0;
    for (double g : {0.5, 2.0}) {
      const LinearizationResult L = solve_V1(lin, 2, g, sc);
      worst = std::max(worst, std::abs(t_prime(L.shot.outcome, L.V1_at_T).value));
    }
    add(rep, "linear invariance |T'|", worst, 1e-6);
  });

  guarded(rep, "singular", [&] {
    const Nonlinearity ex = Nonlinearity::exponential();
    const double R0 = shoot(ex, 2, 2.0, sc).R;
    add(rep, "singular beta=0 identity", rel(shoot_singular(ex, 2, 0.0, 2.0, sc).R, R0), 1e-12);
    for (double g : {1.0, 2.0, 4.0}) {
      const SingularOutcome so = shoot_singular(ex, 2, 1.0, g, sc);
      add(rep, "singular beta=1 gamma=" + fmt("%g", g), rel(so.R, oracle::weighted_radial_zero(ex, 2, 1.0, g)),
          1e-5);
    }
  });

  struct EnergyCase {
    const char* name;
    Nonlinearity nl;
    int n;
    std::vector<double> gammas;
  };
  const std::vector<EnergyCase> ecases = {
      {"u e^{u^1.5+u} n=2", mixed_growth(), 2, {3.0, 5.0, 8.0, 12.0}},
      {"u e^{u^1.5+u} n=3", mixed_growth(), 3, {4.0, 8.0}},
      {"u^1.5 n=2", Nonlinearity::pow_exp(1.0, 1.0, 1.5, 0.0, 0.0), 2, {20.0, 50.0}},
      {"u e^{u^2} n=2", Nonlinearity::pow_exp(1.0, 1.0, 2.0, 1.0, 0.0), 2, {4.0}},
  };
  for (const EnergyCase& c : ecases) {
    guarded(rep, std::string("energy ") + c.name, [&] {
      ShootConfig ct = sc;
      ct.route = Route::t;
      const double s0 = resolve_s0(c.nl, sc).value_or(0.0);
      std::size_t viol = 0;
      double worst = 0.0;
      for (double g : c.gammas) {
        const EnergyReport e = energy_series(shoot_with_trajectory(c.nl, c.n, g, ct).trajectory, c.nl, s0);
        viol += e.violations;
        worst = std::max(worst, e.worst_excess);
      }
      add(rep, std::string("energy ") + c.name + " worst increase", worst, 1e-9,
          "violations=" + std::to_string(viol));
    });
  }

  const Nonlinearity fii = mixed_growth();
  for (double g : {3.0, 5.0, 8.0}) {
    guarded(rep, "j identity gamma=" + fmt("%g", g), [&] {
      const LinearizationResult L = solve_V1(fii, 2, g, sc);
      const Trajectory& tr = L.shot.trajectory;
      if (!L.shot.outcome.Ttilde) throw SolverError("no threshold crossing", g, 0.0);
      const JIdentityReport r = j_identity_residual(tr, fii, *L.shot.outcome.Ttilde, tr.x_begin());
      add(rep, "j identity gamma=" + fmt("%g", g), r.residual, 1e-6,
          "literal form residual " + fmt("%.2e", r.residual_literal));
    });
  }

  for (double g : {1.5, 2.0, 3.0, 5.0, 8.0}) {
    guarded(rep, "tprime vs fd gamma=" + fmt("%g", g), [&] {
      const LinearizationResult L = solve_V1(fii, 2, g, sc);
      const double tp = t_prime(L.shot.outcome, L.V1_at_T).value;
      const double fd = t_prime_fd(fii, 2, g, sc);
      add(rep, "tprime vs fd gamma=" + fmt("%g", g), rel(tp, fd), 1e-3);
    });
  }
  return rep;
}

// ---------------------------------------------------------------- asymptotics

VerifyReport verify_asymptotics(const RunConfig& cfg) {
  VerifyReport rep;
  rep.suite = "asymptotics";
  const ShootConfig sc = base_config(cfg);

  guarded(rep, "decay", [&] {
    const Nonlinearity nl = Nonlinearity::pow_exp(1.0, 1.0, 1.5, 0.0, 0.0);
    const std::vector<double> grid = log_grid(20.0, 200.0, 10);
    std::vector<DecayInput> in;
    std::vector<double> tp_err;
    for (double g : grid) {
      const LinearizationResult L = solve_V1(nl, 2, g, sc);
      const ShootOutcome& o = L.shot.outcome;
      const double tp = t_prime(o, L.V1_at_T).value;
      in.push_back({g, o.T, o.yprime_T, tp, 0.0});
      tp_err.push_back(std::abs(tp - predict_all(make_snapshot(nl, 2, g)).Tprime_pred));
    }
    const DecayReport d = error_decay_report(nl, 2, in);
    if (d.refused) throw DomainError(d.reason);
    for (const DecayVerdict& v : d.verdicts) {
      if (v.quantity == "T") add(rep, "T error normalized max/min", v.max_over_min, 10.0);
    }
    const GammaSnapshot top = make_snapshot(nl, 2, grid.back());
    const double lead = 2.0 / top.gp;
    add(rep, "yprime(T) vs leading term at gamma=200", rel(in.back().yprime_T, lead), 0.10);
    std::size_t rises = 0;
    for (std::size_t i = grid.size() / 2 + 1; i < grid.size(); ++i) rises += tp_err[i] >= tp_err[i - 1];
    add(rep, "T' raw error increases (upper half)", static_cast<double>(rises), 0.0,
        "last " + fmt("%.3e", tp_err.back()));
  });

  guarded(rep, "uniqueness window", [&] {
    const BifurcationCurve c = sweep(mixed_growth(), 2, log_grid(2.0, 12.0, 11), sc, true);
    const WindowReport w = uniqueness_window(c);
    add_flag(rep, "uniqueness window on [2,12]", w.exists,
             w.gamma0 ? "gamma0 " + fmt("%.6g", *w.gamma0) : "gamma0 none");
  });

  guarded(rep, "turning", [&] {
    const Nonlinearity nl = mixed_growth();
    double prev_gap = std::numeric_limits<double>::infinity();
    double prev_ratio = std::numeric_limits<double>::infinity();
    std::size_t gap_rises = 0, ratio_rises = 0;
    for (double g : {5.0, 8.0, 12.0, 20.0}) {
      const LinearizationResult L = solve_V1(nl, 2, g, sc);
      const GammaSnapshot s = make_snapshot(nl, 2, g);
      const TurningReport tr = detect_turning(L.shot.trajectory, s, 1.5);
      if (!tr.S1 || !tr.S) throw SolverError("turning point not found", g, 0.0);
      const double gap = std::abs(*tr.S1 - tr.S0);
      const double ratio = std::abs(*tr.S - tr.S_predicted) / std::abs(tr.S_predicted - s.T1);
      gap_rises += gap >= prev_gap;
      ratio_rises += ratio >= prev_ratio;
      prev_gap = gap;
      prev_ratio = ratio;
    }
    add(rep, "first zero of V1 minus S0 increases", static_cast<double>(gap_rises), 0.0,
        "last " + fmt("%.3e", prev_gap));
    add(rep, "turning point relative error increases", static_cast<double>(ratio_rises), 0.0,
        "last " + fmt("%.3e", prev_ratio));
  });

  guarded(rep, "refusal", [&] {
    const DecayReport d = error_decay_report(Nonlinearity::linear(), 2, {{1.0, 1.0, 1.0, std::nullopt, 0.0}, {2.0, 1.0, 1.0, std::nullopt, 0.0}});
    add_flag(rep, "decay report refuses linear f", d.refused);
  });
  return rep;
}

// ---------------------------------------------------------------- regimes

VerifyReport verify_regimes(const RunConfig& cfg) {
  VerifyReport rep;
  rep.suite = "regimes";
  const ShootConfig sc = base_config(cfg);
  const int n = cfg.n;
  std::vector<double> grid = log_grid(1e-4, 1e-1, 13);
  std::reverse(grid.begin(), grid.end());
  for (double p : {0.3, 1.0, 2.0}) {
    const std::string name = "n=" + std::to_string(n) + " p=" + fmt("%g", p);
    guarded(rep, name, [&] {
      const RegimeReport r = classify_small_gamma(Nonlinearity::pow_exp(1.0, 1.0, 2.0, p, 0.0), n, grid, sc);
      add_flag(rep, name, r.label == r.expected,
               to_string(r.label) + " (expected " + to_string(r.expected) + ", slope " + fmt("%.4f", r.slope) + ")");
    });
  }
  return rep;
}

}  // namespace qshoot
