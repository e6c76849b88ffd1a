#include "qshoot/asymptotics.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/rational.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "qshoot/errors.hpp"

namespace qshoot {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double binom(int k, int r) {
  double c = 1.0;
  for (int i = 1; i <= r; ++i) c = c * (k - r + i) / i;
  return c;
}

// log(1 + e^x) without overflow.
double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

// 1/(1 + e^{-x})
double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// int_0^X x^k (1+x)^{-j} dx by its power series; for X well below 1.
double small_x_integral(int k, int j, double X) {
  double sum = 0.0;
  double c = 1.0;  // (-1)^m C(j-1+m, m)
  double xp = std::pow(X, k + 1);
  for (int m = 0; m < 2000; ++m) {
    const double term = c * xp / (k + 1 + m);
    sum += term;
    if (std::abs(term) <= 1e-18 * std::abs(sum)) break;
    c *= -static_cast<double>(j + m) / (m + 1);
    xp *= X;
  }
  return sum;
}

constexpr double kSeriesCutoff = 0.25;

}  // namespace

GammaSnapshot make_snapshot(const Nonlinearity& nl, int n, double gamma) {
  if (n < 2) throw DomainError("n must be at least 2");
  if (!(gamma > 0.0)) throw DomainError("gamma must be positive");
  GammaSnapshot s;
  s.n = n;
  s.gamma = gamma;
  s.g = nl.log_f(gamma);
  s.gp = nl.g(gamma, 1);
  s.gpp = nl.g(gamma, 2);
  s.gppp = nl.g(gamma, 3);
  if (!(s.gp > 0.0)) throw DomainError("g'(gamma) must be positive");
  const double nm1 = n - 1.0;
  s.alpha_n = harmonic(n);
  s.delta = std::log(s.gp);
  s.T1 = s.g + nm1 * std::log(nm1 * s.gp / n);
  const double x = gamma * s.gp / n;
  s.T0 = s.T1 - nm1 * x - nm1 * std::log(-std::expm1(-x));
  return s;
}

double harmonic(int n) {
  if (n < 1) throw DomainError("harmonic number needs n >= 1");
  double h = 0.0;
  for (int i = n; i >= 1; --i) h += 1.0 / i;
  return h;
}

bool harmonic_identity_exact(int k) {
  using Q = boost::rational<long long>;
  Q lhs(0), rhs(0);
  long long c = 1;
  for (int r = 1; r <= k; ++r) {
    c = c * (k - r + 1) / r;
    lhs += Q((r % 2 == 1) ? c : -c, r);
    rhs += Q(1, r);
  }
  return lhs == rhs;
}

bool beta_identity_exact(int k) {
  using Q = boost::rational<long long>;
  Q lhs(0);
  long long c = 1;
  for (int r = 0; r <= k; ++r) {
    if (r > 0) c = c * (k - r + 1) / r;
    lhs += Q((r % 2 == 0) ? c : -c, r + 2);
  }
  return lhs == Q(1, static_cast<long long>(k + 1) * (k + 2));
}

double log_X(const GammaSnapshot& s, double t) { return (s.T1 - t) / (s.n - 1.0); }

ZValue comparison_z(const GammaSnapshot& s, double t) {
  const double nm1 = s.n - 1.0;
  const double lx = log_X(s, t);
  const double C = s.n / (nm1 * s.gp);
  const double sig = sigmoid(lx);    // X/(1+X)
  const double inv = sigmoid(-lx);   // 1/(1+X)
  ZValue v;
  v.z = s.gamma - (s.n / s.gp) * softplus(lx);
  v.zp = C * sig;
  v.zpp = -C / nm1 * sig * inv;
  return v;
}

double psi_eval(const GammaSnapshot& s, const Nonlinearity& nl, double theta) {
  const double nm1 = s.n - 1.0;
  return nl.log_f(theta) - s.g + (nm1 / s.n) * (s.gamma - theta) * s.gp - nm1 * std::log(nm1 / s.n * s.gp);
}

V2Value v2_closed(const GammaSnapshot& s, double t) {
  const double nm1 = s.n - 1.0;
  const double lx = log_X(s, t);
  const double inv = sigmoid(-lx);
  const double one_minus = sigmoid(lx);
  V2Value v;
  v.V2 = -1.0 / nm1 + (s.n / nm1) * inv;
  v.V2p = s.n / (nm1 * nm1) * inv * one_minus;
  v.V2pp = s.n / (nm1 * nm1 * nm1) * inv * one_minus * (one_minus - inv);
  return v;
}

double v2_zero(const GammaSnapshot& s) { return s.T1 - (s.n - 1.0) * std::log(s.n - 1.0); }

AsymptoticPrediction predict_all(const GammaSnapshot& s, std::optional<double> A) {
  const double n = s.n, nm1 = n - 1.0;
  AsymptoticPrediction p;
  p.A = A.value_or(0.0);
  p.T_pred = (s.g - (nm1 / n) * s.gamma * s.gp) + nm1 * std::log((nm1 / n) * s.gp) +
             s.alpha_n * nm1 * s.gamma * s.gpp / s.gp + p.A;
  p.yprime_T_pred = n / (nm1 * s.gp) + n * n * s.alpha_n * s.gpp / (nm1 * s.gp * s.gp * s.gp);
  p.Tprime_pred = (s.gp - nm1 * s.gamma * s.gpp) / n;
  p.S_pred = s.gpp > 0.0 ? s.T1 + nm1 * std::log(nm1 * s.gpp / (s.gp * s.gp)) : kNaN;
  p.T_error_order = "O((log g')^2/g' + (log g')^(beta+1)/(g')^beta + exp(-(g - ((n-1)/n) gamma g')))";
  p.yprime_error_order = "O(delta^2 g''/(g')^4 + exp(-(g - ((n-1)/n) gamma g'))/g')";
  p.Tprime_error_order = "O(g'' (log g')^4/g')";
  p.S_error_order = "O(1)";
  return p;
}

double correction_A_anchor(const GammaSnapshot& s) { return (s.n + 3.0) * s.delta; }

double correction_A(const GammaSnapshot& s, const Nonlinearity& nl, double T, double yprime_t0) {
  const double f0 = nl.f0();
  const double t0 = correction_A_anchor(s);
  if (f0 == 0.0 || T >= t0) return 0.0;
  if (!(yprime_t0 > 0.0)) throw DomainError("correction A needs y'(t0) > 0");
  const double nm1 = s.n - 1.0;
  const double theta0 = -std::log(f0) + nm1 * std::log(yprime_t0);
  auto integrand = [nm1](double u) { return std::expm1(softplus(-u) / nm1); };
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  return GK::integrate(integrand, T + theta0, t0 + theta0, 20, 1e-13);
}

double zprime_power_integral(int k, const GammaSnapshot& s, double t) {
  if (k < 1) throw DomainError("zprime_power_integral needs k >= 1");
  const double nm1 = s.n - 1.0;
  const double C = s.n / (nm1 * s.gp);
  const double lx = log_X(s, t);
  const double pref = std::pow(C, k + 1) * nm1;
  if (lx < std::log(kSeriesCutoff)) return pref * small_x_integral(k, k + 1, std::exp(lx));
  const double inv = sigmoid(-lx);  // 1/(1+X)
  double sum = 0.0;
  double ip = 1.0;
  for (int r = 1; r <= k; ++r) {
    ip *= inv;
    sum += ((r % 2 == 0) ? 1.0 : -1.0) * binom(k, r) * ip / r;
  }
  return pref * (-harmonic(k) + softplus(lx) - sum);
}

V2Integrals v2_weighted_integrals(const GammaSnapshot& s, double t) {
  const int n = s.n;
  const double nm1 = n - 1.0;
  const double C = n / (nm1 * s.gp);
  const double lx = log_X(s, t);
  V2Integrals out;
  if (lx < std::log(kSeriesCutoff)) {
    out.I1 = -(n / (nm1 * nm1)) * std::pow(C, n - 1) * small_x_integral(n - 1, n + 2, std::exp(lx));
  } else {
    const double inv = sigmoid(-lx);
    double sum = -1.0 / (n * (n + 1.0));
    for (int r = 0; r <= n - 1; ++r) {
      sum += ((r % 2 == 0) ? 1.0 : -1.0) * binom(n - 1, r) * std::pow(inv, r + 2) / (r + 2);
    }
    out.I1 = (s.gp / nm1) * std::pow(C, n) * sum;
  }
  out.I2 = (s.gp / (n + 1.0)) * std::pow(C, n + 1) * std::pow(sigmoid(lx), n + 1);
  out.I = (s.gpp / s.gp) * out.I1 + s.gpp * out.I2;
  return out;
}

RootResult perturbed_root(double a, int n, double b) {
  if (!(a > 0.0)) throw DomainError("perturbed_root needs a > 0");
  if (n < 2) throw DomainError("perturbed_root needs n >= 2");
  auto p = [&](double x) { return std::pow(x, n) - a * std::pow(x, n - 1) - b; };
  auto dp = [&](double x) { return n * std::pow(x, n - 1) - (n - 1) * a * std::pow(x, n - 2); };
  RootResult res;
  double x = a;
  for (int it = 0; it < 100; ++it) {
    res.iterations = it + 1;
    const double fx = p(x);
    const double d = dp(x);
    if (d == 0.0 || !std::isfinite(d)) throw SolverError("perturbed_root: vanishing derivative", x, fx);
    double step = fx / d;
    // Halve until |p| decreases.
    double xn = x - step;
    int halvings = 0;
    while (std::abs(p(xn)) > std::abs(fx) && halvings < 40) {
      step *= 0.5;
      xn = x - step;
      ++halvings;
    }
    x = xn;
    if (std::abs(step) <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x))) break;
    if (it == 99) throw SolverError("perturbed_root: Newton did not converge", x, p(x));
  }
  if (std::abs(x - a) > 0.5 * a) throw SolverError("perturbed_root: left the basin around a", x, p(x));
  res.X = x;
  res.C = b == 0.0 ? 0.0 : std::abs(x - a - b / std::pow(a, n - 1)) * std::pow(a, 2 * n - 1) / (b * b);
  return res;
}

DecayReport error_decay_report(const Nonlinearity& nl, int n, const std::vector<DecayInput>& computed,
                               double factor) {
  DecayReport rep;
  if (!nl.within_hypothesis(n)) {
    rep.refused = true;
    rep.reason = "nonlinearity outside the hypotheses (need a > 0 and 1 < q <= n/(n-1))";
    return rep;
  }
  if (computed.size() < 2) {
    rep.refused = true;
    rep.reason = "need at least two grid points";
    return rep;
  }
  const double nm1 = n - 1.0;
  const double beta = nl.beta_growth();
  std::vector<DecayRow> rT, rY, rP;
  for (const DecayInput& in : computed) {
    const GammaSnapshot s = make_snapshot(nl, n, in.gamma);
    const AsymptoticPrediction pr = predict_all(s, in.A);
    const double d = s.delta;
    const double eh = std::exp(-(s.g - (nm1 / n) * s.gamma * s.gp));
    const double den_T = d * d / s.gp + std::pow(d, beta + 1.0) / std::pow(s.gp, beta) + eh;
    const double den_Y = d * d * s.gpp / std::pow(s.gp, 4) + eh / std::min(s.gp, std::pow(s.gp, nm1));
    const double den_P = s.gpp * std::pow(d, 4) / s.gp;
    auto row = [&](const char* q, double c, double p, double den) {
      DecayRow r;
      r.gamma = in.gamma;
      r.gprime = s.gp;
      r.quantity = q;
      r.computed = c;
      r.predicted = p;
      r.raw_err = std::abs(c - p);
      r.normalized_err = r.raw_err / den;
      return r;
    };
    rT.push_back(row("T", in.T, pr.T_pred, den_T));
    rY.push_back(row("yprime_T", in.yprime_T, pr.yprime_T_pred, den_Y));
    if (in.Tprime) rP.push_back(row("Tprime", *in.Tprime, pr.Tprime_pred, den_P));
  }
  auto verdict = [&](const std::vector<DecayRow>& rows, const char* q) {
    DecayVerdict v;
    v.quantity = q;
    const std::size_t start = rows.size() / 2;
    double mx = 0.0, mn = std::numeric_limits<double>::infinity();
    for (std::size_t i = start; i < rows.size(); ++i) {
      mx = std::max(mx, rows[i].normalized_err);
      mn = std::min(mn, rows[i].normalized_err);
    }
    v.max_over_min = mn > 0.0 ? mx / mn : std::numeric_limits<double>::infinity();
    v.bounded = v.max_over_min <= factor;
    rep.rows.insert(rep.rows.end(), rows.begin(), rows.end());
    rep.verdicts.push_back(v);
  };
  verdict(rT, "T");
  verdict(rY, "yprime_T");
  if (!rP.empty()) verdict(rP, "Tprime");
  return rep;
}

void write_decay_csv(const DecayReport& rep, std::ostream& out) {
  const auto old = out.precision(17);
  out << "gamma,gprime,Q,computed,predicted,raw_err,normalized_err\n";
  for (const DecayRow& r : rep.rows) {
    out << r.gamma << ',' << r.gprime << ',' << r.quantity << ',' << r.computed << ',' << r.predicted << ','
        << r.raw_err << ',' << r.normalized_err << '\n';
  }
  out.precision(old);
}

}  // namespace qshoot
