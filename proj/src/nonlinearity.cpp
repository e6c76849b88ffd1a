#include "qshoot/nonlinearity.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "qshoot/errors.hpp"

namespace qshoot {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// log(DBL_MAX) with a little headroom.
constexpr double kMaxExponent = 709.0;

// q (q-1) ... (q-k+1)
double falling_factorial(double q, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= (q - i);
  return r;
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------- TabulatedRho

TabulatedRho::TabulatedRho(double spacing, std::vector<double> values)
    : h_(spacing), values_(std::move(values)) {
  if (!(h_ > 0.0)) throw DomainError("tabulated rho: spacing must be positive");
  if (values_.size() < 6) throw DomainError("tabulated rho: need at least 6 samples");
}

TabulatedRho TabulatedRho::from_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open rho table '" + path + "'");
  std::vector<double> us, vs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    double u = 0.0, v = 0.0;
    if (!(ls >> u >> v)) continue;  // header
    us.push_back(u);
    vs.push_back(v);
  }
  if (us.size() < 6) throw ConfigError("rho table '" + path + "' has fewer than 6 rows");
  if (us.front() != 0.0) throw ConfigError("rho table '" + path + "' must start at u = 0");
  const double h = us[1] - us[0];
  for (std::size_t i = 1; i < us.size(); ++i) {
    if (std::abs((us[i] - us[i - 1]) - h) > 1e-9 * std::max(1.0, us[i])) {
      throw ConfigError("rho table '" + path + "' is not uniformly spaced");
    }
  }
  return TabulatedRho(h, std::move(vs));
}

double TabulatedRho::eval(double u, int k) const {
  const int m = static_cast<int>(values_.size());
  int j = static_cast<int>(std::floor(u / h_));
  int lo = std::clamp(j - 2, 0, m - 6);
  // Local interpolant p(s) = sum c_i s^i with s = (u - u_lo)/h on nodes s = 0..5.
  std::array<std::array<double, 7>, 6> a{};
  for (int r = 0; r < 6; ++r) {
    double s = 1.0;
    for (int c = 0; c < 6; ++c) {
      a[r][c] = s;
      s *= r;
    }
    a[r][6] = values_[lo + r];
  }
  for (int c = 0; c < 6; ++c) {
    int piv = c;
    for (int r = c + 1; r < 6; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    std::swap(a[c], a[piv]);
    for (int r = 0; r < 6; ++r) {
      if (r == c) continue;
      const double f = a[r][c] / a[c][c];
      for (int cc = c; cc < 7; ++cc) a[r][cc] -= f * a[c][cc];
    }
  }
  std::array<double, 6> coef{};
  for (int c = 0; c < 6; ++c) coef[c] = a[c][6] / a[c][c];

  const double s = (u - lo * h_) / h_;
  double sum = 0.0;
  for (int i = 5; i >= k; --i) sum = sum * s + coef[i] * falling_factorial(i, k);
  return sum / std::pow(h_, k);
}

// ---------------------------------------------------------------- Family

std::string to_string(Family f) {
  switch (f) {
    case Family::pow_exp: return "pow_exp";
    case Family::linear: return "linear";
    case Family::exp: return "exp";
    case Family::tabulated: return "tabulated";
  }
  return "unknown";
}

Family family_from_string(const std::string& name) {
  if (name == "pow_exp") return Family::pow_exp;
  if (name == "linear") return Family::linear;
  if (name == "exp") return Family::exp;
  if (name == "tabulated") return Family::tabulated;
  throw ConfigError("unknown family '" + name + "'");
}

// ---------------------------------------------------------------- Nonlinearity

Nonlinearity::Nonlinearity(NonlinearityParams params) : params_(std::move(params)) {
  if (!(params_.lambda > 0.0)) throw DomainError("lambda must be positive");
  if (params_.a < 0.0) throw DomainError("a must be nonnegative");
  if (params_.p < 0.0) throw DomainError("p must be nonnegative");
  if (params_.a > 0.0 && !(params_.q > 0.0)) throw DomainError("q must be positive");
  if (params_.family == Family::tabulated && !params_.table) {
    throw DomainError("tabulated family needs a rho table");
  }
  log_lambda_ = std::log(params_.lambda);
  if (params_.p > 0.0) {
    f0_ = 0.0;
  } else {
    const double rho0 = params_.table ? params_.table->eval(0.0, 0) : 0.0;
    f0_ = std::exp(log_lambda_ + rho0);
  }
}

Nonlinearity Nonlinearity::pow_exp(double lambda, double a, double q, double p, double b) {
  NonlinearityParams prm;
  prm.family = Family::pow_exp;
  prm.lambda = lambda;
  prm.a = a;
  prm.q = q;
  prm.p = p;
  prm.b = b;
  return Nonlinearity(prm);
}

Nonlinearity Nonlinearity::linear(double lambda) {
  NonlinearityParams prm;
  prm.family = Family::linear;
  prm.lambda = lambda;
  prm.a = 0.0;
  prm.q = 1.0;
  prm.p = 1.0;
  return Nonlinearity(prm);
}

Nonlinearity Nonlinearity::exponential(double lambda) {
  NonlinearityParams prm;
  prm.family = Family::exp;
  prm.lambda = lambda;
  prm.a = 1.0;
  prm.q = 1.0;
  return Nonlinearity(prm);
}

Nonlinearity Nonlinearity::tabulated(double lambda, double a, double q, double p, double b,
                                     TabulatedRho rho) {
  NonlinearityParams prm;
  prm.family = Family::tabulated;
  prm.lambda = lambda;
  prm.a = a;
  prm.q = q;
  prm.p = p;
  prm.b = b;
  prm.table = std::make_shared<const TabulatedRho>(std::move(rho));
  return Nonlinearity(prm);
}

Nonlinearity Nonlinearity::from_params(const NonlinearityParams& params) {
  return Nonlinearity(params);
}

double Nonlinearity::rho(double u, int k) const {
  if (k < 0 || k > 3) throw DomainError("derivative order must be in 0..3");
  double r = 0.0;
  const double p = params_.p;
  if (p != 0.0) {
    if (!(u > 0.0)) throw DomainError("p log(u) is singular at u = 0");
    switch (k) {
      case 0: r += p * std::log(u); break;
      case 1: r += p / u; break;
      case 2: r += -p / (u * u); break;
      case 3: r += 2.0 * p / (u * u * u); break;
    }
  }
  if (k == 0) r += params_.b * u;
  if (k == 1) r += params_.b;
  if (params_.table) r += params_.table->eval(u, k);
  return r;
}

double Nonlinearity::g(double u, int k) const {
  if (k < 0 || k > 3) throw DomainError("derivative order must be in 0..3");
  if (u < 0.0) throw DomainError("g is defined for u >= 0");
  double power_term = 0.0;
  const double coef = params_.a * falling_factorial(params_.q, k);
  if (coef != 0.0) {
    const double e = params_.q - k;
    if (u == 0.0) {
      if (e < 0.0) throw DomainError("u^(q-k) is singular at u = 0");
      power_term = (e == 0.0) ? coef : 0.0;
    } else {
      power_term = coef * std::pow(u, e);
    }
  }
  return power_term + rho(u, k);
}

double Nonlinearity::log_f(double u) const {
  if (u <= 0.0) return f0_ > 0.0 ? std::log(f0_) : -kInf;
  return log_lambda_ + g(u, 0);
}

double Nonlinearity::f(double u) const {
  const double e = log_f(u);
  if (e > kMaxExponent) throw RangeError("f(u) overflows: log f = " + fmt(e));
  return std::exp(e);
}

double Nonlinearity::source(double u, double t) const {
  const double lf = log_f(u);
  if (lf == -kInf) return 0.0;
  const double e = lf - t;
  if (e > kMaxExponent) throw RangeError("f(u) e^{-t} overflows: exponent " + fmt(e));
  return std::exp(e);
}

double Nonlinearity::fprime(double u) const { return source_prime(u, 0.0); }

double Nonlinearity::source_prime(double u, double t) const {
  if (u > 0.0) {
    const double e = log_lambda_ + g(u, 0) - t;
    if (e > kMaxExponent) throw RangeError("f'(u) e^{-t} overflows: exponent " + fmt(e));
    return std::exp(e) * g(u, 1);
  }
  // One-sided limit f'(0+) of lambda u^p e^{a u^q + b u + rho_tab}.
  const double p = params_.p;
  double limit = 0.0;
  if (p == 0.0) {
    double gp0 = params_.b + (params_.table ? params_.table->eval(0.0, 1) : 0.0);
    if (params_.a > 0.0) {
      if (params_.q == 1.0) gp0 += params_.a;
      if (params_.q < 1.0) gp0 = kInf;
    }
    limit = f0_ * gp0;
  } else if (p == 1.0) {
    const double rho0 = params_.table ? params_.table->eval(0.0, 0) : 0.0;
    limit = std::exp(log_lambda_ + rho0);
  } else {
    limit = p > 1.0 ? 0.0 : kInf;
  }
  if (!std::isfinite(limit)) return 0.0;
  return limit * std::exp(-t);
}

double Nonlinearity::beta_growth() const {
  if (params_.p > 0.0) return params_.p;
  if (params_.table) return 1.0;
  double beta = kInf;
  if (params_.a > 0.0) beta = std::min(beta, params_.q);
  if (params_.b != 0.0) beta = std::min(beta, 1.0);
  return beta;
}

double Nonlinearity::alpha_growth() const {
  if (params_.p > 0.0) return std::min(params_.p, 1.0);
  double alpha = 1.0;
  if (params_.a > 0.0) alpha = std::min(alpha, params_.q);
  return alpha;
}

bool Nonlinearity::within_hypothesis(int n) const {
  const double qc = static_cast<double>(n) / (n - 1);
  return params_.a > 0.0 && params_.q > 1.0 && params_.q <= qc + 1e-15;
}

Nonlinearity Nonlinearity::scaled(double factor) const {
  NonlinearityParams prm = params_;
  prm.lambda *= factor;
  return Nonlinearity(prm);
}

std::string Nonlinearity::describe() const {
  std::ostringstream os;
  os << "family=" << to_string(params_.family) << " lambda=" << fmt(params_.lambda)
     << " a=" << fmt(params_.a) << " q=" << fmt(params_.q) << " p=" << fmt(params_.p)
     << " b=" << fmt(params_.b);
  if (params_.table) os << " rho_table_points=" << params_.table->values().size();
  return os.str();
}

// ---------------------------------------------------------------- hypotheses

std::string to_string(HypothesisVerdict v) { return v == HypothesisVerdict::holds ? "holds" : "fails"; }

std::vector<double> default_hypothesis_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 14; ++i) grid.push_back(std::ldexp(1.0, i));
  return grid;
}

namespace {

std::vector<double> upper_half(const std::vector<double>& v) {
  return {v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2), v.end()};
}

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// |v| shrinks along the tail and has at least halved across it.
bool tends_to_zero(const std::vector<double>& v) {
  if (!all_finite(v)) return false;
  const double first = std::abs(v.front());
  const double last = std::abs(v.back());
  if (last < 1e-12) return true;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (std::abs(v[i]) > std::abs(v[i - 1]) * (1.0 + 1e-12)) return false;
  }
  return last <= 0.5 * first;
}

// Strictly decreasing with a total drop of more than one unit.
bool tends_to_minus_infinity(const std::vector<double>& v) {
  if (!all_finite(v)) return true;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] < v[i - 1])) return false;
  }
  return v.back() < v.front() - 1.0;
}

// Positive, strictly increasing, and at least doubled across the tail.
bool tends_to_infinity(const std::vector<double>& v) {
  if (!all_finite(v)) return false;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] > 0.0)) return false;
    if (i > 0 && !(v[i] > v[i - 1])) return false;
  }
  return v.back() >= 2.0 * v.front();
}

}  // namespace

HypothesisReport check_hypotheses(const Nonlinearity& nl, int n, const std::vector<double>& gamma_grid) {
  if (gamma_grid.empty()) throw DomainError("hypothesis grid is empty");
  for (std::size_t i = 0; i < gamma_grid.size(); ++i) {
    if (!(gamma_grid[i] > 0.0) || (i > 0 && !(gamma_grid[i] > gamma_grid[i - 1]))) {
      throw DomainError("hypothesis grid must be positive and increasing");
    }
  }
  HypothesisReport rep;
  rep.gamma = gamma_grid;
  rep.exploratory = !nl.within_hypothesis(n);
  const double q = nl.params().q;
  const double nm1 = n - 1.0;

  rep.h1.name = "H1";
  rep.h1.series.assign(4, {});
  rep.h2.name = "H2";
  rep.h2.series.assign(1, {});
  rep.h3.name = "H3";
  rep.h3.series.assign(1, {});
  for (double gm : gamma_grid) {
    for (int k = 0; k < 4; ++k) rep.h1.series[k].push_back(nl.rho(gm, k) / std::pow(gm, q - k));
    const double g = nl.g(gm, 0), g1 = nl.g(gm, 1), g2 = nl.g(gm, 2);
    rep.h2.series[0].push_back(g - (nm1 / n) * gm * g1);
    const double lg = std::log(g1);
    rep.h3.series[0].push_back(g1 / (g2 * std::pow(lg, 4)) * (g1 - nm1 * gm * g2));
  }

  bool h1 = true;
  for (const auto& s : rep.h1.series) h1 = h1 && tends_to_zero(upper_half(s));
  rep.h1.trend = h1 ? "to_zero" : "not_to_zero";
  rep.h1.verdict = h1 ? HypothesisVerdict::holds : HypothesisVerdict::fails;

  const bool h2_fails = tends_to_minus_infinity(upper_half(rep.h2.series[0]));
  rep.h2.trend = h2_fails ? "unbounded_below" : "bounded_below";
  rep.h2.verdict = h2_fails ? HypothesisVerdict::fails : HypothesisVerdict::holds;

  const bool h3 = tends_to_infinity(upper_half(rep.h3.series[0]));
  rep.h3.trend = h3 ? "to_infinity" : "not_to_infinity";
  rep.h3.verdict = h3 ? HypothesisVerdict::holds : HypothesisVerdict::fails;
  return rep;
}

ConvexityThreshold find_s0(const Nonlinearity& nl, const ScanSpec& scan) {
  if (!(scan.u_max > 0.0) || scan.count < 2) throw DomainError("invalid s0 scan");
  double last_bad = 0.0;
  bool last_point_bad = false;
  for (int i = 1; i <= scan.count; ++i) {
    const double u = scan.u_max * i / scan.count;
    const bool ok = nl.g(u, 1) > 0.0 && nl.g(u, 2) >= 0.0;
    if (!ok) last_bad = u;
    last_point_bad = !ok;
  }
  if (last_point_bad) {
    throw DomainError("g is not increasing and convex at the end of the scan (u = " + fmt(scan.u_max) + ")");
  }
  return {last_bad};
}

}  // namespace qshoot
