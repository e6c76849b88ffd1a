#pragma once

#include <memory>
#include <string>
#include <vector>

namespace qshoot {

/// Tabulated correction rho(u) on a uniform grid starting at u = 0.
///
/// Values and derivatives up to order 3 come from the local degree-5
/// interpolant through the six nodes nearest to u. Third derivatives of a
/// smooth rho are accurate to roughly h^3 |rho^(6)|; a grid with h <= 1e-2
/// keeps rho''' within 1e-4 for the smooth corrections we test with.
class TabulatedRho {
 public:
  TabulatedRho(double spacing, std::vector<double> values);

  /// Load a two-column CSV (u,rho); the u column must be uniform and start at 0.
  static TabulatedRho from_csv(const std::string& path);

  double eval(double u, int k) const;
  double spacing() const { return h_; }
  double u_max() const { return h_ * static_cast<double>(values_.size() - 1); }
  const std::vector<double>& values() const { return values_; }

 private:
  double h_;
  std::vector<double> values_;
};

enum class Family { pow_exp, linear, exp, tabulated };

std::string to_string(Family f);
Family family_from_string(const std::string& name);

/// Parameters of f(u) = lambda * u^p * exp(a u^q + b u [+ rho_tab(u)]).
struct NonlinearityParams {
  Family family = Family::pow_exp;
  double lambda = 1.0;
  double a = 1.0;
  double q = 2.0;
  double p = 0.0;  ///< coefficient of log(u) in rho
  double b = 0.0;  ///< coefficient of u in rho
  std::shared_ptr<const TabulatedRho> table;
};

/// f(u) = lambda e^{g(u)}, g(u) = a u^q + rho(u), with
/// rho(u) = p log(u) + b u (+ an optional tabulated term).
///
/// All exponentials are formed from the combined exponent log(lambda) + g(u) - t,
/// so f(u) e^{-t} stays finite whenever the product is representable even when
/// f(u) alone is not. Immutable; safe to share across threads.
class Nonlinearity {
 public:
  /// lambda u^p e^{a u^q + b u}
  static Nonlinearity pow_exp(double lambda, double a, double q, double p, double b = 0.0);
  /// lambda u (exploratory: no exponential part).
  static Nonlinearity linear(double lambda = 1.0);
  /// lambda e^u (exploratory: q = 1).
  static Nonlinearity exponential(double lambda = 1.0);
  /// lambda u^p e^{a u^q + b u + rho_tab(u)}
  static Nonlinearity tabulated(double lambda, double a, double q, double p, double b,
                                TabulatedRho rho);
  static Nonlinearity from_params(const NonlinearityParams& params);

  /// k-th derivative of g at u, k in 0..3.
  double g(double u, int k = 0) const;
  /// k-th derivative of the correction rho at u.
  double rho(double u, int k) const;

  double lambda() const { return params_.lambda; }
  double log_lambda() const { return log_lambda_; }
  /// log f(u) = log(lambda) + g(u); -inf where f vanishes (u <= 0 with f(0) = 0).
  double log_f(double u) const;
  double f(double u) const;
  double fprime(double u) const;
  /// f(u) e^{-t} as a single exponentiation. Values u <= 0 use the f(0) branch.
  double source(double u, double t) const;
  /// f'(u) e^{-t}; for u <= 0 the one-sided limit f'(0+) (0 when it is infinite).
  double source_prime(double u, double t) const;

  double f0() const { return f0_; }
  /// beta of f(s) - f(0) = O(s^beta) as s -> 0+.
  double beta_growth() const;
  /// alpha in (0,1] of f'(s) = O(s^{-1+alpha}) as s -> 0+.
  double alpha_growth() const;

  /// True when a > 0 and 1 < q <= n/(n-1); everything else is exploratory.
  bool within_hypothesis(int n) const;

  /// Copy with lambda multiplied by `factor`.
  Nonlinearity scaled(double factor) const;

  const NonlinearityParams& params() const { return params_; }
  Family family() const { return params_.family; }
  /// Stable one-line description, e.g. "family=pow_exp lambda=1 a=1 q=2 p=1 b=0".
  std::string describe() const;

 private:
  explicit Nonlinearity(NonlinearityParams params);

  NonlinearityParams params_;
  double log_lambda_;
  double f0_;
};

enum class HypothesisVerdict { holds, fails };
std::string to_string(HypothesisVerdict v);

/// One hypothesis probe: sampled quantities and a finite-sample trend label.
struct HypothesisCheck {
  std::string name;
  std::string trend;  ///< "to_zero", "bounded_below", "to_infinity" or the negation
  HypothesisVerdict verdict = HypothesisVerdict::fails;
  std::vector<std::vector<double>> series;  ///< one row per sampled quantity
};

struct HypothesisReport {
  std::vector<double> gamma;
  HypothesisCheck h1;  ///< rho^(k)(g)/g^{q-k}, k = 0..3
  HypothesisCheck h2;  ///< g - ((n-1)/n) g g'
  HypothesisCheck h3;  ///< g'/(g'' (log g')^4) (g' - (n-1) g g'')
  bool exploratory = false;
};

/// Default probe grid {2^0, ..., 2^14}.
std::vector<double> default_hypothesis_grid();

/// Trend labels over the upper half of an increasing gamma grid. The labels
/// describe finite samples only; they do not prove the limits.
HypothesisReport check_hypotheses(const Nonlinearity& nl, int n, const std::vector<double>& gamma_grid);

struct ScanSpec {
  double u_max = 100.0;
  int count = 20000;
};

struct ConvexityThreshold {
  double s0 = 0.0;
};

/// Smallest scan point beyond which g' > 0 and g'' >= 0 at every later scan point.
/// Throws DomainError when the last scan point already violates the condition.
ConvexityThreshold find_s0(const Nonlinearity& nl, const ScanSpec& scan = {});

}  // namespace qshoot
