#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qshoot/nonlinearity.hpp"

namespace qshoot {

/// g and its derivatives at gamma plus the landmarks built from them.
///
/// `g` here is log f(gamma) = log(lambda) + g(gamma): the multiplier lambda
/// is folded into the exponent so every closed form below describes the
/// equation -((y')^{n-1})' = e^{g(y) - t} exactly as integrated.
struct GammaSnapshot {
  int n = 2;
  double gamma = 0.0;
  double g = 0.0;
  double gp = 0.0;
  double gpp = 0.0;
  double gppp = 0.0;
  double alpha_n = 0.0;  ///< 1 + 1/2 + ... + 1/n
  double T1 = 0.0;       ///< g + (n-1) log((n-1) g'/n)
  double T0 = 0.0;       ///< zero of the comparison solution z
  double delta = 0.0;    ///< log g'
};

/// Requires g'(gamma) > 0.
GammaSnapshot make_snapshot(const Nonlinearity& nl, int n, double gamma);

double harmonic(int n);

/// Exact rational checks of the two alternating binomial identities:
///   sum_{r=1}^k (-1)^{r+1} C(k,r)/r = 1 + 1/2 + ... + 1/k
///   sum_{r=0}^k (-1)^r C(k,r)/(r+2) = 1/((k+1)(k+2))
bool harmonic_identity_exact(int k);
bool beta_identity_exact(int k);

/// log X(t) with X(t) = e^{(T1 - t)/(n-1)}.
double log_X(const GammaSnapshot& s, double t);

struct ZValue {
  double z = 0.0;
  double zp = 0.0;
  double zpp = 0.0;
};

/// z(t) = gamma - (n/g') log(1 + X), with first and second derivatives.
ZValue comparison_z(const GammaSnapshot& s, double t);

/// psi(theta) = g(theta) - g + ((n-1)/n)(gamma - theta) g' - (n-1) log(((n-1)/n) g').
double psi_eval(const GammaSnapshot& s, const Nonlinearity& nl, double theta);

struct V2Value {
  double V2 = 0.0;
  double V2p = 0.0;
  double V2pp = 0.0;
};

/// V2 = -1/(n-1) + (n/(n-1))/(1+X) and its first two derivatives.
V2Value v2_closed(const GammaSnapshot& s, double t);

/// Zero of V2: S0 = T1 - (n-1) log(n-1).
double v2_zero(const GammaSnapshot& s);

struct AsymptoticPrediction {
  double T_pred = 0.0;
  double yprime_T_pred = 0.0;
  double Tprime_pred = 0.0;
  double S_pred = 0.0;
  double A = 0.0;
  std::string T_error_order;
  std::string yprime_error_order;
  std::string Tprime_error_order;
  std::string S_error_order;
};

/// Leading expansions of T, y'(T), T' and the first turning point of V1.
/// Pure function of the snapshot (and the optional correction A).
AsymptoticPrediction predict_all(const GammaSnapshot& s, std::optional<double> A = std::nullopt);

/// Correction A(gamma) = int_{T+theta0}^{t0+theta0} [(1+e^{-s})^{1/(n-1)} - 1] ds,
/// t0 = (n+3) log g', theta0 = -log f(0) + (n-1) log y'(t0). Zero when f(0) = 0
/// or when T >= t0. `yprime_t0` comes from a computed trajectory.
double correction_A(const GammaSnapshot& s, const Nonlinearity& nl, double T, double yprime_t0);

/// The time t0 = (n+3) log g' at which A(gamma) reads y'.
double correction_A_anchor(const GammaSnapshot& s);

/// int_t^inf (z')^{k+1} ds in closed form.
double zprime_power_integral(int k, const GammaSnapshot& s, double t);

struct V2Integrals {
  double I1 = 0.0;  ///< int_t^inf (z')^{n-2} z'' V2'
  double I2 = 0.0;  ///< int_t^inf (z')^n V2'
  double I = 0.0;   ///< (g''/g') I1 + g'' I2
};

V2Integrals v2_weighted_integrals(const GammaSnapshot& s, double t);

struct RootResult {
  double X = 0.0;
  double C = 0.0;  ///< |X - a - b/a^{n-1}| a^{2n-1} / b^2 (0 when b = 0)
  int iterations = 0;
};

/// Root of x^n - a x^{n-1} - b = 0 near a by safeguarded Newton.
RootResult perturbed_root(double a, int n, double b);

struct DecayInput {
  double gamma = 0.0;
  double T = 0.0;
  double yprime_T = 0.0;
  std::optional<double> Tprime;
  double A = 0.0;  ///< correction A(gamma) added to the T prediction
};

struct DecayRow {
  double gamma = 0.0;
  double gprime = 0.0;
  std::string quantity;  ///< "T", "yprime_T" or "Tprime"
  double computed = 0.0;
  double predicted = 0.0;
  double raw_err = 0.0;
  double normalized_err = 0.0;
};

struct DecayVerdict {
  std::string quantity;
  double max_over_min = 0.0;
  bool bounded = false;
};

struct DecayReport {
  bool refused = false;
  std::string reason;
  std::vector<DecayRow> rows;
  std::vector<DecayVerdict> verdicts;
};

/// Compare computed values with predict_all and normalize the errors by the
/// claimed O-terms:
///   T:   (log g')^2/g' (beta >= 1) or (log g')^{beta+1}/(g')^beta, plus e^{-(g - ((n-1)/n) gamma g')}
///   y':  (log g')^2 g''/(g')^4 + e^{-(g - ((n-1)/n) gamma g')}/g'
///   T':  g'' (log g')^4/g'
/// Normalized errors are called bounded when max/min over the upper half of
/// the grid is at most `factor`. Refuses inputs outside the hypotheses.
DecayReport error_decay_report(const Nonlinearity& nl, int n, const std::vector<DecayInput>& computed,
                               double factor = 10.0);

void write_decay_csv(const DecayReport& rep, std::ostream& out);

}  // namespace qshoot
