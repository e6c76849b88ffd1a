#pragma once

// Dormand-Prince 5(4) integrator with continuous extension and terminal events.
//
// The integrator runs forward or backward (t_bound < t0) and keeps every
// accepted step as a DenseSegment so callers can interpolate, locate further
// crossings, or integrate along the solution afterwards.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace qshoot::ode {

template <std::size_t N>
using Vec = std::array<double, N>;

/// Quartic continuous extension of one accepted step, valid on [t0, t0 + h].
template <std::size_t N>
struct DenseSegment {
  double t0 = 0.0;
  double h = 0.0;
  std::array<Vec<N>, 5> c{};

  double t1() const { return t0 + h; }
  double lo() const { return std::min(t0, t0 + h); }
  double hi() const { return std::max(t0, t0 + h); }

  Vec<N> eval(double t) const {
    const double th = (t - t0) / h;
    const double th1 = 1.0 - th;
    Vec<N> y{};
    for (std::size_t i = 0; i < N; ++i) {
      y[i] = c[0][i] + th * (c[1][i] + th1 * (c[2][i] + th * (c[3][i] + th1 * c[4][i])));
    }
    return y;
  }
};

enum class Status { event, reached_bound, step_underflow, max_steps, nonfinite };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::event: return "event";
    case Status::reached_bound: return "reached_bound";
    case Status::step_underflow: return "step_underflow";
    case Status::max_steps: return "max_steps";
    case Status::nonfinite: return "nonfinite";
  }
  return "unknown";
}

template <std::size_t N>
struct Options {
  double rtol = 1e-10;
  Vec<N> atol{};          ///< per component
  double h_init = 0.0;    ///< 0 selects automatically
  double h_max = std::numeric_limits<double>::infinity();
  std::size_t max_steps = 2'000'000;
  double event_tol = 1e-12;
};

template <std::size_t N>
struct Result {
  Status status = Status::reached_bound;
  std::vector<DenseSegment<N>> segments;
  double t_end = 0.0;
  Vec<N> y_end{};
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  double event_residual = 0.0;
};

/// Event function that never fires.
struct NoEvent {
  template <class V>
  double operator()(double, const V&) const {
    return 1.0;
  }
};

namespace detail {

// Butcher tableau.
inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                        a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
inline constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                        a75 = -2187.0 / 6784, a76 = 11.0 / 84;
inline constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                        e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
inline constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                        d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                        d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

template <std::size_t N>
struct StepOut {
  Vec<N> y1{};
  Vec<N> k7{};
  double err = 0.0;
  DenseSegment<N> seg;
  bool finite = true;
};

template <std::size_t N, class Rhs>
StepOut<N> step(Rhs& rhs, double t, const Vec<N>& y, const Vec<N>& k1, double h, const Options<N>& opt) {
  Vec<N> k2, k3, k4, k5, k6, tmp;
  auto stage = [&](auto&& combine, double ct, Vec<N>& out) {
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * combine(i);
    rhs(t + ct * h, tmp, out);
  };
  stage([&](std::size_t i) { return a21 * k1[i]; }, c2, k2);
  stage([&](std::size_t i) { return a31 * k1[i] + a32 * k2[i]; }, c3, k3);
  stage([&](std::size_t i) { return a41 * k1[i] + a42 * k2[i] + a43 * k3[i]; }, c4, k4);
  stage([&](std::size_t i) { return a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]; }, c5, k5);
  stage([&](std::size_t i) { return a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]; },
        1.0, k6);

  StepOut<N> out;
  for (std::size_t i = 0; i < N; ++i) {
    out.y1[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
  }
  rhs(t + h, out.y1, out.k7);

  double acc = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * out.k7[i]);
    const double sc = opt.atol[i] + opt.rtol * std::max(std::abs(y[i]), std::abs(out.y1[i]));
    const double r = sc > 0.0 ? e / sc : (e == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
    acc += r * r;
    if (!std::isfinite(out.y1[i]) || !std::isfinite(out.k7[i])) out.finite = false;
  }
  out.err = std::sqrt(acc / static_cast<double>(N));
  if (!std::isfinite(out.err)) out.finite = false;

  DenseSegment<N>& s = out.seg;
  s.t0 = t;
  s.h = h;
  for (std::size_t i = 0; i < N; ++i) {
    const double ydiff = out.y1[i] - y[i];
    const double bspl = h * k1[i] - ydiff;
    s.c[0][i] = y[i];
    s.c[1][i] = ydiff;
    s.c[2][i] = bspl;
    s.c[3][i] = ydiff - h * out.k7[i] - bspl;
    s.c[4][i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * out.k7[i]);
  }
  return out;
}

template <std::size_t N>
double weighted_norm(const Vec<N>& v, const Vec<N>& y, const Options<N>& opt) {
  double acc = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    const double sc = opt.atol[i] + opt.rtol * std::abs(y[i]);
    const double r = sc > 0.0 ? v[i] / sc : 0.0;
    acc += r * r;
  }
  return std::sqrt(acc / static_cast<double>(N));
}

}  // namespace detail

/// Integrate y' = rhs(t, y) from t0 toward t_bound.
///
/// `rhs(t, y, dydt)` fills dydt. `event(t, y)` is terminal: integration stops
/// at the first point where it changes from positive to nonpositive, located
/// by bisection on the continuous extension to |dt| <= event_tol and then
/// reached with one fresh step so the final state is a genuine RK state.
template <std::size_t N, class Rhs, class Event = NoEvent>
Result<N> integrate(Rhs rhs, double t0, const Vec<N>& y0, double t_bound, const Options<N>& opt,
                    Event event = {}) {
  Result<N> res;
  const double dir = t_bound >= t0 ? 1.0 : -1.0;
  double t = t0;
  Vec<N> y = y0;
  Vec<N> k1;
  rhs(t, y, k1);
  double g_prev = event(t, y);

  double h = std::abs(opt.h_init);
  if (h == 0.0) {
    const double d0 = detail::weighted_norm(y, y, opt);
    const double d1 = detail::weighted_norm(k1, y, opt);
    h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h = std::min(h, std::abs(t_bound - t0));
  }
  h = std::min(h, opt.h_max);

  int nonfinite_streak = 0;
  while (true) {
    if (res.accepted + res.rejected >= opt.max_steps) {
      res.status = Status::max_steps;
      break;
    }
    const double remaining = std::abs(t_bound - t);
    if (remaining <= 0.0) {
      res.status = Status::reached_bound;
      break;
    }
    bool last = false;
    if (h >= remaining) {
      h = remaining;
      last = true;
    }
    const double h_min = 16.0 * std::numeric_limits<double>::epsilon() * std::abs(t) +
                         std::numeric_limits<double>::min();
    if (h < h_min) {
      res.status = Status::step_underflow;
      break;
    }

    detail::StepOut<N> st = detail::step(rhs, t, y, k1, dir * h, opt);
    if (!st.finite) {
      ++res.rejected;
      if (++nonfinite_streak > 60) {
        res.status = Status::nonfinite;
        break;
      }
      h *= 0.25;
      continue;
    }
    nonfinite_streak = 0;
    if (st.err > 1.0) {
      ++res.rejected;
      h *= std::clamp(0.9 * std::pow(st.err, -0.2), 0.1, 0.9);
      continue;
    }

    const double t_new = last ? t_bound : t + dir * h;
    const double g_new = event(t_new, st.y1);
    if (g_prev > 0.0 && g_new <= 0.0) {
      // Bisect on the continuous extension.
      double a = t, b = t_new;
      while (std::abs(b - a) > opt.event_tol) {
        const double m = 0.5 * (a + b);
        if (m == a || m == b) break;
        if (event(m, st.seg.eval(m)) > 0.0) {
          a = m;
        } else {
          b = m;
        }
      }
      const double t_ev = b;
      detail::StepOut<N> fin = detail::step(rhs, t, y, k1, t_ev - t, opt);
      res.segments.push_back(fin.finite ? fin.seg : st.seg);
      res.t_end = t_ev;
      res.y_end = fin.finite ? fin.y1 : st.seg.eval(t_ev);
      res.event_residual = event(t_ev, res.y_end);
      ++res.accepted;
      res.status = Status::event;
      return res;
    }

    res.segments.push_back(st.seg);
    ++res.accepted;
    t = t_new;
    y = st.y1;
    k1 = st.k7;
    g_prev = g_new;
    if (last) {
      res.status = Status::reached_bound;
      break;
    }
    const double fac = st.err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(st.err, -0.2), 0.2, 5.0);
    h = std::min(h * fac, opt.h_max);
  }
  res.t_end = t;
  res.y_end = y;
  return res;
}

}  // namespace qshoot::ode
