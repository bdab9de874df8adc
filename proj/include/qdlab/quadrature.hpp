#pragma once

// Adaptive Gauss-Kronrod (7/15) integration of complex-valued integrands over
// real segments, and integral-defined functions lifted into jet arithmetic.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <queue>
#include <sstream>
#include <vector>

#include "qdlab/core.hpp"
#include "qdlab/jet.hpp"

namespace qdlab {

struct QuadOptions {
  double abs_tol = 1e-12;
  double rel_tol = 1e-12;
  std::size_t max_evaluations = 100000;
};

template <class V>
struct BasicQuadResult {
  V value{};
  double abs_error_estimate = 0.0;
  std::size_t evaluations = 0;
};

using QuadResult = BasicQuadResult<Cx>;

/// Lower-limit denominators below this modulus mark a profile integral as singular.
inline constexpr double kSingularityTol = 1e-8;

namespace detail {

inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};

inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};

// Gauss weights for the nodes kKronrodNodes[1], [3], [5], [7].
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

inline double max_abs(Cx v) { return std::abs(v); }
inline double max_abs(const std::vector<Cx>& v) {
  double m = 0.0;
  for (Cx x : v) m = std::max(m, std::abs(x));
  return m;
}

inline void axpy(Cx& y, double a, const Cx& x) { y += a * x; }
inline void axpy(std::vector<Cx>& y, double a, const std::vector<Cx>& x) {
  if (y.empty()) y.assign(x.size(), Cx{});
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

inline Cx difference(const Cx& a, const Cx& b) { return a - b; }
inline std::vector<Cx> difference(const std::vector<Cx>& a, const std::vector<Cx>& b) {
  std::vector<Cx> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return d;
}

template <class V>
struct Panel {
  double a;
  double b;
  V value;
  double error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

template <class V, class F>
Panel<V> kronrod15(const F& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  V fc = f(center);
  V kronrod{};
  V gauss{};
  axpy(kronrod, kKronrodWeights[7], fc);
  axpy(gauss, kGaussWeights[3], fc);
  for (int i = 0; i < 7; ++i) {
    const double dx = half * kKronrodNodes[i];
    V f1 = f(center - dx);
    V f2 = f(center + dx);
    axpy(kronrod, kKronrodWeights[i], f1);
    axpy(kronrod, kKronrodWeights[i], f2);
    if (i % 2 == 1) {
      axpy(gauss, kGaussWeights[i / 2], f1);
      axpy(gauss, kGaussWeights[i / 2], f2);
    }
  }
  V k{}, g{};
  axpy(k, half, kronrod);
  axpy(g, half, gauss);
  const double err = max_abs(difference(k, g));
  return {a, b, k, err};
}

template <class V, class F>
BasicQuadResult<V> integrate_adaptive_impl(const F& f, double a, double b, const QuadOptions& opts) {
  double sign = 1.0;
  if (b < a) {
    std::swap(a, b);
    sign = -1.0;
  }
  std::priority_queue<Panel<V>> heap;
  heap.push(kronrod15<V>(f, a, b));
  std::size_t evals = 15;
  // Running error sum; the value is summed exactly over the panels on exit.
  double err = heap.top().error;
  V running = heap.top().value;
  for (;;) {
    if (err <= std::max(opts.abs_tol, opts.rel_tol * max_abs(running))) {
      V total{};
      double exact_err = 0.0;
      auto panels = std::move(heap);
      std::vector<Panel<V>> sorted;
      while (!panels.empty()) {
        sorted.push_back(panels.top());
        panels.pop();
      }
      std::sort(sorted.begin(), sorted.end(), [](const Panel<V>& l, const Panel<V>& r) { return l.a < r.a; });
      for (const auto& p : sorted) {
        axpy(total, 1.0, p.value);
        exact_err += p.error;
      }
      BasicQuadResult<V> r;
      axpy(r.value, sign, total);
      r.abs_error_estimate = exact_err;
      r.evaluations = evals;
      return r;
    }
    Panel<V> worst = heap.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (evals + 30 > opts.max_evaluations || !(mid > worst.a && mid < worst.b)) {
      std::ostringstream os;
      os.precision(17);
      os << "quadrature did not converge on [" << a << ", " << b << "] after " << evals
         << " evaluations; worst subinterval [" << worst.a << ", " << worst.b
         << "] with error estimate " << worst.error;
      throw AccuracyError(os.str());
    }
    heap.pop();
    Panel<V> left = kronrod15<V>(f, worst.a, mid);
    Panel<V> right = kronrod15<V>(f, mid, worst.b);
    err += left.error + right.error - worst.error;
    err = std::max(err, 0.0);
    axpy(running, -1.0, worst.value);
    axpy(running, 1.0, left.value);
    axpy(running, 1.0, right.value);
    heap.push(std::move(left));
    heap.push(std::move(right));
    evals += 30;
  }
}

}  // namespace detail

/// Integral of a complex-valued integrand t -> Cx over the real segment [a, b].
template <class F>
QuadResult integrate_adaptive(const F& integrand, double a, double b, const QuadOptions& opts = {}) {
  return detail::integrate_adaptive_impl<Cx>([&](double t) { return Cx(integrand(t)); }, a, b, opts);
}

/// Vector-valued variant; every component shares the panel subdivision.
template <class F>
BasicQuadResult<std::vector<Cx>> integrate_adaptive_vector(const F& integrand, double a, double b,
                                                            const QuadOptions& opts = {}) {
  return detail::integrate_adaptive_impl<std::vector<Cx>>(integrand, a, b, opts);
}

/// Integral of phi from a real base to a possibly complex upper limit: along the
/// real axis to Re(upper), then vertically to upper.
template <class F>
Cx integrate_to(const F& phi, double base, Cx upper, const QuadOptions& opts = {}) {
  Cx r = integrate_adaptive([&](double t) { return Cx(phi(Cx(t, 0.0))); }, base, upper.real(), opts).value;
  if (upper.imag() != 0.0) {
    const double re = upper.real();
    const double im = upper.imag();
    r += Cx(0.0, im) *
         integrate_adaptive([&](double s) { return Cx(phi(Cx(re, im * s))); }, 0.0, 1.0, opts).value;
  }
  return r;
}

/// Jet of G(u) = int_base^u phi(t) dt at the jet `upper`. phi must accept both Cx
/// and a univariate Jet (it depends on t only). The value comes from quadrature;
/// the derivative coefficients come from the Taylor expansion of phi at u.
template <class F>
Jet integral_jet(const F& phi, double base, const Jet& upper, const QuadOptions& opts = {}) {
  const Cx u0 = upper.value();
  const Cx value = integrate_to(phi, base, u0, opts);
  const int q = upper.order();
  std::array<Cx, kMaxJetOrder + 1> series{};
  series[0] = value;
  if (q >= 1) {
    Jet t = Jet::variable(0, u0, 1, q - 1);
    Jet d = phi(t);
    for (int m = 1; m <= q; ++m) series[m] = d.coeffs()[m - 1] / static_cast<double>(m);
  }
  return compose(std::span<const Cx>(series.data(), q + 1), upper);
}

/// Jet of G = int_base^U phi(t) dt when phi also depends on other jet quantities
/// (captured by the callable). phi maps a jet t (same variables as U) to a jet.
/// The fixed part is integrated coefficientwise (differentiation under the
/// integral sign); the moving end is integrated exactly in the nilpotent part
/// with 4-point Gauss-Legendre, which is exact for jets of order <= 4.
template <class F>
Jet integral_jet_parametric(const F& phi, double base, const Jet& upper, const QuadOptions& opts = {}) {
  const int nv = upper.nvars();
  const int q = upper.order();
  const Cx u0 = upper.value();
  auto coeffs_at = [&](Cx t) {
    Jet v = phi(Jet::constant(t, nv, q));
    return std::vector<Cx>(v.coeffs().begin(), v.coeffs().end());
  };
  std::vector<Cx> fixed =
      integrate_adaptive_vector([&](double t) { return coeffs_at(Cx(t, 0.0)); }, base, u0.real(), opts).value;
  if (u0.imag() != 0.0) {
    const double re = u0.real();
    const double im = u0.imag();
    auto leg = integrate_adaptive_vector([&](double s) { return coeffs_at(Cx(re, im * s)); }, 0.0, 1.0, opts).value;
    for (std::size_t i = 0; i < fixed.size(); ++i) fixed[i] += Cx(0.0, im) * leg[i];
  }
  Jet result(nv, q);
  auto rc = result.coeffs();
  for (std::size_t i = 0; i < rc.size() && i < fixed.size(); ++i) rc[i] = fixed[i];
  if (q == 0 || upper.is_constant()) return result;

  Jet delta = upper;
  delta.coeffs()[0] = 0.0;
  static constexpr std::array<double, 4> x = {-0.861136311594052575223946488892809,
                                              -0.339981043584856264802665759103245,
                                              0.339981043584856264802665759103245,
                                              0.861136311594052575223946488892809};
  static constexpr std::array<double, 4> w = {0.347854845137453857373063949221999,
                                              0.652145154862546142626936050778001,
                                              0.652145154862546142626936050778001,
                                              0.347854845137453857373063949221999};
  Jet moving(nv, q);
  for (int i = 0; i < 4; ++i) {
    const double s = 0.5 * (1.0 + x[i]);
    Jet t = delta * Cx(s);
    t += u0;
    moving += phi(t) * Cx(0.5 * w[i]);
  }
  return result + delta * moving;
}

}  // namespace qdlab
