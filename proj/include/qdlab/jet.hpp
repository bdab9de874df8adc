#pragma once

// Truncated multivariate Taylor expansions ("jets") with complex coefficients.
//
// A Jet in nvars variables of order q stores c[alpha] = (d^alpha f)(u0) / alpha!
// for every multi-index |alpha| <= q, in graded order: all degree-0 entries,
// then degree 1, and so on. Truncating to a lower order is therefore a prefix.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "qdlab/core.hpp"

namespace qdlab {

inline constexpr int kMaxJetOrder = 4;
inline constexpr int kMaxJetVars = 8;

using MultiIndex = std::array<std::uint8_t, kMaxJetVars>;

/// Index tables shared by every jet with the same number of variables.
class JetLayout {
 public:
  struct Product {
    std::uint32_t out;
    std::uint32_t lhs;
    std::uint32_t rhs;
  };

  static const JetLayout& get(int nvars) {
    static const auto layouts = [] {
      std::array<std::unique_ptr<JetLayout>, kMaxJetVars + 1> all;
      for (int v = 1; v <= kMaxJetVars; ++v) all[v].reset(new JetLayout(v));
      return all;
    }();
    if (nvars < 1 || nvars > kMaxJetVars) {
      throw std::invalid_argument("jet: nvars must be in 1.." + std::to_string(kMaxJetVars) +
                                  ", got " + std::to_string(nvars));
    }
    return *layouts[nvars];
  }

  int nvars() const { return nvars_; }
  std::size_t size(int order) const { return sizes_.at(order); }
  const MultiIndex& multi_index(std::size_t i) const { return indices_[i]; }
  int degree(std::size_t i) const { return degrees_[i]; }

  std::ptrdiff_t find(const MultiIndex& alpha) const {
    auto it = lookup_.find(pack(alpha));
    return it == lookup_.end() ? -1 : static_cast<std::ptrdiff_t>(it->second);
  }

  /// Index of alpha + e_var, or -1 when that exceeds the maximum order.
  std::ptrdiff_t raise(std::size_t i, int var) const { return raise_[i * nvars_ + var]; }

  /// All (out, lhs, rhs) with alpha_lhs + alpha_rhs = alpha_out, sorted by out.
  std::span<const Product> products() const { return products_; }

 private:
  explicit JetLayout(int nvars) : nvars_(nvars) {
    MultiIndex cur{};
    for (int d = 0; d <= kMaxJetOrder; ++d) {
      enumerate(d, 0, cur);
      sizes_[d] = indices_.size();
    }
    for (std::size_t i = 0; i < indices_.size(); ++i) lookup_.emplace(pack(indices_[i]), i);

    raise_.assign(indices_.size() * nvars_, -1);
    for (std::size_t i = 0; i < indices_.size(); ++i) {
      for (int v = 0; v < nvars_; ++v) {
        MultiIndex up = indices_[i];
        ++up[v];
        raise_[i * nvars_ + v] = find(up);
      }
    }

    for (std::size_t o = 0; o < indices_.size(); ++o) {
      const MultiIndex& alpha = indices_[o];
      // every beta <= alpha componentwise
      MultiIndex beta{};
      for (;;) {
        MultiIndex rest{};
        for (int v = 0; v < nvars_; ++v) rest[v] = static_cast<std::uint8_t>(alpha[v] - beta[v]);
        products_.push_back({static_cast<std::uint32_t>(o), static_cast<std::uint32_t>(find(beta)),
                             static_cast<std::uint32_t>(find(rest))});
        int v = 0;
        while (v < nvars_ && beta[v] == alpha[v]) beta[v++] = 0;
        if (v == nvars_) break;
        ++beta[v];
      }
    }
  }

  void enumerate(int remaining, int var, MultiIndex& cur) {
    if (var == nvars_ - 1) {
      cur[var] = static_cast<std::uint8_t>(remaining);
      indices_.push_back(cur);
      int deg = 0;
      for (int v = 0; v < nvars_; ++v) deg += cur[v];
      degrees_.push_back(deg);
      cur[var] = 0;
      return;
    }
    for (int e = remaining; e >= 0; --e) {
      cur[var] = static_cast<std::uint8_t>(e);
      enumerate(remaining - e, var + 1, cur);
    }
    cur[var] = 0;
  }

  static std::uint32_t pack(const MultiIndex& a) {
    std::uint32_t key = 0;
    for (int v = 0; v < kMaxJetVars; ++v) key |= static_cast<std::uint32_t>(a[v] & 7u) << (3 * v);
    return key;
  }

  int nvars_;
  std::array<std::size_t, kMaxJetOrder + 1> sizes_{};
  std::vector<MultiIndex> indices_;
  std::vector<int> degrees_;
  std::unordered_map<std::uint32_t, std::uint32_t> lookup_;
  std::vector<std::ptrdiff_t> raise_;
  std::vector<Product> products_;
};

class Jet {
 public:
  Jet() = default;

  Jet(int nvars, int order) : layout_(&JetLayout::get(nvars)), order_(order) {
    if (order < 0 || order > kMaxJetOrder) {
      throw std::invalid_argument("jet: order must be in 0.." + std::to_string(kMaxJetOrder));
    }
    c_.assign(layout_->size(order), Cx{});
  }

  static Jet constant(Cx value, int nvars, int order) {
    Jet j(nvars, order);
    j.c_[0] = value;
    return j;
  }

  /// Coordinate jet u^var (0-based) at the given value.
  static Jet variable(int var, Cx value, int nvars, int order) {
    Jet j(nvars, order);
    if (var < 0 || var >= nvars) throw std::invalid_argument("jet: variable index out of range");
    j.c_[0] = value;
    if (order >= 1) j.c_[1 + var] = 1.0;
    return j;
  }

  bool empty() const { return layout_ == nullptr; }
  int nvars() const { return layout_->nvars(); }
  int order() const { return order_; }
  const JetLayout& layout() const { return *layout_; }

  Cx value() const { return c_[0]; }
  std::span<const Cx> coeffs() const { return c_; }
  std::span<Cx> coeffs() { return c_; }

  Cx coeff(const MultiIndex& alpha) const {
    auto i = layout_->find(alpha);
    if (i < 0 || static_cast<std::size_t>(i) >= c_.size()) return Cx{};
    return c_[i];
  }

  bool is_constant() const {
    return std::all_of(c_.begin() + 1, c_.end(), [](Cx v) { return v == Cx{}; });
  }

  Jet truncated(int order) const {
    if (order >= order_) return *this;
    Jet j;
    j.layout_ = layout_;
    j.order_ = order;
    j.c_.assign(c_.begin(), c_.begin() + layout_->size(order));
    return j;
  }

  Jet operator-() const {
    Jet j = *this;
    for (auto& v : j.c_) v = -v;
    return j;
  }

  Jet& operator+=(const Jet& o) {
    combine(o);
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    combine(o);
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
    return *this;
  }
  Jet& operator*=(const Jet& o);
  Jet& operator/=(const Jet& o);

  Jet& operator+=(Cx s) {
    c_[0] += s;
    return *this;
  }
  Jet& operator-=(Cx s) {
    c_[0] -= s;
    return *this;
  }
  Jet& operator*=(Cx s) {
    for (auto& v : c_) v *= s;
    return *this;
  }
  Jet& operator/=(Cx s) {
    for (auto& v : c_) v /= s;
    return *this;
  }

 private:
  friend Jet multiply(const Jet& a, const Jet& b);

  // Brings *this down to the common order and checks the variable count.
  void combine(const Jet& o) {
    if (layout_ != o.layout_) {
      throw std::invalid_argument("jet: operands have different variable counts");
    }
    if (o.order_ < order_) {
      order_ = o.order_;
      c_.resize(layout_->size(order_));
    }
  }

  const JetLayout* layout_ = nullptr;
  int order_ = 0;
  std::vector<Cx> c_;
};

inline Jet multiply(const Jet& a, const Jet& b) {
  if (a.layout_ != b.layout_) {
    throw std::invalid_argument("jet: operands have different variable counts");
  }
  const int q = std::min(a.order_, b.order_);
  if (a.order_ == 0 || a.is_constant()) {
    Jet r = b.truncated(q);
    r *= a.value();
    return r;
  }
  if (b.order_ == 0 || b.is_constant()) {
    Jet r = a.truncated(q);
    r *= b.value();
    return r;
  }
  Jet r(a.nvars(), q);
  const std::size_t n = r.c_.size();
  for (const auto& p : a.layout_->products()) {
    if (p.out >= n) break;
    r.c_[p.out] += a.c_[p.lhs] * b.c_[p.rhs];
  }
  return r;
}

inline Jet& Jet::operator*=(const Jet& o) {
  *this = multiply(*this, o);
  return *this;
}

inline Jet operator+(Jet a, const Jet& b) { return a += b; }
inline Jet operator-(Jet a, const Jet& b) { return a -= b; }
inline Jet operator*(const Jet& a, const Jet& b) { return multiply(a, b); }
inline Jet operator/(Jet a, const Jet& b) { return a /= b; }

inline Jet operator+(Jet a, Cx s) { return a += s; }
inline Jet operator+(Cx s, Jet a) { return a += s; }
inline Jet operator-(Jet a, Cx s) { return a -= s; }
inline Jet operator-(Cx s, const Jet& a) { return (-a) += s; }
inline Jet operator*(Jet a, Cx s) { return a *= s; }
inline Jet operator*(Cx s, Jet a) { return a *= s; }
inline Jet operator/(Jet a, Cx s) { return a /= s; }

/// d/du^var; the result has order one less than x.
inline Jet derivative(const Jet& x, int var) {
  if (x.order() < 1) throw std::invalid_argument("jet: cannot differentiate an order-0 jet");
  if (var < 0 || var >= x.nvars()) throw std::invalid_argument("jet: variable index out of range");
  const JetLayout& L = x.layout();
  Jet r(x.nvars(), x.order() - 1);
  auto in = x.coeffs();
  auto out = r.coeffs();
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto up = L.raise(i, var);
    out[i] = static_cast<double>(L.multi_index(i)[var] + 1) * in[up];
  }
  return r;
}

/// Partial derivative d^alpha x at the expansion point (alpha given per variable).
inline Cx jet_partial(const Jet& x, std::span<const int> alpha) {
  if (static_cast<int>(alpha.size()) != x.nvars()) {
    throw std::invalid_argument("jet_partial: multi-index length differs from nvars");
  }
  MultiIndex a{};
  int total = 0;
  double factorial = 1.0;
  for (std::size_t v = 0; v < alpha.size(); ++v) {
    if (alpha[v] < 0) throw std::invalid_argument("jet_partial: negative exponent");
    total += alpha[v];
    if (total > x.order()) {
      throw std::invalid_argument("jet_partial: |alpha| = " + std::to_string(total) +
                                  " exceeds jet order " + std::to_string(x.order()));
    }
    a[v] = static_cast<std::uint8_t>(alpha[v]);
    for (int e = 2; e <= alpha[v]; ++e) factorial *= e;
  }
  return factorial * x.coeff(a);
}

inline Cx jet_partial(const Jet& x, std::initializer_list<int> alpha) {
  return jet_partial(x, std::span<const int>(alpha.begin(), alpha.size()));
}

/// Evaluates sum_m s[m] (x - x0)^m truncated to x's order (Horner in the nilpotent part).
inline Jet compose(std::span<const Cx> s, const Jet& x) {
  const int q = x.order();
  if (static_cast<int>(s.size()) < q + 1) {
    throw std::invalid_argument("compose: series shorter than the jet order");
  }
  if (q == 0 || x.is_constant()) return Jet::constant(s[0], x.nvars(), q);
  Jet delta = x;
  delta.coeffs()[0] = 0.0;
  Jet r = Jet::constant(s[q], x.nvars(), q);
  for (int m = q - 1; m >= 0; --m) {
    r = r * delta;
    r += s[m];
  }
  return r;
}

/// series must be univariate (nvars == 1) of order >= x.order().
inline Jet compose(const Jet& series, const Jet& x) {
  if (series.nvars() != 1) throw std::invalid_argument("compose: series must be univariate");
  return compose(series.coeffs(), x);
}

enum class JetFn { sin, cos, tan, sqrt_principal, log_principal, atan, artanh, reciprocal, exp };

inline const char* to_string(JetFn fn) {
  switch (fn) {
    case JetFn::sin: return "sin";
    case JetFn::cos: return "cos";
    case JetFn::tan: return "tan";
    case JetFn::sqrt_principal: return "sqrt";
    case JetFn::log_principal: return "log";
    case JetFn::atan: return "atan";
    case JetFn::artanh: return "artanh";
    case JetFn::reciprocal: return "reciprocal";
    case JetFn::exp: return "exp";
  }
  return "?";
}

/// Proximity tolerances for branch cuts and poles. A zero tolerance disables the
/// corresponding check (exact zeros of sqrt/log/reciprocal are always rejected).
struct JetPolicy {
  double branch_tol = 1e-9;
  double pole_tol = 1e-9;

  static constexpr JetPolicy unchecked() { return {0.0, 0.0}; }
};

namespace detail {

inline std::string describe(Cx w) {
  std::ostringstream os;
  os.precision(17);
  os << '(' << w.real() << ", " << w.imag() << ')';
  return os.str();
}

[[noreturn]] inline void domain_fail(JetFn fn, Cx w, const char* why) {
  throw DomainError(std::string(to_string(fn)) + ": argument " + describe(w) + " " + why);
}

inline double distance_to_negative_axis(Cx w) {
  if (w.imag() == 0.0) w = Cx(w.real(), 0.0);
  return kPi - std::abs(std::arg(w));
}

// Taylor coefficients of 1/w(eps) for w = w0 + w1 eps + w2 eps^2.
inline std::array<Cx, 4> reciprocal_quadratic(Cx w0, Cx w1, Cx w2) {
  std::array<Cx, 4> r{};
  r[0] = 1.0 / w0;
  for (int m = 1; m < 4; ++m) {
    Cx acc = w1 * r[m - 1];
    if (m >= 2) acc += w2 * r[m - 2];
    r[m] = -acc / w0;
  }
  return r;
}

}  // namespace detail

/// Scalar counterpart of jet_apply; principal branches throughout.
inline Cx apply_scalar(JetFn fn, Cx x) {
  switch (fn) {
    case JetFn::sin: return std::sin(x);
    case JetFn::cos: return std::cos(x);
    case JetFn::tan: return std::tan(x);
    case JetFn::sqrt_principal: return principal_sqrt(x);
    case JetFn::log_principal: return principal_log(x);
    case JetFn::atan: return std::atan(x);
    case JetFn::artanh: return std::atanh(x);
    case JetFn::reciprocal: return 1.0 / x;
    case JetFn::exp: return std::exp(x);
  }
  return {};
}

/// Univariate Taylor coefficients of fn at x0, up to order (<= 4).
inline std::array<Cx, kMaxJetOrder + 1> taylor_coefficients(JetFn fn, Cx x0) {
  std::array<Cx, kMaxJetOrder + 1> c{};
  switch (fn) {
    case JetFn::sin: {
      Cx s = std::sin(x0), k = std::cos(x0);
      c = {s, k, -s / 2.0, -k / 6.0, s / 24.0};
      break;
    }
    case JetFn::cos: {
      Cx s = std::sin(x0), k = std::cos(x0);
      c = {k, -s, -k / 2.0, s / 6.0, k / 24.0};
      break;
    }
    case JetFn::tan: {
      Cx t = std::tan(x0), s = 1.0 + t * t;
      c = {t, s, t * s, s * (1.0 + 3.0 * t * t) / 3.0, t * s * (2.0 + 3.0 * t * t) / 3.0};
      break;
    }
    case JetFn::sqrt_principal: {
      Cx s = principal_sqrt(x0), r = 1.0 / x0;
      c = {s, 0.5 * s * r, -0.125 * s * r * r, 0.0625 * s * r * r * r,
           -0.0390625 * s * r * r * r * r};
      break;
    }
    case JetFn::log_principal: {
      Cx r = 1.0 / x0;
      c = {principal_log(x0), r, -r * r / 2.0, r * r * r / 3.0, -r * r * r * r / 4.0};
      break;
    }
    case JetFn::reciprocal: {
      Cx r = 1.0 / x0;
      c = {r, -r * r, r * r * r, -r * r * r * r, r * r * r * r * r};
      break;
    }
    case JetFn::exp: {
      Cx e = std::exp(x0);
      c = {e, e, e / 2.0, e / 6.0, e / 24.0};
      break;
    }
    case JetFn::atan: {
      auto r = detail::reciprocal_quadratic(1.0 + x0 * x0, 2.0 * x0, 1.0);
      c = {std::atan(x0), r[0], r[1] / 2.0, r[2] / 3.0, r[3] / 4.0};
      break;
    }
    case JetFn::artanh: {
      auto r = detail::reciprocal_quadratic(1.0 - x0 * x0, -2.0 * x0, -1.0);
      c = {std::atanh(x0), r[0], r[1] / 2.0, r[2] / 3.0, r[3] / 4.0};
      break;
    }
  }
  return c;
}

/// fn composed with x, truncated to x's order. Throws DomainError on or near a
/// branch cut / pole (for non-constant jets) and at branch points.
inline Jet jet_apply(JetFn fn, const Jet& x, const JetPolicy& policy = {}) {
  const Cx x0 = x.value();
  if (!std::isfinite(x0.real()) || !std::isfinite(x0.imag())) {
    detail::domain_fail(fn, x0, "is not finite");
  }
  const bool moving = !x.is_constant();
  switch (fn) {
    case JetFn::sqrt_principal:
      if (x0 == Cx{}) {
        if (!moving) return Jet::constant(0.0, x.nvars(), x.order());
        detail::domain_fail(fn, x0, "is the branch point");
      }
      [[fallthrough]];
    case JetFn::log_principal:
      if (x0 == Cx{}) detail::domain_fail(fn, x0, "is the branch point");
      if (moving && policy.branch_tol > 0 && detail::distance_to_negative_axis(x0) < policy.branch_tol) {
        detail::domain_fail(fn, x0, "lies on the branch cut (negative real axis)");
      }
      break;
    case JetFn::tan:
      if (policy.pole_tol > 0 && std::abs(std::cos(x0)) < policy.pole_tol) {
        detail::domain_fail(fn, x0, "is at a pole");
      }
      break;
    case JetFn::reciprocal:
      if (x0 == Cx{}) detail::domain_fail(fn, x0, "is zero");
      break;
    case JetFn::atan:
      if (policy.pole_tol > 0 && std::abs(1.0 + x0 * x0) < policy.pole_tol) {
        detail::domain_fail(fn, x0, "is at a pole (+-i)");
      }
      if (moving && policy.branch_tol > 0 && std::abs(x0.real()) < policy.branch_tol &&
          std::abs(x0.imag()) > 1.0) {
        detail::domain_fail(fn, x0, "lies on a branch cut (imaginary axis beyond +-i)");
      }
      break;
    case JetFn::artanh:
      if (policy.pole_tol > 0 && std::abs(1.0 - x0 * x0) < policy.pole_tol) {
        detail::domain_fail(fn, x0, "is at a pole (+-1)");
      }
      if (moving && policy.branch_tol > 0 && std::abs(x0.imag()) < policy.branch_tol &&
          std::abs(x0.real()) > 1.0) {
        detail::domain_fail(fn, x0, "lies on a branch cut (real axis beyond +-1)");
      }
      break;
    case JetFn::sin:
    case JetFn::cos:
    case JetFn::exp:
      break;
  }
  auto c = taylor_coefficients(fn, x0);
  return compose(std::span<const Cx>(c.data(), x.order() + 1), x);
}

inline Jet& Jet::operator/=(const Jet& o) {
  *this = multiply(*this, jet_apply(JetFn::reciprocal, o));
  return *this;
}

inline Jet operator/(Cx s, const Jet& a) { return s * jet_apply(JetFn::reciprocal, a); }

// Overloads found by argument-dependent lookup, so formula templates can be
// written once for Cx and Jet.
inline Jet sin(const Jet& x) { return jet_apply(JetFn::sin, x); }
inline Jet cos(const Jet& x) { return jet_apply(JetFn::cos, x); }
inline Jet tan(const Jet& x) { return jet_apply(JetFn::tan, x); }
inline Jet exp(const Jet& x) { return jet_apply(JetFn::exp, x); }
inline Jet atan(const Jet& x) { return jet_apply(JetFn::atan, x); }
inline Jet atanh(const Jet& x) { return jet_apply(JetFn::artanh, x); }
inline Jet principal_sqrt(const Jet& x) { return jet_apply(JetFn::sqrt_principal, x); }
inline Jet principal_log(const Jet& x) { return jet_apply(JetFn::log_principal, x); }
inline Jet reciprocal(const Jet& x) { return jet_apply(JetFn::reciprocal, x); }

/// Square root with any sign; for normalizations where only the square matters.
inline Jet sqrt_any(const Jet& x) { return jet_apply(JetFn::sqrt_principal, x, JetPolicy::unchecked()); }
inline Cx sqrt_any(Cx x) { return principal_sqrt(x); }

template <class T>
T square(const T& x) {
  return x * x;
}

inline Cx value_of(Cx x) { return x; }
inline Cx value_of(const Jet& x) { return x.value(); }

/// A constant of the same kind (and jet shape) as `like`.
inline Cx constant_like(Cx /*like*/, Cx v) { return v; }
inline Jet constant_like(const Jet& like, Cx v) { return Jet::constant(v, like.nvars(), like.order()); }

/// Coordinate jets u^1..u^n at the point u.
inline std::vector<Jet> coordinate_jets(std::span<const Cx> u, int order) {
  std::vector<Jet> vars;
  vars.reserve(u.size());
  for (std::size_t k = 0; k < u.size(); ++k) {
    vars.push_back(Jet::variable(static_cast<int>(k), u[k], static_cast<int>(u.size()), order));
  }
  return vars;
}

/// Convenience: the coordinate jet u^var (0-based) with arguments (var, value, nvars, order).
inline Jet jet_var(int var, Cx value, int nvars, int order) {
  if (order < 1 || order > kMaxJetOrder) {
    throw ConfigError("jet_var: order must be in 1.." + std::to_string(kMaxJetOrder) + ", got " +
                      std::to_string(order));
  }
  return Jet::variable(var, value, nvars, order);
}

}  // namespace qdlab
