#pragma once

// The quadric sum x_j^2 / a_j = 1 in spherical coordinates, its Peterson family
// of deformations in C^{2n-1}, the z = 1 closed form, the embedding
// C^{n+1} -> C^{2n-1}, and families built from user-supplied base profiles.
//
// Surface parameters u^1..u^n are stored 0-based: u[k-1] holds u^k.

#include <cmath>
#include <functional>
#include <span>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "qdlab/core.hpp"
#include "qdlab/jet.hpp"
#include "qdlab/quadrature.hpp"

namespace qdlab {

inline constexpr double kDistinctnessTol = 1e-8;

struct QuadricSpec {
  int n = 0;
  std::vector<Cx> a;  // a_0..a_n

  /// Throws ConfigError unless n >= 2, a has n+1 non-zero, pairwise distinct entries.
  void validate(double distinct_tol = kDistinctnessTol) const {
    if (n < 2 || n > kMaxJetVars) {
      throw ConfigError("quadric: n must be in 2.." + std::to_string(kMaxJetVars) + ", got " + std::to_string(n));
    }
    if (static_cast<int>(a.size()) != n + 1) {
      throw ConfigError("quadric: expected " + std::to_string(n + 1) + " coefficients a_0..a_n, got " +
                        std::to_string(a.size()));
    }
    for (int j = 0; j <= n; ++j) {
      if (std::abs(a[j]) < distinct_tol) throw ConfigError("quadric: a_" + std::to_string(j) + " is zero");
      for (int k = 0; k < j; ++k) {
        if (std::abs(a[j] - a[k]) < distinct_tol) {
          throw ConfigError("quadric: a_" + std::to_string(k) + " and a_" + std::to_string(j) +
                            " coincide; the coefficients must be distinct");
        }
      }
    }
  }

  /// a = (1, 2, ..., n+1).
  static QuadricSpec sequential(int n) {
    QuadricSpec q{n, {}};
    for (int j = 0; j <= n; ++j) q.a.emplace_back(j + 1.0, 0.0);
    return q;
  }
};

enum class ZConvention {
  theorem1,     // z_0 := 1, profiles built from the quadric coefficients
  generalized,  // z_0 := 0, profiles built from user base profiles
};

struct DeformParams {
  std::vector<Cx> z;  // z_1..z_{n-1}
  ZConvention convention = ZConvention::theorem1;
  bool rebase = true;  // move a singular lower limit 0 to pi/2

  Cx z_at(int k) const {
    if (k == 0) return convention == ZConvention::theorem1 ? Cx(1.0) : Cx(0.0);
    return z.at(k - 1);
  }

  void validate(int n) const {
    if (static_cast<int>(z.size()) != n - 1) {
      throw ConfigError("deformation: expected " + std::to_string(n - 1) + " parameters z_1..z_{n-1}, got " +
                        std::to_string(z.size()));
    }
  }

  static DeformParams uniform(int n, Cx value, ZConvention c = ZConvention::theorem1) {
    return DeformParams{std::vector<Cx>(n - 1, value), c, true};
  }
};

/// A function of a single surface parameter, evaluable as a value or as a
/// univariate Taylor series (and hence on any jet by composition).
class Profile {
 public:
  using ValueFn = std::function<Cx(Cx)>;
  using SeriesFn = std::function<Jet(Cx, int)>;

  Profile() = default;
  Profile(ValueFn value, SeriesFn series) : value_(std::move(value)), series_(std::move(series)) {}

  /// f must accept both Cx and a univariate Jet.
  template <class F>
  static Profile closed_form(F f) {
    return Profile([f](Cx t) { return Cx(f(t)); },
                   [f](Cx t, int order) { return Jet(f(Jet::variable(0, t, 1, order))); });
  }

  static Profile from_series(SeriesFn series) {
    return Profile([series](Cx t) { return series(t, 0).value(); }, series);
  }

  static Profile constant(Cx c) {
    return Profile([c](Cx) { return c; }, [c](Cx, int order) { return Jet::constant(c, 1, order); });
  }

  /// G(u) = int_base^u integrand(t) dt.
  static Profile integral(Profile integrand, double base, QuadOptions opts = {}) {
    auto value = [integrand, base, opts](Cx u) { return integrate_to(integrand, base, u, opts); };
    auto series = [integrand, value](Cx u, int order) {
      Jet s(1, order);
      s.coeffs()[0] = value(u);
      if (order >= 1) {
        Jet d = integrand.series(u, order - 1);
        for (int m = 1; m <= order; ++m) s.coeffs()[m] = d.coeffs()[m - 1] / static_cast<double>(m);
      }
      return s;
    };
    return Profile(value, series);
  }

  explicit operator bool() const { return static_cast<bool>(value_); }

  Cx operator()(Cx u) const { return value_(u); }
  Jet operator()(const Jet& u) const { return compose(series_(u.value(), u.order()), u); }
  Jet series(Cx u, int order) const { return series_(u, order); }

  /// The derivative profile; its series at order r needs this one at order r + 1.
  Profile derivative() const {
    auto s = series_;
    return Profile([s](Cx u) { return s(u, 1).coeffs()[1]; },
                   [s](Cx u, int order) { return qdlab::derivative(s(u, order + 1), 0); });
  }

  /// This profile minus a constant.
  Profile shifted(Cx c) const {
    auto v = value_;
    auto s = series_;
    return Profile([v, c](Cx u) { return v(u) - c; },
                   [s, c](Cx u, int order) {
                     Jet j = s(u, order);
                     j -= c;
                     return j;
                   });
  }

 private:
  ValueFn value_;
  SeriesFn series_;
};

/// Point or jet of a sub-manifold together with the parameter point.
struct ImmersionJet {
  std::vector<Cx> u;
  std::vector<Jet> coords;

  int n() const { return static_cast<int>(u.size()); }
  int ambient_dim() const { return static_cast<int>(coords.size()); }
  int order() const { return coords.empty() ? 0 : coords.front().order(); }
};

/// C_k = prod_{j=k+1}^n cos(u^j); the empty product (k = n) is 1.
template <class T>
T cosine_cascade(std::span<const T> u, int k) {
  const int n = static_cast<int>(u.size());
  T prod = constant_like(u[0], 1.0);
  for (int j = k + 1; j <= n; ++j) prod = prod * cos(u[j - 1]);
  return prod;
}

inline Cx cosine_cascade(const std::vector<Cx>& u, int k) { return cosine_cascade<Cx>(std::span<const Cx>(u), k); }

template <class T>
std::vector<T> quadric_coords(const QuadricSpec& q, std::span<const T> u) {
  const int n = q.n;
  std::vector<T> x;
  x.reserve(n + 1);
  x.push_back(principal_sqrt(q.a[0]) * cosine_cascade<T>(u, 0));
  for (int k = 1; k <= n; ++k) x.push_back(principal_sqrt(q.a[k]) * cosine_cascade<T>(u, k) * sin(u[k - 1]));
  return x;
}

inline ImmersionJet eval_quadric(const QuadricSpec& q, std::span<const Cx> u, int order) {
  if (static_cast<int>(u.size()) != q.n) throw std::invalid_argument("eval_quadric: u must have n entries");
  auto vars = coordinate_jets(u, order);
  return {std::vector<Cx>(u.begin(), u.end()), quadric_coords<Jet>(q, std::span<const Jet>(vars))};
}

inline std::vector<Cx> quadric_point(const QuadricSpec& q, std::span<const Cx> u) {
  return quadric_coords<Cx>(q, u);
}

/// (x_0, ..., x_n) -> (x_0, x_1, x_2, 0, x_3, 0, ..., x_{n-1}, 0, x_n).
template <class T>
std::vector<T> embed(std::span<const T> x) {
  const int n = static_cast<int>(x.size()) - 1;
  if (n < 2) throw std::invalid_argument("embed: need n >= 2");
  std::vector<T> y(2 * n - 1, constant_like(x[0], 0.0));
  y[0] = x[0];
  y[1] = x[1];
  y[2] = x[2];
  for (int k = 3; k <= n; ++k) y[2 * k - 2] = x[k];
  return y;
}

inline std::vector<Cx> embed(const std::vector<Cx>& x) { return embed<Cx>(std::span<const Cx>(x)); }

inline ImmersionJet embed(const ImmersionJet& x) {
  return {x.u, embed<Jet>(std::span<const Jet>(x.coords))};
}

/// Sub-manifold of the form
///   sum_{k<n} C_k f_k(u^k) (cos g_k(u^k) e_{2k-2} + sin g_k(u^k) e_{2k-1}) + h(u^n) e_{2n-2}.
class AnsatzSurface {
 public:
  AnsatzSurface() = default;
  AnsatzSurface(int n, std::vector<Profile> f, std::vector<Profile> g, Profile h, std::vector<double> g_base = {},
                double h_base = 0.0)
      : n_(n), f_(std::move(f)), g_(std::move(g)), h_(std::move(h)), g_base_(std::move(g_base)), h_base_(h_base) {
    if (static_cast<int>(f_.size()) != n - 1 || static_cast<int>(g_.size()) != n - 1) {
      throw std::invalid_argument("AnsatzSurface: need n-1 profiles f_k and g_k");
    }
    if (g_base_.empty()) g_base_.assign(n - 1, 0.0);
  }

  int n() const { return n_; }
  int ambient_dim() const { return 2 * n_ - 1; }
  const Profile& f(int k) const { return f_.at(k - 1); }
  const Profile& g(int k) const { return g_.at(k - 1); }
  const Profile& h() const { return h_; }
  double g_base(int k) const { return g_base_.at(k - 1); }
  double h_base() const { return h_base_; }

  template <class T>
  std::vector<T> coords(std::span<const T> u) const {
    if (static_cast<int>(u.size()) != n_) throw std::invalid_argument("AnsatzSurface: u must have n entries");
    std::vector<T> x(ambient_dim(), constant_like(u[0], 0.0));
    for (int k = 1; k < n_; ++k) {
      T radius = cosine_cascade<T>(u, k) * f_[k - 1](u[k - 1]);
      T angle = g_[k - 1](u[k - 1]);
      x[2 * k - 2] = radius * cos(angle);
      x[2 * k - 1] = radius * sin(angle);
    }
    x[2 * n_ - 2] = h_(u[n_ - 1]);
    return x;
  }

  ImmersionJet eval(std::span<const Cx> u, int order) const {
    auto vars = coordinate_jets(u, order);
    return {std::vector<Cx>(u.begin(), u.end()), coords<Jet>(std::span<const Jet>(vars))};
  }

  std::vector<Cx> point(std::span<const Cx> u) const { return coords<Cx>(u); }

 private:
  int n_ = 0;
  std::vector<Profile> f_, g_;
  Profile h_;
  std::vector<double> g_base_;
  double h_base_ = 0.0;
};

/// Radicands of the Peterson profiles, kept for branch diagnostics:
/// f_k^2, the numerator radicand of g_k', and h'^2.
struct PetersonRadicands {
  std::vector<Profile> f_squared;
  std::vector<Profile> g_numerator;
  Profile h_squared;
};

inline PetersonRadicands peterson_radicands(const QuadricSpec& q, const DeformParams& p) {
  PetersonRadicands r;
  const int n = q.n;
  const Cx a0 = q.a[0];
  for (int k = 1; k < n; ++k) {
    const Cx zp = p.z_at(k - 1), zk = p.z_at(k), ak = q.a[k];
    r.f_squared.push_back(
        Profile::closed_form([=](const auto& t) { return (zp - zk) * a0 + (ak - zp * a0) * square(sin(t)); }));
    r.g_numerator.push_back(Profile::closed_form(
        [=](const auto& t) { return (zp - zk) * a0 * ak + (ak - zp * a0) * zk * a0 * square(sin(t)); }));
  }
  const Cx an = q.a[n], zl = p.z_at(n - 1);
  r.h_squared = Profile::closed_form([=](const auto& t) { return an - (an - zl * a0) * square(sin(t)); });
  return r;
}

namespace detail {

// Lower limit for an integral whose integrand denominator is `den` at the base:
// 0 when regular, pi/2 when rebasing applies, otherwise a DomainError.
inline double choose_base(Cx den_at_zero, Cx den_at_half_pi, bool rebase, const std::string& what) {
  if (std::abs(den_at_zero) >= kSingularityTol) return 0.0;
  if (!rebase) {
    throw DomainError(what + " is singular at the lower limit 0 (denominator " +
                      std::to_string(std::abs(den_at_zero)) + "); rebasing is disabled");
  }
  if (std::abs(den_at_half_pi) < kSingularityTol) {
    throw DomainError(what + " is singular at both 0 and pi/2");
  }
  return kPi / 2;
}

}  // namespace detail

/// Profiles f_k, g_k, h of Theorem-1 type (z_0 = 1) for the quadric q.
inline AnsatzSurface peterson_surface(const QuadricSpec& q, const DeformParams& p, const QuadOptions& opts = {}) {
  q.validate();
  p.validate(q.n);
  if (p.convention != ZConvention::theorem1) {
    throw ConfigError("peterson_surface: parameters must use the z_0 = 1 convention");
  }
  const int n = q.n;
  const Cx a0 = q.a[0];
  std::vector<Profile> f, g;
  std::vector<double> bases;
  for (int k = 1; k < n; ++k) {
    const Cx zp = p.z_at(k - 1), zk = p.z_at(k), ak = q.a[k];
    auto f_sq = [=](const auto& t) { return (zp - zk) * a0 + (ak - zp * a0) * square(sin(t)); };
    auto g_num = [=](const auto& t) { return (zp - zk) * a0 * ak + (ak - zp * a0) * zk * a0 * square(sin(t)); };
    f.push_back(Profile::closed_form([=](const auto& t) { return principal_sqrt(f_sq(t)); }));
    Profile integrand = Profile::closed_form([=](const auto& t) { return principal_sqrt(g_num(t)) / f_sq(t); });
    const double base =
        detail::choose_base(f_sq(Cx(0.0)), f_sq(Cx(kPi / 2)), p.rebase, "profile g_" + std::to_string(k));
    bases.push_back(base);
    g.push_back(Profile::integral(integrand, base, opts));
  }
  const Cx an = q.a[n], zl = p.z_at(n - 1);
  Profile h_prime = Profile::closed_form([=](const auto& t) { return principal_sqrt(an - (an - zl * a0) * square(sin(t))); });
  Profile h = Profile::integral(h_prime, 0.0, opts);
  return AnsatzSurface(n, std::move(f), std::move(g), std::move(h), std::move(bases), 0.0);
}

inline ImmersionJet eval_peterson(const QuadricSpec& q, const DeformParams& p, std::span<const Cx> u, int order,
                                  const QuadOptions& opts = {}) {
  return peterson_surface(q, p, opts).eval(u, order);
}

template <class T>
struct ClosedFormZ1 {
  std::vector<T> radius;  // sqrt(a_k - a_0) C_k sin(u^k), k = 1..n-1
  std::vector<T> angle;   // sqrt(a_0)/sqrt(a_k - a_0) artanh(cos u^k)
  T last;                 // int_0^{u^n} sqrt(a_n - (a_n - a_0) sin^2 t) dt
};

/// Peterson's closed form of the z = (1, ..., 1) member.
template <class T>
ClosedFormZ1<T> peterson_closed_z1(const QuadricSpec& q, std::span<const T> u, const QuadOptions& opts = {}) {
  const int n = q.n;
  const Cx a0 = q.a[0];
  ClosedFormZ1<T> out;
  for (int k = 1; k < n; ++k) {
    const Cx ak = q.a[k];
    T c = cos(u[k - 1]);
    if constexpr (std::is_same_v<T, Cx>) {
      if (std::abs(1.0 - c * c) < 1e-9) {
        throw DomainError("peterson_closed_z1: artanh(cos u^" + std::to_string(k) + ") is at a pole");
      }
    }
    out.radius.push_back(principal_sqrt(ak - a0) * cosine_cascade<T>(u, k) * sin(u[k - 1]));
    out.angle.push_back(principal_sqrt(a0) / principal_sqrt(ak - a0) * atanh(c));
  }
  const Cx an = q.a[n];
  auto h_prime = [=](const auto& t) { return principal_sqrt(an - (an - a0) * square(sin(t))); };
  if constexpr (std::is_same_v<T, Cx>) {
    out.last = integrate_to(h_prime, 0.0, u[n - 1], opts);
  } else {
    out.last = integral_jet(h_prime, 0.0, u[n - 1], opts);
  }
  return out;
}

inline ClosedFormZ1<Cx> peterson_closed_z1(const QuadricSpec& q, const std::vector<Cx>& u) {
  return peterson_closed_z1<Cx>(q, std::span<const Cx>(u));
}

/// User-supplied base profiles f_k(u^k), g_k(u^k) (k = 1..n-1) and h(u^n).
struct BaseProfiles {
  std::vector<Profile> f;
  std::vector<Profile> g;
  Profile h;
};

/// The family with z_0 := 0 built on top of base profiles:
///   f_k = sqrt(z_k + F_k^2 - z_{k-1} cos^2),
///   g_k = int sqrt(F_k'^2 + F_k^2 G_k'^2 - (f_k'^2 + z_{k-1} sin^2)) / f_k,
///   h   = int sqrt(H'^2 - z_{n-1} sin^2).
/// Where both neighbouring parameters vanish the base profile is used as is.
inline AnsatzSurface generalized_surface(int n, const BaseProfiles& base, const DeformParams& p,
                                         const QuadOptions& opts = {}) {
  p.validate(n);
  if (p.convention != ZConvention::generalized) {
    throw ConfigError("generalized_surface: parameters must use the z_0 = 0 convention");
  }
  if (static_cast<int>(base.f.size()) != n - 1 || static_cast<int>(base.g.size()) != n - 1 || !base.h) {
    throw ConfigError("generalized_surface: need n-1 base profiles f_k, g_k and one h");
  }
  std::vector<Profile> f, g;
  std::vector<double> bases;
  for (int k = 1; k < n; ++k) {
    const Cx zp = p.z_at(k - 1), zk = p.z_at(k);
    const Profile F = base.f[k - 1];
    const Profile G = base.g[k - 1];
    if (zp == Cx{} && zk == Cx{}) {
      f.push_back(F);
      g.push_back(G.shifted(G(Cx(0.0))));
      bases.push_back(0.0);
      continue;
    }
    auto fz_series = [F, zp, zk](Cx t, int order) {
      Jet Ft = F.series(t, order);
      Jet T = Jet::variable(0, t, 1, order);
      return principal_sqrt(zk + Ft * Ft - zp * square(cos(T)));
    };
    Profile fz = Profile::from_series(fz_series);
    auto integrand_series = [F, G, fz_series, zp](Cx t, int order) {
      Jet Ft = F.series(t, order + 1);
      Jet Gt = G.series(t, order + 1);
      Jet fzt = fz_series(t, order + 1);
      Jet T = Jet::variable(0, t, 1, order);
      Jet Fp = derivative(Ft, 0), Gp = derivative(Gt, 0), fzp = derivative(fzt, 0);
      Jet Fr = Ft.truncated(order), fzr = fzt.truncated(order);
      return principal_sqrt(Fp * Fp + Fr * Fr * Gp * Gp - (fzp * fzp + zp * square(sin(T)))) / fzr;
    };
    auto fz_sq = [F, zp, zk](double t) {
      Cx Fv = F(Cx(t));
      return zk + Fv * Fv - zp * square(std::cos(Cx(t)));
    };
    const double b = detail::choose_base(fz_sq(0.0), fz_sq(kPi / 2), p.rebase, "profile g_" + std::to_string(k));
    bases.push_back(b);
    f.push_back(fz);
    g.push_back(Profile::integral(Profile::from_series(integrand_series), b, opts));
  }
  const Cx zl = p.z_at(n - 1);
  Profile h;
  if (zl == Cx{}) {
    h = base.h.shifted(base.h(Cx(0.0)));
  } else {
    const Profile H = base.h;
    auto h_prime = [H, zl](Cx t, int order) {
      Jet Hp = derivative(H.series(t, order + 1), 0);
      Jet T = Jet::variable(0, t, 1, order);
      return principal_sqrt(Hp * Hp - zl * square(sin(T)));
    };
    h = Profile::integral(Profile::from_series(h_prime), 0.0, opts);
  }
  return AnsatzSurface(n, std::move(f), std::move(g), std::move(h), std::move(bases), 0.0);
}

inline ImmersionJet eval_generalized(int n, const BaseProfiles& base, const DeformParams& p, std::span<const Cx> u,
                                     int order, const QuadOptions& opts = {}) {
  return generalized_surface(n, base, p, opts).eval(u, order);
}

/// Base profiles of the quadric itself (its z = 0 member), usable with
/// generalized_surface: F_1 = sqrt(a_0 cos^2 + a_1 sin^2),
/// G_1 = atan(sqrt(a_1/a_0) tan), F_k = sqrt(a_k) sin, G_k = 0, H = sqrt(a_n) sin.
inline BaseProfiles quadric_base_profiles(const QuadricSpec& q) {
  BaseProfiles b;
  const Cx a0 = q.a[0], a1 = q.a[1];
  const Cx ratio = principal_sqrt(a1) / principal_sqrt(a0);
  b.f.push_back(Profile::closed_form(
      [=](const auto& t) { return principal_sqrt(a0 * square(cos(t)) + a1 * square(sin(t))); }));
  b.g.push_back(Profile::closed_form([=](const auto& t) { return atan(ratio * tan(t)); }));
  for (int k = 2; k < q.n; ++k) {
    const Cx sk = principal_sqrt(q.a[k]);
    b.f.push_back(Profile::closed_form([=](const auto& t) { return sk * sin(t); }));
    b.g.push_back(Profile::constant(0.0));
  }
  const Cx sn = principal_sqrt(q.a[q.n]);
  b.h = Profile::closed_form([=](const auto& t) { return sn * sin(t); });
  return b;
}

}  // namespace qdlab
