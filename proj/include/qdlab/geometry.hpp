#pragma once

// Tensor calculus of immersions into C^m under the bilinear form <x, y> = x^T y.
//
// Every derived quantity is itself a jet: an immersion jet of order q yields a
// metric of order q-1, Christoffel symbols and second forms of order q-2, and a
// curvature tensor of order q-3. Indices are 0-based throughout.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "qdlab/core.hpp"
#include "qdlab/immersions.hpp"
#include "qdlab/jet.hpp"

namespace qdlab {

inline constexpr double kMetricDegeneracyTol = 1e-12;
inline constexpr double kIsotropyTol = 1e-10;

/// Dense array of jets with up to four indices.
class JetArray {
 public:
  JetArray() = default;
  explicit JetArray(std::vector<int> dims) : dims_(std::move(dims)) {
    std::size_t total = 1;
    for (int d : dims_) total *= static_cast<std::size_t>(d);
    data_.resize(total);
  }

  bool empty() const { return data_.empty(); }
  int dim(int i) const { return dims_.at(i); }
  int rank() const { return static_cast<int>(dims_.size()); }

  template <class... I>
  Jet& operator()(I... idx) {
    return data_[offset({static_cast<int>(idx)...})];
  }
  template <class... I>
  const Jet& operator()(I... idx) const {
    return data_[offset({static_cast<int>(idx)...})];
  }

  /// Value (order-0 part) at an index.
  template <class... I>
  Cx val(I... idx) const {
    return data_[offset({static_cast<int>(idx)...})].value();
  }

  std::vector<Jet>& data() { return data_; }
  const std::vector<Jet>& data() const { return data_; }

  double max_abs() const {
    double m = 0.0;
    for (const auto& j : data_) {
      if (!j.empty()) m = std::max(m, std::abs(j.value()));
    }
    return m;
  }

 private:
  std::size_t offset(std::initializer_list<int> idx) const {
    std::size_t off = 0;
    std::size_t r = 0;
    for (int i : idx) {
      off = off * static_cast<std::size_t>(dims_[r]) + static_cast<std::size_t>(i);
      ++r;
    }
    return off;
  }

  std::vector<int> dims_;
  std::vector<Jet> data_;
};

inline Jet zero_like(const Jet& like) { return Jet::constant(0.0, like.nvars(), like.order()); }

/// dx[j][c] = d x^c / d u^j.
inline std::vector<std::vector<Jet>> tangent_vectors(const ImmersionJet& x) {
  if (x.order() < 1) throw std::invalid_argument("tangent_vectors: immersion order must be >= 1");
  std::vector<std::vector<Jet>> dx(x.n());
  for (int j = 0; j < x.n(); ++j) {
    for (const auto& c : x.coords) dx[j].push_back(derivative(c, j));
  }
  return dx;
}

template <class T>
T bilinear(std::span<const T> a, std::span<const T> b) {
  T s = a[0] * b[0];
  for (std::size_t i = 1; i < a.size(); ++i) s = s + a[i] * b[i];
  return s;
}

template <class T>
T bilinear(const std::vector<T>& a, const std::vector<T>& b) {
  return bilinear<T>(std::span<const T>(a), std::span<const T>(b));
}

/// g_jk = <d_j x, d_k x>.
inline JetArray first_form(const ImmersionJet& x) {
  auto dx = tangent_vectors(x);
  const int n = x.n();
  JetArray g({n, n});
  for (int j = 0; j < n; ++j) {
    for (int k = j; k < n; ++k) {
      g(j, k) = bilinear(dx[j], dx[k]);
      g(k, j) = g(j, k);
    }
  }
  return g;
}

/// Inverse of a square jet matrix by Gauss-Jordan elimination with partial
/// pivoting on the values. Throws DegeneracyError when |det| < tol * scale^n.
inline JetArray invert(const JetArray& m, double tol = kMetricDegeneracyTol) {
  const int n = m.dim(0);
  JetArray a = m;
  JetArray inv({n, n});
  const Jet& like = m(0, 0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) inv(i, j) = Jet::constant(i == j ? 1.0 : 0.0, like.nvars(), like.order());
  }
  const double scale = std::max(m.max_abs(), 1e-300);
  double det_abs = 1.0;
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r) {
      if (std::abs(a.val(r, col)) > std::abs(a.val(piv, col))) piv = r;
    }
    det_abs *= std::abs(a.val(piv, col)) / scale;
    if (det_abs < tol || a.val(piv, col) == Cx{}) {
      throw DegeneracyError("metric is singular or isotropic (|det| / scale^n = " + std::to_string(det_abs) + ")");
    }
    if (piv != col) {
      for (int c = 0; c < n; ++c) {
        std::swap(a(piv, c), a(col, c));
        std::swap(inv(piv, c), inv(col, c));
      }
    }
    Jet r = reciprocal(a(col, col));
    for (int c = 0; c < n; ++c) {
      a(col, c) = a(col, c) * r;
      inv(col, c) = inv(col, c) * r;
    }
    for (int row = 0; row < n; ++row) {
      if (row == col) continue;
      Jet f = a(row, col);
      if (f.value() == Cx{} && f.is_constant()) continue;
      for (int c = 0; c < n; ++c) {
        a(row, c) -= f * a(col, c);
        inv(row, c) -= f * inv(col, c);
      }
    }
  }
  return inv;
}

/// Gamma(l, j, k) = Gamma^l_jk = 1/2 g^lm (d_k g_jm + d_j g_km - d_m g_jk), from
/// dg(l, j, k) = d_l g_jk.
inline JetArray christoffel(const JetArray& ginv, const JetArray& dg) {
  const int n = ginv.dim(0);
  JetArray gamma({n, n, n});
  for (int j = 0; j < n; ++j) {
    for (int k = j; k < n; ++k) {
      std::vector<Jet> lower;
      lower.reserve(n);
      for (int m = 0; m < n; ++m) lower.push_back((dg(k, j, m) + dg(j, k, m) - dg(m, j, k)) * Cx(0.5));
      for (int l = 0; l < n; ++l) {
        Jet s = ginv(l, 0) * lower[0];
        for (int m = 1; m < n; ++m) s += ginv(l, m) * lower[m];
        gamma(l, j, k) = s;
        gamma(l, k, j) = s;
      }
    }
  }
  return gamma;
}

/// R(a, b, c, d) = g_bp R^p_acd with
/// R^p_jkl = d_l Gamma^p_jk - d_k Gamma^p_jl + Gamma^q_jk Gamma^p_ql - Gamma^q_jl Gamma^p_qk.
inline JetArray riemann(const JetArray& g, const JetArray& gamma, const JetArray& dgamma) {
  const int n = g.dim(0);
  JetArray up({n, n, n, n});  // up(p, j, k, l) = R^p_jkl
  for (int p = 0; p < n; ++p) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        for (int l = 0; l < n; ++l) {
          if (k == l) {
            up(p, j, k, l) = zero_like(dgamma(0, 0, 0, 0));
            continue;
          }
          if (l < k) {
            up(p, j, k, l) = -up(p, j, l, k);
            continue;
          }
          Jet s = dgamma(l, p, j, k) - dgamma(k, p, j, l);
          for (int q = 0; q < n; ++q) s += gamma(q, j, k) * gamma(p, q, l) - gamma(q, j, l) * gamma(p, q, k);
          up(p, j, k, l) = s;
        }
      }
    }
  }
  JetArray R({n, n, n, n});
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      for (int c = 0; c < n; ++c) {
        for (int d = 0; d < n; ++d) {
          Jet s = g(b, 0) * up(0, a, c, d);
          for (int p = 1; p < n; ++p) s += g(b, p) * up(p, a, c, d);
          R(a, b, c, d) = s;
        }
      }
    }
  }
  return R;
}

/// Intrinsic data of a metric jet. Fields that the jet order cannot support
/// are left empty.
struct MetricData {
  int n = 0;
  JetArray g;       // g(j, k)
  JetArray ginv;    // g^jk
  JetArray dg;      // dg(l, j, k) = d_l g_jk
  JetArray gamma;   // gamma(l, j, k) = Gamma^l_jk
  JetArray dgamma;  // dgamma(m, l, j, k) = d_m Gamma^l_jk
  JetArray R;       // R(a, b, c, d)

  bool has_christoffel() const { return !gamma.empty(); }
  bool has_riemann() const { return !R.empty(); }
};

inline MetricData metric_data(const JetArray& g) {
  MetricData m;
  m.n = g.dim(0);
  const int n = m.n;
  m.g = g;
  m.ginv = invert(g);
  const int q = g(0, 0).order();
  if (q < 1) return m;
  m.dg = JetArray({n, n, n});
  for (int l = 0; l < n; ++l) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) m.dg(l, j, k) = derivative(g(j, k), l);
    }
  }
  m.gamma = christoffel(m.ginv, m.dg);
  if (q < 2) return m;
  m.dgamma = JetArray({n, n, n, n});
  for (int d = 0; d < n; ++d) {
    for (int l = 0; l < n; ++l) {
      for (int j = 0; j < n; ++j) {
        for (int k = 0; k < n; ++k) m.dgamma(d, l, j, k) = derivative(m.gamma(l, j, k), d);
      }
    }
  }
  m.R = riemann(g, m.gamma, m.dgamma);
  return m;
}

inline MetricData metric_data(const ImmersionJet& x) { return metric_data(first_form(x)); }

/// Gram-Schmidt under <x, y> = x^T y, in input order. Throws DegeneracyError when
/// an intermediate vector has |v^T v| < tol * |v|^2 (Hermitian norm).
template <class T>
std::vector<std::vector<T>> orthonormalize_bilinear(std::vector<std::vector<T>> v, double tol = kIsotropyTol) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      T c = bilinear(v[j], v[i]);
      for (std::size_t c_i = 0; c_i < v[i].size(); ++c_i) v[i][c_i] = v[i][c_i] - c * v[j][c_i];
    }
    T nn = bilinear(v[i], v[i]);
    double herm = 0.0;
    for (const auto& c : v[i]) herm += std::norm(value_of(c));
    if (!(herm > 0.0) || std::abs(value_of(nn)) < tol * herm) {
      throw DegeneracyError("orthonormalize_bilinear: vector " + std::to_string(i + 1) +
                            " is isotropic or dependent (|v^T v| = " + std::to_string(std::abs(value_of(nn))) + ")");
    }
    T inv = reciprocal(sqrt_any(nn));
    for (auto& c : v[i]) c = c * inv;
  }
  return v;
}

/// Normal frame N_1..N_p of an immersion: raw fields, the bilinear-orthonormal
/// frame, its connection conn(a, b, j) = N_a^T d_j N_b and the normal curvature
/// curv(b, a, j, k) = d_k conn(b, a, j) - d_j conn(b, a, k)
///                    + sum_c (conn(b, c, k) conn(c, a, j) - conn(b, c, j) conn(c, a, k)).
struct NormalFrame {
  std::vector<std::vector<Jet>> raw;
  std::vector<std::vector<Jet>> unit;
  JetArray conn;
  JetArray curv;

  int p() const { return static_cast<int>(raw.size()); }
};

inline NormalFrame make_frame(std::vector<std::vector<Jet>> raw) {
  NormalFrame f;
  f.raw = std::move(raw);
  f.unit = orthonormalize_bilinear(f.raw);
  const int p = f.p();
  const int n = f.unit[0][0].nvars();
  const int q = f.unit[0][0].order();
  if (q < 1) return f;
  f.conn = JetArray({p, p, n});
  for (int j = 0; j < n; ++j) {
    std::vector<std::vector<Jet>> dN(p);
    for (int b = 0; b < p; ++b) {
      for (const auto& c : f.unit[b]) dN[b].push_back(derivative(c, j));
    }
    for (int a = 0; a < p; ++a) {
      for (int b = 0; b < p; ++b) f.conn(a, b, j) = bilinear(f.unit[a], dN[b]);
    }
  }
  if (q < 2) return f;
  f.curv = JetArray({p, p, n, n});
  for (int b = 0; b < p; ++b) {
    for (int a = 0; a < p; ++a) {
      for (int j = 0; j < n; ++j) {
        for (int k = 0; k < n; ++k) {
          Jet s = derivative(f.conn(b, a, j), k) - derivative(f.conn(b, a, k), j);
          for (int c = 0; c < p; ++c) s += f.conn(b, c, k) * f.conn(c, a, j) - f.conn(b, c, j) * f.conn(c, a, k);
          f.curv(b, a, j, k) = s;
        }
      }
    }
  }
  return f;
}

/// Quadric normal N0^ = sum_j x_j / a_j e_j, i.e. (sqrt a_0)^-1 C_0 e_0 + sum (sqrt a_k)^-1 C_k sin u^k e_k.
inline std::vector<Jet> quadric_raw_normal(const QuadricSpec& q, const ImmersionJet& x) {
  std::vector<Jet> N;
  for (int j = 0; j <= q.n; ++j) N.push_back(x.coords[j] / q.a[j]);
  return N;
}

inline NormalFrame normal_frame_quadric(const QuadricSpec& q, const ImmersionJet& x) {
  return make_frame({quadric_raw_normal(q, x)});
}

inline NormalFrame normal_frame_quadric(const QuadricSpec& q, std::span<const Cx> u, int order) {
  return normal_frame_quadric(q, eval_quadric(q, u, order));
}

/// Gradients N_k of F_k = x_{2k-2}^2 + x_{2k-1}^2 - C_k^2 f_k^2 (k = 1..n-1), expressed
/// through the profiles; jets of order `order - 1`.
inline std::vector<std::vector<Jet>> ansatz_raw_normals(const AnsatzSurface& s, std::span<const Cx> u, int order) {
  const int n = s.n();
  const int m = s.ambient_dim();
  auto vars = coordinate_jets(u, order);
  std::span<const Jet> uv(vars);
  auto x = s.coords<Jet>(uv);
  std::vector<Jet> f(n), fp(n), gp(n), C(n + 1);
  for (int k = 1; k < n; ++k) {
    f[k] = s.f(k)(vars[k - 1]);
    fp[k] = derivative(f[k], k - 1);
    gp[k] = derivative(s.g(k)(vars[k - 1]), k - 1);
    if (gp[k].value() == Cx{}) {
      throw DegeneracyError("normal N_" + std::to_string(k) + " is undefined: g_" + std::to_string(k) +
                            "' vanishes");
    }
  }
  for (int k = 0; k <= n; ++k) C[k] = cosine_cascade<Jet>(uv, k);
  Jet hp = derivative(s.h()(vars[n - 1]), n - 1);
  std::vector<std::vector<Jet>> normals;
  for (int k = 1; k < n; ++k) {
    const Jet zero = Jet::constant(0.0, n, order - 1);
    std::vector<Jet> N(m, zero);
    Jet w = fp[k] / (f[k] * gp[k]);
    N[2 * k - 2] = Cx(2.0) * (x[2 * k - 2] + w * x[2 * k - 1]);
    N[2 * k - 1] = Cx(2.0) * (x[2 * k - 1] - w * x[2 * k - 2]);
    Jet pref = Cx(2.0) * square(C[k] * f[k]);
    for (int j = k + 1; j < n; ++j) {
      Jet t = pref * tan(vars[j - 1]) / (square(C[j] * f[j]) * gp[j]);
      N[2 * j - 2] = N[2 * j - 2] - t * x[2 * j - 1];
      N[2 * j - 1] = N[2 * j - 1] + t * x[2 * j - 2];
    }
    N[2 * n - 2] = N[2 * n - 2] + pref * tan(vars[n - 1]) / hp;
    normals.push_back(std::move(N));
  }
  return normals;
}

inline NormalFrame normal_frame_ansatz(const AnsatzSurface& s, std::span<const Cx> u, int order) {
  return make_frame(ansatz_raw_normals(s, u, order));
}

/// Normal frame of X_z. At z = 0 the ansatz normals degenerate (g_k' = 0 for
/// k >= 2) and the frame of the embedded quadric is used instead:
/// embed(N0^) together with e_{2k-1}, k = 2..n-1.
inline NormalFrame normal_frame_peterson(const QuadricSpec& q, const DeformParams& p, std::span<const Cx> u,
                                         int order, const QuadOptions& opts = {}) {
  bool all_zero = std::all_of(p.z.begin(), p.z.end(), [](Cx z) { return z == Cx{}; });
  if (!all_zero) return normal_frame_ansatz(peterson_surface(q, p, opts), u, order);
  const int n = q.n;
  auto x = eval_quadric(q, u, order);
  auto n0 = quadric_raw_normal(q, x);
  for (auto& c : n0) c = c.truncated(order - 1);
  std::vector<std::vector<Jet>> raw;
  raw.push_back(embed<Jet>(std::span<const Jet>(n0)));
  for (int k = 2; k < n; ++k) {
    std::vector<Jet> e(2 * n - 1, Jet::constant(0.0, n, order - 1));
    e[2 * k - 1] = Jet::constant(1.0, n, order - 1);
    raw.push_back(std::move(e));
  }
  return make_frame(std::move(raw));
}

/// h(a, j, k) = <d_j d_k x, N_a> with the orthonormal frame.
inline JetArray second_form(const ImmersionJet& x, const NormalFrame& frame) {
  if (x.order() < 2) throw std::invalid_argument("second_form: immersion order must be >= 2");
  const int n = x.n();
  const int p = frame.p();
  auto dx = tangent_vectors(x);
  JetArray h({p, n, n});
  for (int j = 0; j < n; ++j) {
    for (int k = j; k < n; ++k) {
      std::vector<Jet> ddx;
      for (const auto& c : dx[j]) ddx.push_back(derivative(c, k));
      for (int a = 0; a < p; ++a) {
        h(a, j, k) = bilinear(ddx, frame.unit[a]);
        h(a, k, j) = h(a, j, k);
      }
    }
  }
  return h;
}

/// <d_j d_k x, v> for arbitrary (unnormalized) fields v.
inline JetArray second_form_raw(const ImmersionJet& x, const std::vector<std::vector<Jet>>& fields) {
  NormalFrame f;
  f.raw = fields;
  f.unit = fields;
  return second_form(x, f);
}

/// Joined data of a quadric second form h0(0, j, j) and a deformation second
/// form h(a, j, j):
///   h_j = (i h_j^0, h_j^1, ..., h_j^p), A_j = h_j^T h_j, a_j = sqrt(A_j),
///   b_j = h_j^0 / a_j, gamma(j, k) = Gamma^k_jj h_k^0 / h_j^0.
struct JoinedData {
  int n = 0;
  std::vector<Jet> h0;
  std::vector<std::vector<Jet>> vec;  // vec[j] = h_j
  std::vector<Jet> A;
  std::vector<Jet> a;
  std::vector<Jet> b;
  JetArray gamma;  // empty when the metric carries no Christoffel symbols
};

inline JoinedData joined_data(const JetArray& h0, const JetArray& h, const MetricData& m) {
  JoinedData d;
  const int n = h0.dim(1);
  const int p = h.dim(0);
  d.n = n;
  const Cx i(0.0, 1.0);
  for (int j = 0; j < n; ++j) {
    d.h0.push_back(h0(0, j, j));
    std::vector<Jet> v;
    v.push_back(h0(0, j, j) * i);
    for (int a = 0; a < p; ++a) v.push_back(h(a, j, j));
    double herm = 0.0;
    for (const auto& c : v) herm += std::norm(c.value());
    Jet A = bilinear(v, v);
    if (!(herm > 0.0) || std::abs(A.value()) < kMetricDegeneracyTol * herm) {
      throw DegeneracyError("joined vector h_" + std::to_string(j + 1) + " is isotropic");
    }
    d.vec.push_back(std::move(v));
    d.A.push_back(A);
    d.a.push_back(sqrt_any(A));
    d.b.push_back(d.h0.back() / d.a.back());
  }
  if (m.has_christoffel()) {
    d.gamma = JetArray({n, n});
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        d.gamma(j, k) = j == k ? zero_like(m.gamma(0, 0, 0)) : m.gamma(k, j, j) * d.h0[k] / d.h0[j];
      }
    }
  }
  return d;
}

}  // namespace qdlab
