#pragma once

// Verification suites: residual checks of every identity satisfied by the
// deformation family, evaluated on seeded random samples and collected into
// structured reports.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "qdlab/core.hpp"
#include "qdlab/geometry.hpp"
#include "qdlab/immersions.hpp"
#include "qdlab/jet.hpp"
#include "qdlab/quadrature.hpp"

namespace qdlab {

enum class Suite {
  isometry,
  conjugate_system,
  nondegeneracy,
  gauss_codazzi_ricci,
  theorem2,
  curvature_identities,
  closed_forms,
  degenerate_remark,
  negative,
};

inline constexpr std::array<Suite, 9> kAllSuites = {
    Suite::isometry,      Suite::conjugate_system,     Suite::nondegeneracy,
    Suite::gauss_codazzi_ricci, Suite::theorem2,      Suite::curvature_identities,
    Suite::closed_forms,  Suite::degenerate_remark,    Suite::negative};

inline std::string_view suite_name(Suite s) {
  switch (s) {
    case Suite::isometry: return "isometry";
    case Suite::conjugate_system: return "conjugate_system";
    case Suite::nondegeneracy: return "nondegeneracy";
    case Suite::gauss_codazzi_ricci: return "gauss_codazzi_ricci";
    case Suite::theorem2: return "theorem2";
    case Suite::curvature_identities: return "curvature_identities";
    case Suite::closed_forms: return "closed_forms";
    case Suite::degenerate_remark: return "degenerate_remark";
    case Suite::negative: return "negative";
  }
  return "";
}

inline std::optional<Suite> parse_suite(std::string_view name) {
  for (Suite s : kAllSuites) {
    if (suite_name(s) == name) return s;
  }
  return std::nullopt;
}

/// Every suite except the negative controls.
inline std::vector<Suite> default_suites() {
  std::vector<Suite> out;
  for (Suite s : kAllSuites) {
    if (s != Suite::negative) out.push_back(s);
  }
  return out;
}

struct SuiteInfo {
  Suite suite;
  std::string_view claim;
  std::vector<std::string_view> checks;
};

inline const std::vector<SuiteInfo>& suite_catalog() {
  static const std::vector<SuiteInfo> catalog = {
      {Suite::isometry, "the deformed immersion has the same first fundamental form as the quadric", {"metric"}},
      {Suite::conjugate_system,
       "the coordinates are conjugate for the quadric and for the deformation; d_j d_k X = -tan(u^j) d_k X for k < j",
       {"offdiag_quadric", "offdiag_deformed", "recurrence"}},
      {Suite::nondegeneracy,
       "the normal-field determinant is non-zero almost everywhere; joined second forms are orthogonal and "
       "non-degenerate",
       {"determinant", "orthogonality", "sum_b_squared", "joined_rank"}},
      {Suite::gauss_codazzi_ricci,
       "Gauss, Codazzi-Mainardi and Ricci equations in conjugate coordinates; remaining curvature components vanish",
       {"gauss_quadric", "codazzi_quadric", "gauss", "codazzi", "ricci", "riemann_other"}},
      {Suite::theorem2,
       "Christoffel symbols with distinct indices vanish and the joined quantities solve the reduced system and its "
       "involutivity conditions",
       {"christoffel_distinct", "log_a", "sum_b_squared", "hoj", "ajj", "sym", "comint_diag", "comint_mixed"}},
      {Suite::curvature_identities,
       "differential consequences for curvature, Christoffel symbols and gamma",
       {"riem1_bianchi", "riem1_quad", "jkla", "jjl_first", "jjl_second", "jjl_third", "com_first", "com_second",
        "gaj"}},
      {Suite::closed_forms,
       "z = 0 reproduces the embedded quadric; z = 1 matches the closed radius/angle formulae up to sign",
       {"z0_coordinates", "z1_radius", "z1_angle_derivative", "z1_last_coordinate"}},
      {Suite::degenerate_remark,
       "the difference of the quadric and z = 1 second forms only contains (du^n)^2",
       {"diagonal", "mixed"}},
      {Suite::negative,
       "deliberately broken inputs that must fail",
       {"perturbed_metric_hoj", "swapped_isometry", "unrebased_corner", "mixed_term_recurrence"}},
  };
  return catalog;
}

/// Default tolerance of a check.
inline double default_tolerance(std::string_view suite, std::string_view check) {
  if (suite == "isometry") return 1e-8;
  if (suite == "conjugate_system") return 1e-9;
  if (suite == "nondegeneracy") {
    if (check == "determinant") return 1.0;
    if (check == "joined_rank") return 0.0;
    return 1e-8;
  }
  if (suite == "gauss_codazzi_ricci") return 1e-7;
  if (suite == "theorem2") return check == "sum_b_squared" ? 1e-8 : 1e-7;
  if (suite == "curvature_identities") return 1e-6;
  if (suite == "closed_forms") {
    if (check == "z1_radius") return 1e-9;
    if (check == "z1_angle_derivative") return 1e-8;
    return 1e-10;
  }
  if (suite == "degenerate_remark") return 1e-8;
  if (suite == "negative") {
    if (check == "perturbed_metric_hoj") return 1e-7;
    if (check == "swapped_isometry") return 1e-8;
    return 1e-9;
  }
  return 1e-8;
}

/// Tolerance overrides, looked up as "suite.check", then "suite", then global.
class Tolerances {
 public:
  void set_global(double tol) { global_ = tol; }
  void set(const std::string& key, double tol) { overrides_[key] = tol; }
  const std::map<std::string, double>& overrides() const { return overrides_; }
  std::optional<double> global() const { return global_; }

  double get(std::string_view suite, std::string_view check) const {
    std::string full = std::string(suite) + "." + std::string(check);
    if (auto it = overrides_.find(full); it != overrides_.end()) return it->second;
    if (auto it = overrides_.find(std::string(suite)); it != overrides_.end()) return it->second;
    if (global_) return *global_;
    return default_tolerance(suite, check);
  }

 private:
  std::map<std::string, double> overrides_;
  std::optional<double> global_;
};

struct SamplingDomain {
  double u_lo = 0.15;
  double u_hi = 1.40;
  double u_imag = 0.0;  // amplitude of a symmetric imaginary part
};

struct SuiteOptions {
  int samples = 50;
  std::uint64_t seed = 42;
  SamplingDomain domain;
  bool rebase = true;
  int threads = 1;  // 0: hardware concurrency
  Tolerances tol;
  QuadOptions quad;
};

struct CheckRecord {
  std::string suite;
  std::string check_id;
  int draw = -1;  // index of the z draw, -1 for fixed parameters
  int sample = 0;
  std::vector<Cx> u;
  std::vector<Cx> z;
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::optional<double> value;  // reported magnitude, not constrained
  std::vector<std::pair<std::string, std::string>> metadata;
  std::string error;  // set when the evaluation raised
};

struct CheckReport {
  QuadricSpec q;
  std::vector<std::vector<Cx>> z_draws;
  SuiteOptions options;
  std::vector<std::string> suites;
  std::vector<CheckRecord> records;

  std::size_t passed() const {
    return static_cast<std::size_t>(std::count_if(records.begin(), records.end(), [](const auto& r) { return r.pass; }));
  }
  std::size_t failed() const { return records.size() - passed(); }
  bool all_pass() const { return failed() == 0; }

  void append(const CheckReport& other) {
    records.insert(records.end(), other.records.begin(), other.records.end());
  }
};

// ---------------------------------------------------------------------------
// Counter-keyed sampling

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Generator whose stream depends only on (seed, stream name, index).
class SampleRng {
 public:
  SampleRng(std::uint64_t seed, std::string_view stream, std::uint64_t index)
      : eng_(splitmix64(splitmix64(splitmix64(seed) ^ fnv1a(stream)) ^ index)) {}

  /// Uniform on [0, 1) from the top 53 bits.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::mt19937_64 eng_;
};

inline std::vector<Cx> sample_u(int n, const SamplingDomain& d, SampleRng& rng) {
  std::vector<Cx> u;
  for (int j = 0; j < n; ++j) {
    const double re = rng.uniform(d.u_lo, d.u_hi);
    const double im = d.u_imag > 0 ? rng.uniform(-d.u_imag, d.u_imag) : 0.0;
    u.emplace_back(re, im);
  }
  return u;
}

/// a_j = (j+1)(1 + eps_j) with |eps_j| <= 0.15 and a random phase.
inline QuadricSpec random_complex_quadric(int n, std::uint64_t seed) {
  SampleRng rng(seed, "quadric", static_cast<std::uint64_t>(n));
  QuadricSpec q{n, {}};
  for (int j = 0; j <= n; ++j) {
    const double rho = rng.uniform(0.0, 0.15);
    const double phi = rng.uniform(-kPi, kPi);
    q.a.push_back((j + 1.0) * (1.0 + std::polar(rho, phi)));
  }
  return q;
}

namespace detail {

inline bool radicand_ok(Cx w) {
  const double r = std::abs(w);
  if (!(r > 1e-3)) return false;
  return std::abs(std::arg(w)) < kPi - 0.3;
}

}  // namespace detail

/// True when every profile radicand stays off a neighbourhood of the negative
/// real axis along the sampled parameter range.
inline bool z_admissible(const QuadricSpec& q, const DeformParams& p, const SamplingDomain& d) {
  for (Cx z : p.z) {
    if (std::abs(z) < 1e-6 || std::abs(z - 1.0) < 1e-6) return false;
    for (int k = 1; k <= q.n; ++k) {
      if (std::abs(z - q.a[k] / q.a[0]) < 1e-6) return false;
    }
  }
  auto r = peterson_radicands(q, p);
  const int steps = 64;
  std::vector<Cx> ts;
  for (int i = 0; i <= steps; ++i) {
    const double t = d.u_hi * i / steps;
    ts.emplace_back(t, 0.0);
    if (d.u_imag > 0) {
      ts.emplace_back(t, d.u_imag);
      ts.emplace_back(t, -d.u_imag);
    }
  }
  for (Cx t : ts) {
    for (std::size_t k = 0; k < r.f_squared.size(); ++k) {
      if (!detail::radicand_ok(r.f_squared[k](t)) || !detail::radicand_ok(r.g_numerator[k](t))) return false;
    }
    if (!detail::radicand_ok(r.h_squared(t))) return false;
  }
  return true;
}

/// Deformation parameters 1 > z_1 > ... > z_{n-1} > 0 drawn from decreasing bins
/// of (0.05, 0.95); complex quadrics get small imaginary parts. Redraws until
/// admissible; throws DomainError after 200 attempts.
inline DeformParams draw_z(const QuadricSpec& q, std::uint64_t seed, int draw, const SamplingDomain& d,
                           bool rebase = true) {
  const int n = q.n;
  const bool real_a = std::all_of(q.a.begin(), q.a.end(), [](Cx a) { return a.imag() == 0.0; });
  for (int attempt = 0; attempt < 200; ++attempt) {
    SampleRng rng(seed, "z", static_cast<std::uint64_t>(draw) * 1000 + static_cast<std::uint64_t>(attempt));
    DeformParams p;
    p.rebase = rebase;
    const double lo = 0.05, hi = 0.95;
    const double width = (hi - lo) / (n - 1);
    for (int k = 1; k < n; ++k) {
      const double top = hi - (k - 1) * width;
      const double re = rng.uniform(top - 0.8 * width, top - 0.2 * width);
      const double im = real_a ? 0.0 : rng.uniform(-0.02, 0.02);
      p.z.emplace_back(re, im);
    }
    if (z_admissible(q, p, d)) return p;
  }
  throw DomainError("no admissible deformation parameters found for draw " + std::to_string(draw));
}

// ---------------------------------------------------------------------------
// Residual bookkeeping

namespace detail {

inline std::string where(std::initializer_list<std::pair<const char*, int>> idx) {
  std::string s;
  for (const auto& [name, v] : idx) {
    if (!s.empty()) s += ",";
    s += name;
    s += "=";
    s += std::to_string(v + 1);
  }
  return s;
}

/// Worst scaled residual |lhs - rhs| / max(1, largest term) over index patterns.
class Worst {
 public:
  void add(Cx diff, std::initializer_list<Cx> terms, const std::string& at) {
    double scale = 1.0;
    for (Cx t : terms) scale = std::max(scale, std::abs(t));
    add_scaled(std::abs(diff) / scale, at);
  }
  void add_scaled(double r, const std::string& at) {
    if (!seen_ || !(r <= worst_)) {
      worst_ = r;
      at_ = at;
    }
    seen_ = true;
  }
  bool seen() const { return seen_; }
  double value() const { return worst_; }
  const std::string& at() const { return at_; }

 private:
  double worst_ = 0.0;
  std::string at_;
  bool seen_ = false;
};

struct SampleContext {
  const QuadricSpec* q;
  const DeformParams* p;
  const AnsatzSurface* surface;
  const SuiteOptions* opt;
  std::string suite;
  int draw;
  int sample;
  std::vector<Cx> u;
  std::vector<CheckRecord>* out;

  void emit(const std::string& check, const Worst& w, std::optional<double> value = std::nullopt,
            std::vector<std::pair<std::string, std::string>> meta = {}) const {
    if (!w.seen()) return;
    emit_raw(check, w.value(), value, w.at(), std::move(meta));
  }

  void emit_raw(const std::string& check, double residual, std::optional<double> value, const std::string& at,
                std::vector<std::pair<std::string, std::string>> meta = {}) const {
    CheckRecord r;
    r.suite = suite;
    r.check_id = check;
    r.draw = draw;
    r.sample = sample;
    r.u = u;
    if (p) r.z = p->z;
    r.residual = residual;
    r.tolerance = opt->tol.get(suite, check);
    r.pass = residual <= r.tolerance;
    r.value = value;
    if (!at.empty()) r.metadata.emplace_back("worst_at", at);
    for (auto& m : meta) r.metadata.push_back(std::move(m));
    out->push_back(std::move(r));
  }

  void emit_error(const std::string& check, const std::string& message,
                  std::vector<std::pair<std::string, std::string>> meta = {}) const {
    CheckRecord r;
    r.suite = suite;
    r.check_id = check;
    r.draw = draw;
    r.sample = sample;
    r.u = u;
    if (p) r.z = p->z;
    r.residual = std::numeric_limits<double>::infinity();
    r.tolerance = opt->tol.get(suite, check);
    r.pass = false;
    r.error = message;
    for (auto& m : meta) r.metadata.push_back(std::move(m));
    out->push_back(std::move(r));
  }
};

inline bool all_zero(const DeformParams& p) {
  return std::all_of(p.z.begin(), p.z.end(), [](Cx z) { return z == Cx{}; });
}

inline NormalFrame deformed_frame(const QuadricSpec& q, const DeformParams& p, const AnsatzSurface& s,
                                  std::span<const Cx> u, int order) {
  if (all_zero(p)) return normal_frame_peterson(q, p, u, order);
  return normal_frame_ansatz(s, u, order);
}

/// Quadric and deformation evaluated together at one point.
struct PairGeometry {
  ImmersionJet x0, xz;
  MetricData m0, mz;
  NormalFrame f0, fz;
  JetArray h0, hz;
};

inline PairGeometry pair_geometry(const QuadricSpec& q, const DeformParams& p, const AnsatzSurface& s,
                                  std::span<const Cx> u, int order) {
  PairGeometry g;
  g.x0 = eval_quadric(q, u, order);
  g.xz = s.eval(u, order);
  g.m0 = metric_data(g.x0);
  g.mz = metric_data(g.xz);
  g.f0 = normal_frame_quadric(q, g.x0);
  g.fz = deformed_frame(q, p, s, u, order);
  g.h0 = second_form(g.x0, g.f0);
  g.hz = second_form(g.xz, g.fz);
  return g;
}

inline Cx determinant(std::vector<std::vector<Cx>> m) {
  const int n = static_cast<int>(m.size());
  Cx det = 1.0;
  for (int c = 0; c < n; ++c) {
    int piv = c;
    for (int r = c + 1; r < n; ++r) {
      if (std::abs(m[r][c]) > std::abs(m[piv][c])) piv = r;
    }
    if (m[piv][c] == Cx{}) return 0.0;
    if (piv != c) {
      std::swap(m[piv], m[c]);
      det = -det;
    }
    det *= m[c][c];
    for (int r = c + 1; r < n; ++r) {
      Cx f = m[r][c] / m[c][c];
      for (int k = c; k < n; ++k) m[r][k] -= f * m[c][k];
    }
  }
  return det;
}

inline int numerical_rank(std::vector<std::vector<Cx>> m, double rel_tol = 1e-10) {
  const int rows = static_cast<int>(m.size());
  const int cols = rows ? static_cast<int>(m[0].size()) : 0;
  double scale = 0.0;
  for (const auto& r : m) {
    for (Cx v : r) scale = std::max(scale, std::abs(v));
  }
  int rank = 0;
  for (int c = 0; c < cols && rank < rows; ++c) {
    int piv = rank;
    for (int r = rank + 1; r < rows; ++r) {
      if (std::abs(m[r][c]) > std::abs(m[piv][c])) piv = r;
    }
    if (std::abs(m[piv][c]) <= rel_tol * scale) continue;
    std::swap(m[piv], m[rank]);
    for (int r = rank + 1; r < rows; ++r) {
      Cx f = m[r][c] / m[rank][c];
      for (int k = c; k < cols; ++k) m[r][k] -= f * m[rank][k];
    }
    ++rank;
  }
  return rank;
}

}  // namespace detail

/// The n x n matrix whose determinant decides linear independence of the
/// normal fields: first row C_1..C_{n-1}, delta^-1 C_n with
/// delta = a_n / (a_0 sin^2 u^n + a_n cos^2 u^n); row k has a_k/(a_k - a_0) in
/// column k and sin^2 u^k in the last column.
inline std::vector<std::vector<Cx>> nondegeneracy_matrix(const QuadricSpec& q, std::span<const Cx> u) {
  const int n = q.n;
  std::vector<std::vector<Cx>> m(n, std::vector<Cx>(n, Cx{}));
  const Cx sn = std::sin(u[n - 1]), cn = std::cos(u[n - 1]);
  const Cx delta = q.a[n] / (q.a[0] * sn * sn + q.a[n] * cn * cn);
  for (int k = 1; k < n; ++k) m[0][k - 1] = cosine_cascade<Cx>(u, k);
  m[0][n - 1] = cosine_cascade<Cx>(u, n) / delta;
  for (int k = 1; k < n; ++k) {
    m[k][k - 1] = q.a[k] / (q.a[k] - q.a[0]);
    const Cx s = std::sin(u[k - 1]);
    m[k][n - 1] = s * s;
  }
  return m;
}

inline Cx nondegeneracy_determinant(const QuadricSpec& q, std::span<const Cx> u) {
  return detail::determinant(nondegeneracy_matrix(q, u));
}

// ---------------------------------------------------------------------------
// Per-sample suite bodies

namespace detail {

inline void sample_isometry(const SampleContext& c) {
  auto x0 = eval_quadric(*c.q, c.u, 1);
  auto xz = c.surface->eval(c.u, 1);
  auto g0 = first_form(x0);
  auto gz = first_form(xz);
  Worst w;
  const int n = c.q->n;
  for (int j = 0; j < n; ++j) {
    for (int k = j; k < n; ++k) w.add(gz.val(j, k) - g0.val(j, k), {gz.val(j, k), g0.val(j, k)}, where({{"j", j}, {"k", k}}));
  }
  c.emit("metric", w);
}

inline void recurrence(const ImmersionJet& x, Worst& w, const char* label) {
  const int n = x.n();
  auto dx = tangent_vectors(x);
  for (int j = 0; j < n; ++j) {
    const Cx t = std::tan(x.u[j]);
    for (int k = 0; k < j; ++k) {
      for (std::size_t comp = 0; comp < dx[k].size(); ++comp) {
        const Cx dd = derivative(dx[k][comp], j).value();
        const Cx rhs = -t * dx[k][comp].value();
        w.add(dd - rhs, {dd, rhs}, std::string(label) + ":" + where({{"j", j}, {"k", k}}));
      }
    }
  }
}

inline void offdiag(const JetArray& h, Worst& w) {
  const int p = h.dim(0), n = h.dim(1);
  const double scale = h.max_abs();
  for (int a = 0; a < p; ++a) {
    for (int j = 0; j < n; ++j) {
      for (int k = j + 1; k < n; ++k) w.add(h.val(a, j, k), {scale}, where({{"alpha", a}, {"j", j}, {"k", k}}));
    }
  }
}

inline void sample_conjugate(const SampleContext& c) {
  auto x0 = eval_quadric(*c.q, c.u, 2);
  auto xz = c.surface->eval(c.u, 2);
  auto h0 = second_form(x0, normal_frame_quadric(*c.q, x0));
  auto hz = second_form(xz, deformed_frame(*c.q, *c.p, *c.surface, c.u, 2));
  Worst wq, wz, wr;
  offdiag(h0, wq);
  offdiag(hz, wz);
  recurrence(x0, wr, "quadric");
  recurrence(xz, wr, "deformed");
  c.emit("offdiag_quadric", wq);
  c.emit("offdiag_deformed", wz);
  c.emit("recurrence", wr);
}

inline void sample_nondegeneracy(const SampleContext& c) {
  const int n = c.q->n;
  {
    auto m = nondegeneracy_matrix(*c.q, c.u);
    double scale = 1.0;
    for (const auto& row : m) {
      double r = 0.0;
      for (Cx v : row) r = std::max(r, std::abs(v));
      scale *= std::max(r, 1e-300);
    }
    const double det = std::abs(determinant(m));
    const double margin = det > 0 ? std::min(1e-8 * scale / det, 1e300) : 1e300;
    c.emit_raw("determinant", margin, det, "");
  }
  auto g = pair_geometry(*c.q, *c.p, *c.surface, c.u, 2);
  auto jd = joined_data(g.h0, g.hz, g.mz);
  Worst wo, wb;
  for (int j = 0; j < n; ++j) {
    for (int k = j + 1; k < n; ++k) {
      Cx dot{};
      double scale = 0.0;
      for (std::size_t a = 0; a < jd.vec[j].size(); ++a) {
        Cx t = jd.vec[j][a].value() * jd.vec[k][a].value();
        dot += t;
        scale = std::max(scale, std::abs(t));
      }
      wo.add(dot, {scale}, where({{"j", j}, {"k", k}}));
    }
  }
  Cx sum = 1.0;
  double bmax = 0.0;
  for (const auto& b : jd.b) {
    sum += b.value() * b.value();
    bmax = std::max(bmax, std::abs(b.value() * b.value()));
  }
  wb.add(sum, {bmax}, "");
  c.emit("orthogonality", wo);
  c.emit("sum_b_squared", wb);
  std::vector<std::vector<Cx>> H(n, std::vector<Cx>(n));
  for (int j = 0; j < n; ++j) {
    for (int a = 0; a < n; ++a) H[a][j] = jd.vec[j][a].value();
  }
  const int rank = numerical_rank(H);
  c.emit_raw("joined_rank", static_cast<double>(n - rank), rank, "");
}

inline void gauss_codazzi(const MetricData& m, const JetArray& h, const NormalFrame& f, Worst& wg, Worst& wc,
                          Worst* wr) {
  const int n = m.n;
  const int p = h.dim(0);
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < n; ++k) {
      if (j == k) continue;
      Cx hh{};
      double scale = 0.0;
      for (int a = 0; a < p; ++a) {
        Cx t = h.val(a, j, j) * h.val(a, k, k);
        hh += t;
        scale = std::max(scale, std::abs(t));
      }
      const Cx R = m.R.val(j, k, j, k);
      wg.add(R - hh, {R, scale}, where({{"j", j}, {"k", k}}));
      for (int a = 0; a < p; ++a) {
        const Cx t0 = derivative(h(a, j, j), k).value();
        const Cx t1 = -m.gamma.val(j, j, k) * h.val(a, j, j);
        const Cx t2 = m.gamma.val(k, j, j) * h.val(a, k, k);
        Cx t3{};
        for (int b = 0; b < p; ++b) t3 += h.val(b, j, j) * f.conn.val(a, b, k);
        wc.add(t0 + t1 + t2 + t3, {t0, t1, t2, t3}, where({{"alpha", a}, {"j", j}, {"k", k}}));
      }
      if (wr && j < k) {
        for (int a = 0; a < p; ++a) {
          for (int b = 0; b < p; ++b) {
            const Cx lhs = f.curv.val(b, a, j, k);
            const Cx rhs = (h.val(a, j, j) * h.val(b, k, k) - h.val(b, j, j) * h.val(a, k, k)) * m.ginv.val(j, k);
            wr->add(lhs - rhs, {lhs, rhs}, where({{"alpha", a}, {"beta", b}, {"j", j}, {"k", k}}));
          }
        }
      }
    }
  }
}

inline void riemann_other(const MetricData& m, Worst& w, const char* label) {
  const int n = m.n;
  const double scale = m.R.max_abs();
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      for (int c = 0; c < n; ++c) {
        for (int d = 0; d < n; ++d) {
          const bool gauss_pattern = a != b && ((c == a && d == b) || (c == b && d == a));
          if (gauss_pattern) continue;
          w.add(m.R.val(a, b, c, d), {scale},
                std::string(label) + ":" + where({{"j", a}, {"k", b}, {"l", c}, {"m", d}}));
        }
      }
    }
  }
}

inline void sample_gcr(const SampleContext& c) {
  auto g = pair_geometry(*c.q, *c.p, *c.surface, c.u, 3);
  Worst gq, cq, gz, cz, rz, other;
  gauss_codazzi(g.m0, g.h0, g.f0, gq, cq, nullptr);
  gauss_codazzi(g.mz, g.hz, g.fz, gz, cz, &rz);
  riemann_other(g.mz, other, "deformed");
  riemann_other(g.m0, other, "quadric");
  c.emit("gauss_quadric", gq);
  c.emit("codazzi_quadric", cq);
  c.emit("gauss", gz);
  c.emit("codazzi", cz);
  c.emit("ricci", rz);
  c.emit("riemann_other", other);
}

/// Residuals of the reduced joined system on metric m with quadric second form h0
/// and deformation second form hz.
inline void theorem2_residuals(const MetricData& m, const JetArray& h0, const JetArray& hz, const SampleContext& c,
                               bool only_hoj = false, const std::string& hoj_id = "hoj") {
  const int n = m.n;
  auto jd = joined_data(h0, hz, m);
  Worst w_gamma, w_loga, w_sum, w_hoj, w_ajj, w_sym, w_cd, w_cm;
  const double gscale = m.gamma.max_abs();
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < n; ++k) {
      if (j == k) continue;
      const Jet& bj = jd.b[j];
      const Cx hoj_l = (derivative(bj, k) / bj).value();
      w_hoj.add(hoj_l + jd.gamma.val(j, k), {hoj_l, jd.gamma.val(j, k)}, where({{"j", j}, {"k", k}}));
      if (only_hoj) continue;
      for (int l = 0; l < n; ++l) {
        if (l != j && l != k) w_gamma.add(m.gamma.val(l, j, k), {gscale}, where({{"j", j}, {"k", k}, {"l", l}}));
      }
      const Cx loga = 0.5 * (derivative(jd.A[j], k) / jd.A[j]).value();
      w_loga.add(loga - m.gamma.val(j, j, k), {loga, m.gamma.val(j, j, k)}, where({{"j", j}, {"k", k}}));
      // (b_k/b_j) gamma_kj and its mirror
      const Jet t1 = derivative(jd.gamma(k, j) * jd.b[k] / jd.b[j], k);
      const Jet t2 = derivative(jd.gamma(j, k) * jd.b[j] / jd.b[k], j);
      Cx t3{};
      double s3 = 0.0;
      for (int l = 0; l < n; ++l) {
        if (l == j || l == k) continue;
        const Cx bl = jd.b[l].value();
        const Cx term = (jd.gamma.val(l, j) * jd.gamma.val(l, k) - m.ginv.val(j, k) * jd.h0[j].value() * jd.h0[k].value()) *
                        bl * bl / (jd.b[j].value() * jd.b[k].value());
        t3 += term;
        s3 = std::max(s3, std::abs(term));
      }
      w_sym.add(t1.value() + t2.value() - t3, {t1.value(), t2.value(), s3}, where({{"j", j}, {"k", k}}));
      const Cx dj = derivative(jd.gamma(j, k), j).value();
      const Cx prod = 2.0 * jd.gamma.val(j, k) * jd.gamma.val(k, j);
      w_cd.add(dj + prod, {dj, prod}, where({{"j", j}, {"k", k}}));
      for (int l = 0; l < n; ++l) {
        if (l == j || l == k) continue;
        const Cx d = derivative(jd.gamma(l, j), k).value();
        const Cx a1 = jd.gamma.val(l, j) * jd.gamma.val(l, k);
        const Cx a2 = jd.gamma.val(l, k) * jd.gamma.val(k, j);
        const Cx a3 = jd.gamma.val(l, j) * jd.gamma.val(j, k);
        w_cm.add(d - 2.0 * (a1 - a2 - a3), {d, 2.0 * a1, 2.0 * a2, 2.0 * a3}, where({{"j", j}, {"k", k}, {"l", l}}));
      }
    }
  }
  if (!only_hoj) {
    Cx sum = 1.0;
    double bmax = 0.0;
    for (const auto& b : jd.b) {
      sum += b.value() * b.value();
      bmax = std::max(bmax, std::abs(b.value() * b.value()));
    }
    w_sum.add(sum, {bmax}, "");
    for (int j = 0; j < n; ++j) {
      const Jet& bj = jd.b[j];
      const Cx lhs = (derivative(bj, j) / bj).value();
      Cx rhs{};
      double s = std::abs(lhs);
      for (int l = 0; l < n; ++l) {
        if (l == j) continue;
        const Cx t = jd.b[l].value() * jd.b[l].value() * jd.gamma.val(l, j) / (bj.value() * bj.value());
        rhs += t;
        s = std::max(s, std::abs(t));
      }
      w_ajj.add(lhs - rhs, {s}, where({{"j", j}}));
    }
    c.emit("christoffel_distinct", w_gamma);
    c.emit("log_a", w_loga);
    c.emit("sum_b_squared", w_sum);
  }
  c.emit(hoj_id, w_hoj);
  if (!only_hoj) {
    c.emit("ajj", w_ajj);
    c.emit("sym", w_sym);
    c.emit("comint_diag", w_cd);
    c.emit("comint_mixed", w_cm);
  }
}

inline void sample_theorem2(const SampleContext& c) {
  auto g = pair_geometry(*c.q, *c.p, *c.surface, c.u, 3);
  theorem2_residuals(g.mz, g.h0, g.hz, c);
}

inline void sample_curvature(const SampleContext& c) {
  auto g = pair_geometry(*c.q, *c.p, *c.surface, c.u, 4);
  const MetricData& m = g.mz;
  const int n = m.n;
  auto jd = joined_data(g.h0, g.hz, m);
  auto G = [&](int l, int j, int k) { return m.gamma.val(l, j, k); };
  auto dG = [&](int d, int l, int j, int k) { return m.dgamma.val(d, l, j, k); };
  auto R = [&](int j, int l) { return m.R.val(j, l, j, l); };
  auto gi = [&](int j, int k) { return m.ginv.val(j, k); };
  auto h0 = [&](int j) { return jd.h0[j].value(); };
  auto ga = [&](int j, int k) { return jd.gamma.val(j, k); };
  Worst w_b, w_q, w_jkla, w_j1, w_j2, w_j3, w_c1, w_c2, w_gaj;
  for (int j = 0; j < n; ++j) {
    for (int l = 0; l < n; ++l) {
      if (l == j) continue;
      {
        const Cx lhs = gi(j, l) * R(j, l);
        const Cx t1 = dG(l, j, j, j), t2 = -dG(j, j, j, l), t3 = G(l, j, j) * G(j, l, l), t4 = -G(l, l, j) * G(j, j, l);
        w_j2.add(lhs - (t1 + t2 + t3 + t4), {lhs, t1, t2, t3, t4}, where({{"j", j}, {"l", l}}));
      }
      {
        const Cx lhs = gi(l, l) * R(j, l);
        Cx sq{};
        double ss = 0.0;
        for (int qq = 0; qq < n; ++qq) {
          const Cx t = G(qq, j, j) * G(l, l, qq);
          sq += t;
          ss = std::max(ss, std::abs(t));
        }
        const Cx t1 = dG(l, l, j, j), t2 = -dG(j, l, l, j), t4 = -G(j, j, l) * G(l, j, j), t5 = -G(l, l, j) * G(l, l, j);
        w_j3.add(lhs - (t1 + t2 + sq + t4 + t5), {lhs, t1, t2, ss, t4, t5}, where({{"j", j}, {"l", l}}));
      }
      for (int k = 0; k < n; ++k) {
        if (k == j || k == l) continue;
        {
          const Cx lhs = derivative(m.R(j, k, j, k), l).value();
          const Cx t1 = (G(j, j, l) + G(k, k, l)) * R(j, k), t2 = -G(l, k, k) * R(j, l), t3 = -G(l, j, j) * R(k, l);
          w_b.add(lhs - (t1 + t2 + t3), {lhs, t1, t2, t3}, where({{"j", j}, {"k", k}, {"l", l}}));
        }
        {
          const Cx lhs = dG(l, k, k, j);
          const Cx t1 = G(k, k, l) * G(l, l, j), t2 = G(k, k, j) * G(j, j, l), t3 = -G(k, k, l) * G(k, k, j);
          w_jkla.add(lhs - (t1 + t2 + t3), {lhs, t1, t2, t3}, where({{"j", j}, {"k", k}, {"l", l}}));
        }
        {
          // p := k
          const Cx lhs = gi(k, l) * R(j, l);
          const Cx t1 = dG(l, k, j, j), t2 = G(k, j, j) * (G(k, k, l) - G(j, j, l)), t3 = G(l, j, j) * G(k, l, l);
          w_j1.add(lhs - (t1 + t2 + t3), {lhs, t1, t2, t3}, where({{"j", j}, {"l", l}, {"p", k}}));
        }
        {
          const Cx a = dG(l, j, j, k), b = dG(k, j, j, l);
          w_c1.add(a - b, {a, b}, where({{"j", j}, {"k", k}, {"l", l}}));
          const Cx t1 = dG(l, k, j, j), t2 = G(k, j, j) * (G(k, k, l) - G(j, j, l)), t3 = G(l, j, j) * G(k, l, l),
                   t4 = -gi(k, l) * h0(j) * h0(l);
          w_c2.add(t1 + t2 + t3 + t4, {t1, t2, t3, t4}, where({{"j", j}, {"k", k}, {"l", l}}));
        }
        {
          const Cx lhs = derivative(jd.gamma(j, k), l).value();
          const Cx t1 = ga(j, k) * ga(j, l), t2 = -ga(j, l) * ga(l, k), t3 = -ga(j, k) * ga(k, l),
                   t4 = gi(k, l) * h0(k) * h0(l);
          w_gaj.add(lhs - (t1 + t2 + t3 + t4), {lhs, t1, t2, t3, t4}, where({{"j", j}, {"k", k}, {"l", l}}));
        }
        for (int mm = 0; mm < n; ++mm) {
          if (mm == j || mm == k || mm == l) continue;
          const Cx a = G(mm, l, k) * R(j, mm), b = G(l, mm, k) * R(j, l);
          w_q.add(a - b, {a, b}, where({{"j", j}, {"k", k}, {"l", l}, {"m", mm}}));
        }
      }
    }
  }
  c.emit("riem1_bianchi", w_b);
  c.emit("riem1_quad", w_q);
  c.emit("jkla", w_jkla);
  c.emit("jjl_first", w_j1);
  c.emit("jjl_second", w_j2);
  c.emit("jjl_third", w_j3);
  c.emit("com_first", w_c1);
  c.emit("com_second", w_c2);
  c.emit("gaj", w_gaj);
}

inline void sample_closed_forms(const SampleContext& c) {
  const QuadricSpec& q = *c.q;
  const int n = q.n;
  {
    auto s0 = peterson_surface(q, DeformParams::uniform(n, 0.0), c.opt->quad);
    auto xz = s0.point(c.u);
    auto x0 = embed(quadric_point(q, c.u));
    Worst w;
    for (std::size_t i = 0; i < xz.size(); ++i) w.add(xz[i] - x0[i], {xz[i], x0[i]}, where({{"coord", static_cast<int>(i) - 1}}));
    c.emit("z0_coordinates", w);
  }
  DeformParams ones = DeformParams::uniform(n, 1.0);
  ones.rebase = c.opt->rebase;
  auto s1 = peterson_surface(q, ones, c.opt->quad);
  auto vars = coordinate_jets(c.u, 1);
  auto closed = peterson_closed_z1<Jet>(q, std::span<const Jet>(vars), c.opt->quad);
  Worst wr, wa;
  for (int k = 1; k < n; ++k) {
    const Cx radius = cosine_cascade<Cx>(c.u, k) * s1.f(k)(c.u[k - 1]);
    const Cx r2 = radius * radius, c2 = closed.radius[k - 1].value() * closed.radius[k - 1].value();
    wr.add(r2 - c2, {r2, c2}, where({{"k", k - 1}}));
    const Cx gp = s1.g(k).series(c.u[k - 1], 1).coeffs()[1];
    const Cx ap = derivative(closed.angle[k - 1], k - 1).value();
    wa.add(gp * gp - ap * ap, {gp * gp, ap * ap}, where({{"k", k - 1}}));
  }
  Worst wl;
  const Cx hz = s1.h()(c.u[n - 1]);
  wl.add(hz - closed.last.value(), {hz, closed.last.value()}, "");
  c.emit("z1_radius", wr);
  c.emit("z1_angle_derivative", wa);
  c.emit("z1_last_coordinate", wl);
}

/// D_jk = N0^T d_j d_k X_0 - sum_m (2 a_m)^-1 N_m^T d_j d_k X_1 with the raw normals.
inline JetArray remark_difference(const QuadricSpec& q, std::span<const Cx> u, bool rebase, const QuadOptions& quad) {
  const int n = q.n;
  DeformParams ones = DeformParams::uniform(n, 1.0);
  ones.rebase = rebase;
  auto s1 = peterson_surface(q, ones, quad);
  auto x0 = eval_quadric(q, u, 2);
  auto x1 = s1.eval(u, 2);
  auto d0 = second_form_raw(x0, {quadric_raw_normal(q, x0)});
  auto d1 = second_form_raw(x1, ansatz_raw_normals(s1, u, 2));
  JetArray D({n, n});
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < n; ++k) {
      Jet s = d0(0, j, k);
      for (int m = 1; m < n; ++m) s -= d1(m - 1, j, k) / (2.0 * q.a[m]);
      D(j, k) = s;
    }
  }
  return D;
}

inline void sample_remark(const SampleContext& c) {
  const int n = c.q->n;
  auto D = remark_difference(*c.q, c.u, c.opt->rebase, c.opt->quad);
  Worst wd, wm;
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < n; ++k) {
      if (j == k && j < n - 1) wd.add(D.val(j, k), {}, where({{"j", j}}));
      if (j < k) wm.add(D.val(j, k), {}, where({{"j", j}, {"k", k}}));
    }
  }
  const double dnn = std::abs(D.val(n - 1, n - 1));
  c.emit("diagonal", wd, dnn, {{"dnn_abs", std::to_string(dnn)}});
  c.emit("mixed", wm);
}

inline void sample_negative(const SampleContext& c) {
  const QuadricSpec& q = *c.q;
  const int n = q.n;
  const std::vector<std::pair<std::string, std::string>> expect = {{"expected", "fail"}};
  if (n >= 3) {
    try {
      auto g = pair_geometry(q, *c.p, *c.surface, c.u, 3);
      auto vars = coordinate_jets(c.u, 2);
      Jet factor = 1.0 + Cx(0.01) * vars[0] * vars[1];
      JetArray gp = g.mz.g;
      for (auto& e : gp.data()) e = e * factor;
      SampleContext cc = c;
      std::vector<CheckRecord> tmp;
      cc.out = &tmp;
      theorem2_residuals(metric_data(gp), g.h0, g.hz, cc, true, "perturbed_metric_hoj");
      for (auto& r : tmp) {
        r.metadata.insert(r.metadata.end(), expect.begin(), expect.end());
        c.out->push_back(std::move(r));
      }
    } catch (const std::exception& e) {
      c.emit_error("perturbed_metric_hoj", e.what(), expect);
    }
  }
  try {
    QuadricSpec swapped = q;
    std::swap(swapped.a[1], swapped.a[2]);
    auto s = peterson_surface(swapped, *c.p, c.opt->quad);
    auto g0 = first_form(eval_quadric(q, c.u, 1));
    auto gz = first_form(s.eval(c.u, 1));
    Worst w;
    for (int j = 0; j < n; ++j) {
      for (int k = j; k < n; ++k) w.add(gz.val(j, k) - g0.val(j, k), {gz.val(j, k), g0.val(j, k)}, where({{"j", j}, {"k", k}}));
    }
    c.emit("swapped_isometry", w, std::nullopt, expect);
  } catch (const std::exception& e) {
    c.emit_error("swapped_isometry", e.what(), expect);
  }
  try {
    DeformParams ones = DeformParams::uniform(n, 1.0);
    ones.rebase = false;
    auto s = peterson_surface(q, ones, c.opt->quad);
    auto x = s.eval(c.u, 1);
    c.emit_raw("unrebased_corner", 0.0, std::nullopt, "", expect);
  } catch (const std::exception& e) {
    c.emit_error("unrebased_corner", e.what(), expect);
  }
  try {
    auto x = eval_quadric(q, c.u, 2);
    auto vars = coordinate_jets(c.u, 2);
    x.coords[0] += Cx(0.05) * vars[0] * vars[1];
    Worst w;
    recurrence(x, w, "perturbed");
    c.emit("mixed_term_recurrence", w, std::nullopt, expect);
  } catch (const std::exception& e) {
    c.emit_error("mixed_term_recurrence", e.what(), expect);
  }
}

inline bool suite_uses_draws(Suite s) {
  return s != Suite::closed_forms && s != Suite::degenerate_remark;
}

inline int suite_min_n(Suite s) {
  return (s == Suite::theorem2 || s == Suite::curvature_identities) ? 3 : 2;
}

using SampleFn = void (*)(const SampleContext&);

inline SampleFn sample_fn(Suite s) {
  switch (s) {
    case Suite::isometry: return sample_isometry;
    case Suite::conjugate_system: return sample_conjugate;
    case Suite::nondegeneracy: return sample_nondegeneracy;
    case Suite::gauss_codazzi_ricci: return sample_gcr;
    case Suite::theorem2: return sample_theorem2;
    case Suite::curvature_identities: return sample_curvature;
    case Suite::closed_forms: return sample_closed_forms;
    case Suite::degenerate_remark: return sample_remark;
    case Suite::negative: return sample_negative;
  }
  return nullptr;
}

inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs body(i) for i in [0, count) on up to `threads` workers.
template <class F>
void parallel_for(int count, int threads, F body) {
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace detail

/// Runs one suite over every z draw and sample. Evaluation errors become failed
/// records; records are ordered by (draw, sample) regardless of threading.
inline CheckReport run_suite(Suite suite, const QuadricSpec& q, const std::vector<DeformParams>& draws,
                             const SuiteOptions& opt) {
  q.validate();
  CheckReport report;
  report.q = q;
  for (const auto& p : draws) report.z_draws.push_back(p.z);
  report.options = opt;
  report.suites = {std::string(suite_name(suite))};
  if (q.n < detail::suite_min_n(suite)) return report;

  const std::string name(suite_name(suite));
  const bool uses_draws = detail::suite_uses_draws(suite);
  const int ndraws = uses_draws ? static_cast<int>(draws.size()) : 1;

  std::vector<std::optional<AnsatzSurface>> surfaces(ndraws);
  std::vector<std::string> surface_errors(ndraws);
  if (uses_draws) {
    for (int d = 0; d < ndraws; ++d) {
      try {
        surfaces[d] = peterson_surface(q, draws[d], opt.quad);
      } catch (const std::exception& e) {
        surface_errors[d] = e.what();
      }
    }
  }

  const int total = ndraws * opt.samples;
  std::vector<std::vector<CheckRecord>> results(total);
  detail::parallel_for(total, detail::resolve_threads(opt.threads), [&](int task) {
    const int d = task / opt.samples;
    const int i = task % opt.samples;
    detail::SampleContext c;
    c.q = &q;
    c.p = uses_draws ? &draws[d] : nullptr;
    c.surface = uses_draws && surfaces[d] ? &*surfaces[d] : nullptr;
    c.opt = &opt;
    c.suite = name;
    c.draw = uses_draws ? d : -1;
    c.sample = i;
    SampleRng rng(opt.seed, name, static_cast<std::uint64_t>(d) * 1000003ULL + static_cast<std::uint64_t>(i));
    c.u = sample_u(q.n, opt.domain, rng);
    c.out = &results[task];
    if (uses_draws && !surfaces[d]) {
      c.emit_error("evaluation", surface_errors[d]);
      return;
    }
    try {
      detail::sample_fn(suite)(c);
    } catch (const std::exception& e) {
      results[task].clear();
      c.emit_error("evaluation", e.what());
    }
  });
  for (auto& r : results) {
    for (auto& rec : r) report.records.push_back(std::move(rec));
  }
  return report;
}

inline CheckReport run_suites(std::span<const Suite> suites, const QuadricSpec& q,
                              const std::vector<DeformParams>& draws, const SuiteOptions& opt) {
  CheckReport report;
  report.q = q;
  for (const auto& p : draws) report.z_draws.push_back(p.z);
  report.options = opt;
  for (Suite s : suites) {
    report.suites.emplace_back(suite_name(s));
    report.append(run_suite(s, q, draws, opt));
  }
  return report;
}

inline CheckReport check_isometry(const QuadricSpec& q, const std::vector<DeformParams>& draws,
                                  const SuiteOptions& opt = {}) {
  return run_suite(Suite::isometry, q, draws, opt);
}
inline CheckReport check_conjugate_system(const QuadricSpec& q, const std::vector<DeformParams>& draws,
                                          const SuiteOptions& opt = {}) {
  return run_suite(Suite::conjugate_system, q, draws, opt);
}
inline CheckReport check_nondegeneracy(const QuadricSpec& q, const std::vector<DeformParams>& draws,
                                       const SuiteOptions& opt = {}) {
  return run_suite(Suite::nondegeneracy, q, draws, opt);
}
inline CheckReport check_gauss_codazzi_ricci(const QuadricSpec& q, const std::vector<DeformParams>& draws,
                                             const SuiteOptions& opt = {}) {
  return run_suite(Suite::gauss_codazzi_ricci, q, draws, opt);
}
inline CheckReport check_theorem2_system(const QuadricSpec& q, const std::vector<DeformParams>& draws,
                                         const SuiteOptions& opt = {}) {
  return run_suite(Suite::theorem2, q, draws, opt);
}
inline CheckReport check_curvature_identities(const QuadricSpec& q, const std::vector<DeformParams>& draws,
                                              const SuiteOptions& opt = {}) {
  return run_suite(Suite::curvature_identities, q, draws, opt);
}
inline CheckReport check_closed_forms(const QuadricSpec& q, const SuiteOptions& opt = {}) {
  return run_suite(Suite::closed_forms, q, {}, opt);
}
inline CheckReport check_degenerate_remark(const QuadricSpec& q, const SuiteOptions& opt = {}) {
  return run_suite(Suite::degenerate_remark, q, {}, opt);
}

}  // namespace qdlab
