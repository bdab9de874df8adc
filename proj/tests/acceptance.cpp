#include <chrono>
#include <cstdio>
#include <functional>
#include <string>

#include "qdlab/cli.hpp"
#include "support/fd_oracle.hpp"

using namespace qdlab;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Stats {
  double worst = 0.0;
  std::size_t records = 0;
  std::size_t failed = 0;
  std::size_t errors = 0;

  void add(const CheckReport& r, const std::vector<std::string>& ids = {}) {
    for (const auto& rec : r.records) {
      if (!ids.empty() && std::find(ids.begin(), ids.end(), rec.check_id) == ids.end()) continue;
      ++records;
      failed += rec.pass ? 0 : 1;
      errors += rec.error.empty() ? 0 : 1;
      worst = std::max(worst, rec.residual);
    }
  }
  bool within(double tol) const { return records > 0 && errors == 0 && worst <= tol; }
};

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<DeformParams> draws(const QuadricSpec& q, int count, std::uint64_t seed) {
  std::vector<DeformParams> out;
  for (int d = 0; d < count; ++d) out.push_back(draw_z(q, seed, d, SamplingDomain{}));
  return out;
}

std::vector<QuadricSpec> quadrics(int lo, int hi) {
  std::vector<QuadricSpec> out;
  for (int n = lo; n <= hi; ++n) {
    out.push_back(QuadricSpec::sequential(n));
    out.push_back(random_complex_quadric(n, 1000 + n));
  }
  return out;
}

SuiteOptions options(int samples, std::uint64_t seed) {
  SuiteOptions o;
  o.samples = samples;
  o.seed = seed;
  o.threads = 0;
  return o;
}

Outcome isometry() {
  constexpr double kTol = 1e-8, kBudget = 30.0;
  const auto t0 = std::chrono::steady_clock::now();
  Stats s;
  for (const auto& q : quadrics(2, 5)) s.add(check_isometry(q, draws(q, 5, 11), options(50, 11)));
  const double t = seconds_since(t0);
  return {s.within(kTol) && t < kBudget,
          fmt("records=%zu worst=%.3e tol=%.0e time=%.1fs budget=%.0fs", s.records, s.worst, kTol, t, kBudget)};
}

Outcome conjugacy() {
  constexpr double kTol = 1e-9;
  Stats s;
  for (const auto& q : quadrics(2, 5)) s.add(check_conjugate_system(q, draws(q, 3, 12), options(30, 12)));
  return {s.within(kTol), fmt("records=%zu worst=%.3e tol=%.0e", s.records, s.worst, kTol)};
}

Outcome nondegeneracy() {
  constexpr double kTol = 1e-8, kShare = 0.95;
  Stats joined;
  std::size_t det_total = 0, det_pass = 0;
  for (const auto& q : quadrics(2, 5)) {
    auto r = check_nondegeneracy(q, draws(q, 3, 13), options(30, 13));
    joined.add(r, {"orthogonality", "sum_b_squared"});
    for (const auto& rec : r.records) {
      if (rec.check_id != "determinant") continue;
      ++det_total;
      det_pass += rec.pass ? 1 : 0;
    }
  }
  const double share = det_total ? static_cast<double>(det_pass) / det_total : 0.0;
  return {joined.within(kTol) && share >= kShare,
          fmt("determinant nonzero on %zu/%zu (%.1f%%, need %.0f%%) joined worst=%.3e tol=%.0e", det_pass,
              det_total, 100 * share, 100 * kShare, joined.worst, kTol)};
}

Outcome gauss_codazzi_ricci() {
  constexpr double kTol = 1e-7, kBudget = 60.0;
  const auto t0 = std::chrono::steady_clock::now();
  Stats s;
  for (const auto& q : quadrics(3, 4)) s.add(check_gauss_codazzi_ricci(q, draws(q, 1, 14), options(30, 14)));
  const double t = seconds_since(t0);
  return {s.within(kTol) && t < kBudget,
          fmt("records=%zu worst=%.3e tol=%.0e time=%.1fs budget=%.0fs", s.records, s.worst, kTol, t, kBudget)};
}

Outcome theorem2() {
  constexpr double kTol = 1e-7;
  Stats s;
  std::size_t controls = 0, controls_failed = 0;
  for (const auto& q : quadrics(3, 4)) {
    s.add(check_theorem2_system(q, draws(q, 2, 15), options(20, 15)));
    auto neg = run_suite(Suite::negative, q, draws(q, 1, 15), options(5, 15));
    for (const auto& rec : neg.records) {
      if (rec.check_id != "perturbed_metric_hoj") continue;
      ++controls;
      controls_failed += rec.pass ? 0 : 1;
    }
  }
  return {s.within(kTol) && controls > 0 && controls_failed == controls,
          fmt("records=%zu worst=%.3e tol=%.0e perturbed control failed %zu/%zu", s.records, s.worst, kTol,
              controls_failed, controls)};
}

Outcome closed_forms() {
  constexpr double kTolZ0 = 1e-10, kTolZ1 = 1e-8;
  Stats z0, z1;
  for (int n = 2; n <= 5; ++n) {
    auto r = check_closed_forms(QuadricSpec::sequential(n), options(50, 16));
    z0.add(r, {"z0_coordinates"});
    z1.add(r, {"z1_radius", "z1_angle_derivative"});
  }
  return {z0.within(kTolZ0) && z1.within(kTolZ1),
          fmt("z=0 worst=%.3e tol=%.0e; z=1 worst=%.3e tol=%.0e", z0.worst, kTolZ0, z1.worst, kTolZ1)};
}

Outcome curvature() {
  constexpr double kTol = 1e-6, kBudget = 120.0;
  const auto t0 = std::chrono::steady_clock::now();
  Stats s;
  for (const auto& q : quadrics(3, 4)) s.add(check_curvature_identities(q, draws(q, 1, 17), options(20, 17)));
  const double t = seconds_since(t0);
  return {s.within(kTol) && t < kBudget,
          fmt("records=%zu worst=%.3e tol=%.0e time=%.1fs budget=%.0fs", s.records, s.worst, kTol, t, kBudget)};
}

Outcome remark() {
  constexpr double kTol = 1e-8, kDiag = 1e-8, kShare = 0.9;
  Stats mixed;
  std::size_t total = 0, nonzero = 0;
  for (int n = 2; n <= 5; ++n) {
    auto r = check_degenerate_remark(QuadricSpec::sequential(n), options(50, 18));
    mixed.add(r, {"mixed"});
    for (const auto& rec : r.records) {
      if (rec.check_id != "diagonal") continue;
      ++total;
      nonzero += rec.value && *rec.value > kDiag ? 1 : 0;
    }
  }
  const double share = total ? static_cast<double>(nonzero) / total : 0.0;
  return {mixed.within(kTol) && share >= kShare,
          fmt("mixed worst=%.3e tol=%.0e; diagonal above %.0e on %zu/%zu (need %.0f%%)", mixed.worst, kTol, kDiag,
              nonzero, total, 100 * kShare)};
}

Outcome finite_differences() {
  constexpr double kTol = 1e-6;
  constexpr int kEvaluations = 200;
  double worst_g = 0.0, worst_m = 0.0;
  int done = 0;
  for (int i = 0; i < kEvaluations; ++i) {
    const int n = 2 + i % 4;
    const bool cx = (i / 4) % 2;
    QuadricSpec q = cx ? random_complex_quadric(n, 2000 + i) : QuadricSpec::sequential(n);
    DeformParams p = draw_z(q, 19, i, SamplingDomain{});
    SampleRng rng(19, "oracle", i);
    auto u = sample_u(n, SamplingDomain{0.15, 1.4, cx ? 0.05 : 0.0}, rng);
    oracle::PetersonOracle o(q, p);
    auto x = eval_peterson(q, p, u, 2);
    auto g = first_form(x);
    auto go = oracle::fd_first_form(o, u);
    double gs = 0.0, ge = 0.0;
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        gs = std::max(gs, std::abs(go[a][b]));
        ge = std::max(ge, std::abs(go[a][b] - g.val(a, b)));
      }
    }
    auto frame = normal_frame_peterson(q, p, u, 2);
    auto h = second_form(x, frame);
    auto M = oracle::fd_second_form_contraction(o, u);
    double ms = 0.0, me = 0.0;
    std::size_t idx = 0;
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        for (int c = 0; c < n; ++c) {
          for (int d = 0; d < n; ++d, ++idx) {
            Cx lib = 0.0;
            for (int al = 0; al < frame.p(); ++al) lib += h.val(al, a, b) * h.val(al, c, d);
            ms = std::max(ms, std::abs(M[idx]));
            me = std::max(me, std::abs(M[idx] - lib));
          }
        }
      }
    }
    worst_g = std::max(worst_g, ge / std::max(gs, 1e-300));
    worst_m = std::max(worst_m, me / std::max(ms, 1e-300));
    ++done;
  }
  return {done == kEvaluations && worst_g <= kTol && worst_m <= kTol,
          fmt("evaluations=%d first form rel=%.3e second form rel=%.3e tol=%.0e", done, worst_g, worst_m, kTol)};
}

Outcome determinism() {
  cli::RunConfig cfg;
  cfg.n = 4;
  cfg.samples = 10;
  cfg.z_draws = 2;
  cfg.timestamp = false;
  const auto a = cli::execute(cfg, 1), b = cli::execute(cfg, 4), c = cli::execute(cfg, 1);
  const std::string ja = cli::report_json(cfg, a.report, a.skipped, "").dump(2);
  const std::string jb = cli::report_json(cfg, b.report, b.skipped, "").dump(2);
  const std::string jc = cli::report_json(cfg, c.report, c.skipped, "").dump(2);
  return {ja == jb && ja == jc && !a.report.records.empty(),
          fmt("records=%zu bytes=%zu threads 1/4/1 identical=%s", a.report.records.size(), ja.size(),
              ja == jb && ja == jc ? "yes" : "no")};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"isometry", isometry},
      {"conjugate_system", conjugacy},
      {"nondegeneracy", nondegeneracy},
      {"gauss_codazzi_ricci", gauss_codazzi_ricci},
      {"theorem2", theorem2},
      {"closed_forms", closed_forms},
      {"curvature_identities", curvature},
      {"degenerate_remark", remark},
      {"finite_difference_oracle", finite_differences},
      {"determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::printf("[%s] %zu %s %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
