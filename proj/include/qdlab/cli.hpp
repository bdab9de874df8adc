#pragma once

// Orchestration, report serialization, mesh export and the eval/explain views
// behind the qdlab command-line tool.

#include <charconv>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qdlab/checks.hpp"
#include "qdlab/cli/config.hpp"
#include "qdlab/geometry.hpp"
#include "qdlab/immersions.hpp"

namespace qdlab::cli {

using Json = nlohmann::ordered_json;

inline constexpr const char* kSchemaVersion = "1";

enum ExitCode : int { kExitPass = 0, kExitFail = 1, kExitConfig = 2, kExitDomain = 3 };

/// Jet order a suite needs from the immersion.
inline int suite_order(Suite s) {
  switch (s) {
    case Suite::isometry: return 1;
    case Suite::conjugate_system:
    case Suite::nondegeneracy:
    case Suite::closed_forms:
    case Suite::degenerate_remark: return 2;
    case Suite::gauss_codazzi_ricci:
    case Suite::theorem2:
    case Suite::negative: return 3;
    case Suite::curvature_identities: return 4;
  }
  return 4;
}

/// Worker count: hardware concurrency, capped by QDLAB_THREADS when set.
inline int thread_budget() {
  int threads = qdlab::detail::resolve_threads(0);
  if (const char* env = std::getenv("QDLAB_THREADS")) {
    int cap = 0;
    const std::string_view s(env);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), cap);
    if (ec == std::errc() && ptr == s.data() + s.size() && cap > 0) threads = std::min(threads, cap);
  }
  return threads;
}

inline Json complex_json(Cx z) { return Json::array({z.real(), z.imag()}); }

inline Json complex_list_json(const std::vector<Cx>& v) {
  Json out = Json::array();
  for (Cx z : v) out.push_back(complex_json(z));
  return out;
}

inline Json finite_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

inline Json record_json(const CheckRecord& r) {
  Json j;
  j["suite"] = r.suite;
  j["check_id"] = r.check_id;
  j["draw"] = r.draw < 0 ? Json(nullptr) : Json(r.draw);
  j["sample"] = r.sample;
  j["u"] = complex_list_json(r.u);
  j["z"] = complex_list_json(r.z);
  j["residual"] = finite_or_null(r.residual);
  j["tolerance"] = r.tolerance;
  j["pass"] = r.pass;
  if (r.value) j["value"] = finite_or_null(*r.value);
  Json meta = Json::object();
  for (const auto& [k, v] : r.metadata) meta[k] = v;
  j["metadata"] = std::move(meta);
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

inline std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

/// Full report document. Pass an empty timestamp to omit the field.
inline Json report_json(const RunConfig& cfg, const CheckReport& report, const std::vector<std::string>& skipped,
                        const std::string& timestamp) {
  Json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["tool"] = "qdlab";
  if (!timestamp.empty()) doc["generated_at"] = timestamp;

  Json c;
  c["n"] = report.q.n;
  c["a"] = complex_list_json(report.q.a);
  Json draws = Json::array();
  for (const auto& z : report.z_draws) draws.push_back(complex_list_json(z));
  c["z_draws"] = std::move(draws);
  c["z_source"] = cfg.z_values.empty() ? "random" : "explicit";
  c["seed"] = cfg.seed;
  c["samples"] = cfg.samples;
  c["domain"] = {{"u_lo", cfg.domain.u_lo}, {"u_hi", cfg.domain.u_hi}, {"u_imag", cfg.domain.u_imag}};
  c["rebase"] = cfg.rebase;
  c["max_order"] = cfg.max_order;
  Json suites = Json::array();
  for (Suite s : cfg.suites) suites.push_back(std::string(suite_name(s)));
  c["suites"] = std::move(suites);
  Json tol = Json::object();
  if (cfg.tol.global()) tol["global"] = *cfg.tol.global();
  for (const auto& [k, v] : cfg.tol.overrides()) tol[k] = v;
  c["tolerance_overrides"] = std::move(tol);
  doc["config"] = std::move(c);

  Json by_suite = Json::object();
  for (Suite s : cfg.suites) {
    const std::string name(suite_name(s));
    std::size_t total = 0, passed = 0;
    for (const auto& r : report.records) {
      if (r.suite != name) continue;
      ++total;
      passed += r.pass ? 1 : 0;
    }
    by_suite[name] = {{"records", total}, {"passed", passed}, {"failed", total - passed}};
  }
  doc["summary"] = {{"records", report.records.size()},
                    {"passed", report.passed()},
                    {"failed", report.failed()},
                    {"all_pass", report.all_pass()},
                    {"skipped_suites", skipped},
                    {"by_suite", std::move(by_suite)}};

  Json records = Json::array();
  for (const auto& r : report.records) records.push_back(record_json(r));
  doc["records"] = std::move(records);
  return doc;
}

/// Deformation parameters for a run: the explicit list, or seeded random draws.
/// Throws DomainError when a parameter set yields singular profiles.
inline std::vector<DeformParams> preflight_draws(const RunConfig& cfg, const QuadricSpec& q) {
  std::vector<DeformParams> draws;
  if (!cfg.z_values.empty()) {
    for (const auto& z : cfg.z_values) {
      DeformParams p{z, ZConvention::theorem1, cfg.rebase};
      p.validate(q.n);
      (void)peterson_surface(q, p);
      draws.push_back(std::move(p));
    }
    return draws;
  }
  for (int d = 0; d < cfg.z_draws; ++d) draws.push_back(draw_z(q, cfg.seed, d, cfg.domain, cfg.rebase));
  return draws;
}

struct RunResult {
  CheckReport report;
  std::vector<std::string> skipped;
};

/// Runs the configured suites. Throws ConfigError or DomainError before any record.
inline RunResult execute(const RunConfig& cfg, int threads) {
  cfg.validate();
  const QuadricSpec q = cfg.quadric();
  std::vector<Suite> active;
  RunResult out;
  for (Suite s : cfg.suites) {
    if (suite_order(s) > cfg.max_order) {
      out.skipped.emplace_back(suite_name(s));
    } else {
      active.push_back(s);
    }
  }
  const bool needs_draws = std::any_of(active.begin(), active.end(), qdlab::detail::suite_uses_draws);
  const bool needs_corner = std::any_of(active.begin(), active.end(), [](Suite s) {
    return s == Suite::closed_forms || s == Suite::degenerate_remark;
  });
  std::vector<DeformParams> draws;
  if (needs_draws) draws = preflight_draws(cfg, q);
  if (needs_corner && !cfg.rebase) {
    (void)peterson_surface(q, DeformParams{std::vector<Cx>(q.n - 1, Cx(1.0)), ZConvention::theorem1, false});
  }

  SuiteOptions opt;
  opt.samples = cfg.samples;
  opt.seed = cfg.seed;
  opt.domain = cfg.domain;
  opt.rebase = cfg.rebase;
  opt.threads = threads;
  opt.tol = cfg.tol;
  out.report = run_suites(active, q, draws, opt);
  return out;
}

inline void print_summary(std::ostream& os, const RunConfig& cfg, const RunResult& res) {
  os << "qdlab check: n=" << res.report.q.n << ", " << res.report.z_draws.size() << " z draw(s), " << cfg.samples
     << " samples, seed " << cfg.seed << "\n";
  for (Suite s : cfg.suites) {
    const std::string name(suite_name(s));
    if (std::find(res.skipped.begin(), res.skipped.end(), name) != res.skipped.end()) {
      os << "  " << std::left << std::setw(22) << name << "skipped (needs jet order " << suite_order(s) << ")\n";
      continue;
    }
    std::size_t total = 0, failed = 0;
    double worst = 0.0;
    for (const auto& r : res.report.records) {
      if (r.suite != name) continue;
      ++total;
      if (!r.pass) ++failed;
      if (r.tolerance > 0 && std::isfinite(r.residual)) worst = std::max(worst, r.residual / r.tolerance);
    }
    os << "  " << std::left << std::setw(22) << name << std::right << std::setw(6) << total << " records  "
       << std::setw(5) << failed << " failed  worst residual/tol " << std::scientific << std::setprecision(2) << worst
       << std::defaultfloat << "\n";
  }
  os << (res.report.all_pass() ? "PASS" : "FAIL") << ": " << res.report.passed() << "/" << res.report.records.size()
     << " records passed\n";
}

/// Runs a configuration end to end and returns the process exit code.
/// The JSON report goes to cfg.report_path ("-" for `out`); the summary goes to
/// `out`, or to `err` when the report itself is written to `out`.
inline int run(const RunConfig& cfg, std::ostream& out, std::ostream& err, int threads = 0) {
  RunResult res;
  try {
    res = execute(cfg, threads > 0 ? threads : thread_budget());
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DomainError& e) {
    err << "domain error: " << e.what() << "\n";
    return kExitDomain;
  }
  const std::string ts = cfg.timestamp ? utc_timestamp() : std::string();
  const std::string text = report_json(cfg, res.report, res.skipped, ts).dump(2) + "\n";
  std::ostream& summary = cfg.report_path == "-" ? err : out;
  if (cfg.report_path == "-") {
    out << text;
  } else if (!cfg.report_path.empty()) {
    std::ofstream f(cfg.report_path, std::ios::binary);
    if (!f) {
      err << "error: cannot write report '" << cfg.report_path << "'\n";
      return kExitConfig;
    }
    f << text;
  }
  print_summary(summary, cfg, res);
  return res.report.all_pass() ? kExitPass : kExitFail;
}

/// Shortest round-trip decimal.
inline std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

inline constexpr double kMeshImagTol = 1e-10;

/// CSV of the real n = 2 surface X_z on the configured grid.
inline std::string export_mesh(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.n != 2) throw ConfigError("mesh: requires n = 2, got n = " + std::to_string(cfg.n));
  const QuadricSpec q = cfg.quadric();
  for (std::size_t j = 0; j < q.a.size(); ++j) {
    if (q.a[j].imag() != 0.0) throw ConfigError("mesh: coefficient a_" + std::to_string(j) + " is not real");
  }
  Cx z;
  if (cfg.mesh.z) {
    z = *cfg.mesh.z;
  } else if (!cfg.z_values.empty()) {
    z = cfg.z_values.front().front();
  } else {
    throw ConfigError("mesh: set mesh.z or z.values");
  }
  if (z.imag() != 0.0) throw ConfigError("mesh: z must be real");
  const AnsatzSurface s = peterson_surface(q, DeformParams{{z}, ZConvention::theorem1, cfg.rebase});
  auto grid = [](double lo, double hi, int count, int i) {
    return count == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  };
  std::string csv = "u1,u2,x0,x1,x2\n";
  for (int i = 0; i < cfg.mesh.u1_count; ++i) {
    for (int k = 0; k < cfg.mesh.u2_count; ++k) {
      const double u1 = grid(cfg.mesh.u1_lo, cfg.mesh.u1_hi, cfg.mesh.u1_count, i);
      const double u2 = grid(cfg.mesh.u2_lo, cfg.mesh.u2_hi, cfg.mesh.u2_count, k);
      const std::vector<Cx> u = {Cx(u1), Cx(u2)};
      const auto x = s.point(u);
      csv += format_double(u1) + "," + format_double(u2);
      for (std::size_t c = 0; c < x.size(); ++c) {
        if (std::abs(x[c].imag()) > kMeshImagTol || !std::isfinite(x[c].real())) {
          throw DomainError("mesh: coordinate x" + std::to_string(c) + " is not real at u = (" + format_double(u1) +
                            ", " + format_double(u2) + ")");
        }
        csv += "," + format_double(x[c].real());
      }
      csv += "\n";
    }
  }
  return csv;
}

inline Json form_json(const JetArray& a) {
  Json out = Json::array();
  if (a.rank() == 2) {
    for (int i = 0; i < a.dim(0); ++i) {
      Json row = Json::array();
      for (int j = 0; j < a.dim(1); ++j) row.push_back(complex_json(a.val(i, j)));
      out.push_back(std::move(row));
    }
    return out;
  }
  for (int s = 0; s < a.dim(0); ++s) {
    Json m = Json::array();
    for (int i = 0; i < a.dim(1); ++i) {
      Json row = Json::array();
      for (int j = 0; j < a.dim(2); ++j) row.push_back(complex_json(a.val(s, i, j)));
      m.push_back(std::move(row));
    }
    out.push_back(std::move(m));
  }
  return out;
}

inline Json point_json(const ImmersionJet& x, const NormalFrame& frame) {
  std::vector<Cx> p;
  for (const auto& c : x.coords) p.push_back(c.value());
  Json j;
  j["point"] = complex_list_json(p);
  j["first_form"] = form_json(first_form(x));
  j["second_forms"] = form_json(second_form(x, frame));
  return j;
}

/// Point, first form and second forms (one matrix per unit normal) of the
/// quadric and, when z is given, of the deformation X_z at u.
inline Json eval_json(const QuadricSpec& q, const std::vector<Cx>& u, const std::optional<DeformParams>& p) {
  q.validate();
  if (static_cast<int>(u.size()) != q.n) {
    throw ConfigError("eval: expected " + std::to_string(q.n) + " parameters u, got " + std::to_string(u.size()));
  }
  Json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["n"] = q.n;
  doc["a"] = complex_list_json(q.a);
  doc["u"] = complex_list_json(u);
  const auto xq = eval_quadric(q, u, 2);
  doc["quadric"] = point_json(xq, normal_frame_quadric(q, xq));
  if (p) {
    p->validate(q.n);
    doc["z"] = complex_list_json(p->z);
    const auto xz = eval_peterson(q, *p, u, 2);
    doc["deformed"] = point_json(xz, normal_frame_peterson(q, *p, u, 2));
  }
  return doc;
}

/// Plain-text table mapping suites to the claims they test.
inline std::string explain_text() {
  std::ostringstream os;
  for (const auto& info : suite_catalog()) {
    os << suite_name(info.suite) << (info.suite == Suite::negative ? " (not in \"all\")" : "") << "\n";
    os << "  claim: " << info.claim << "\n";
    os << "  jet order: " << suite_order(info.suite) << ", min n: " << qdlab::detail::suite_min_n(info.suite) << "\n";
    os << "  checks:\n";
    for (auto c : info.checks) {
      os << "    " << std::left << std::setw(24) << c << "tol " << std::defaultfloat
         << default_tolerance(suite_name(info.suite), c) << "\n";
    }
  }
  return os.str();
}

}  // namespace qdlab::cli
