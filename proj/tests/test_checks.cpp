#include <gtest/gtest.h>

#include <set>

#include "qdlab/checks.hpp"

using namespace qdlab;

namespace {

SuiteOptions options(int samples, std::uint64_t seed = 42) {
  SuiteOptions o;
  o.samples = samples;
  o.seed = seed;
  return o;
}

std::vector<DeformParams> draws(const QuadricSpec& q, int count, std::uint64_t seed = 42) {
  std::vector<DeformParams> out;
  for (int d = 0; d < count; ++d) out.push_back(draw_z(q, seed, d, SamplingDomain{}));
  return out;
}

double worst(const CheckReport& r, const std::string& check = "") {
  double w = 0.0;
  for (const auto& rec : r.records) {
    if (check.empty() || rec.check_id == check) w = std::max(w, rec.residual);
  }
  return w;
}

void expect_all_pass(const CheckReport& r) {
  ASSERT_FALSE(r.records.empty());
  for (const auto& rec : r.records) {
    EXPECT_TRUE(rec.pass) << rec.suite << "." << rec.check_id << " draw " << rec.draw << " sample " << rec.sample
                          << " residual " << rec.residual << " " << rec.error;
  }
}

}  // namespace

TEST(Sampling, CounterKeyedStreamsAreReproducible) {
  SampleRng a(42, "isometry", 7), b(42, "isometry", 7), c(42, "isometry", 8), d(42, "gauss", 7);
  const double x = a.uniform(0, 1);
  EXPECT_EQ(x, b.uniform(0, 1));
  EXPECT_NE(x, c.uniform(0, 1));
  EXPECT_NE(x, d.uniform(0, 1));
}

TEST(Sampling, ParameterPointsStayInDomain) {
  SamplingDomain dom{0.2, 1.3, 0.05};
  for (std::uint64_t i = 0; i < 200; ++i) {
    SampleRng rng(1, "u", i);
    for (Cx v : sample_u(4, dom, rng)) {
      EXPECT_GE(v.real(), 0.2);
      EXPECT_LE(v.real(), 1.3);
      EXPECT_LE(std::abs(v.imag()), 0.05);
    }
  }
}

TEST(Sampling, DeformationDrawsAreDecreasingAndInterior) {
  for (int n = 2; n <= 6; ++n) {
    for (int cx = 0; cx < 2; ++cx) {
      QuadricSpec q = cx ? random_complex_quadric(n, 5) : QuadricSpec::sequential(n);
      for (int d = 0; d < 10; ++d) {
        DeformParams p = draw_z(q, 42, d, SamplingDomain{});
        double prev = 1.0;
        for (Cx z : p.z) {
          EXPECT_LT(z.real(), prev - 1e-6);
          EXPECT_GT(z.real(), 1e-6);
          if (!cx) EXPECT_EQ(z.imag(), 0.0);
          prev = z.real();
        }
        EXPECT_TRUE(z_admissible(q, p, SamplingDomain{}));
      }
    }
  }
}

TEST(Sampling, RandomComplexQuadricIsValid) {
  for (int n = 2; n <= 8; ++n) {
    QuadricSpec q = random_complex_quadric(n, 17);
    EXPECT_NO_THROW(q.validate());
    EXPECT_EQ(q.a.size(), static_cast<std::size_t>(n + 1));
  }
}

TEST(Tolerances, LookupOrder) {
  Tolerances t;
  EXPECT_EQ(t.get("isometry", "metric"), 1e-8);
  t.set_global(1e-3);
  EXPECT_EQ(t.get("isometry", "metric"), 1e-3);
  t.set("isometry", 1e-4);
  EXPECT_EQ(t.get("isometry", "metric"), 1e-4);
  t.set("isometry.metric", 1e-5);
  EXPECT_EQ(t.get("isometry", "metric"), 1e-5);
  EXPECT_EQ(t.get("theorem2", "hoj"), 1e-3);
}

TEST(Nondegeneracy, DeterminantReferenceValue) {
  QuadricSpec q = QuadricSpec::sequential(2);
  std::vector<Cx> u{kPi / 4, kPi / 6};
  EXPECT_NEAR(nondegeneracy_determinant(q, u).real(), -1.23365396477444734328480508129, 1e-14);
}

TEST(Nondegeneracy, VanishingSliceIsNonPassWithoutError) {
  QuadricSpec q = QuadricSpec::sequential(2);
  const Cx u2 = 0.7, c = std::cos(u2), s = std::sin(u2);
  const Cx K = q.a[1] / (q.a[1] - q.a[0]) * (q.a[0] * s * s + q.a[2] * c * c) / q.a[2];
  std::vector<Cx> u{std::asin(std::sqrt(K / c)), u2};
  ASSERT_LE(std::abs(nondegeneracy_determinant(q, u)), 1e-14);
  DeformParams p{{0.5}};
  AnsatzSurface surf = peterson_surface(q, p);
  SuiteOptions opt = options(1);
  std::vector<CheckRecord> out;
  detail::SampleContext ctx{&q, &p, &surf, &opt, "nondegeneracy", 0, 0, u, &out};
  ASSERT_NO_THROW(detail::sample_nondegeneracy(ctx));
  bool saw = false;
  for (const auto& r : out) {
    EXPECT_TRUE(r.error.empty());
    if (r.check_id == "determinant") {
      saw = true;
      EXPECT_FALSE(r.pass);
    }
  }
  EXPECT_TRUE(saw);
}

TEST(CheckIsometry, ZeroDeformationIsExact) {
  QuadricSpec q = QuadricSpec::sequential(3);
  auto r = check_isometry(q, {DeformParams::uniform(3, 0.0)}, options(20));
  expect_all_pass(r);
  EXPECT_LE(worst(r), 1e-12);
}

TEST(CheckIsometry, SquaresQuadricHalfDeformation) {
  QuadricSpec q{2, {1.0, 4.0, 9.0}};
  auto r = check_isometry(q, {DeformParams{{0.5}}}, options(50));
  EXPECT_EQ(r.records.size(), 50u);
  expect_all_pass(r);
}

TEST(CheckIsometry, FourDimensionalRandomDraw) {
  QuadricSpec q = QuadricSpec::sequential(4);
  expect_all_pass(check_isometry(q, draws(q, 1), options(50)));
}

TEST(CheckConjugateSystem, PassesOnRealAndComplex) {
  for (int cx = 0; cx < 2; ++cx) {
    QuadricSpec q = cx ? random_complex_quadric(4, 3) : QuadricSpec::sequential(4);
    expect_all_pass(check_conjugate_system(q, draws(q, 2), options(10)));
  }
}

TEST(CheckNondegeneracy, Passes) {
  QuadricSpec q = random_complex_quadric(3, 4);
  expect_all_pass(check_nondegeneracy(q, draws(q, 2), options(10)));
}

TEST(CheckGaussCodazziRicci, QuadricAndDeformation) {
  for (int n : {2, 3, 4}) {
    QuadricSpec q = QuadricSpec::sequential(n);
    auto r = check_gauss_codazzi_ricci(q, draws(q, 1), options(10));
    expect_all_pass(r);
    std::set<std::string> ids;
    for (const auto& rec : r.records) ids.insert(rec.check_id);
    EXPECT_TRUE(ids.count("gauss_quadric") && ids.count("codazzi_quadric") && ids.count("gauss") &&
                ids.count("codazzi") && ids.count("riemann_other"));
  }
}

TEST(CheckTheorem2, PassesAndSkipsPlanarCase) {
  QuadricSpec q = random_complex_quadric(4, 6);
  expect_all_pass(check_theorem2_system(q, draws(q, 1), options(10)));
  EXPECT_TRUE(check_theorem2_system(QuadricSpec::sequential(2), draws(QuadricSpec::sequential(2), 1), options(5))
                  .records.empty());
}

TEST(CheckCurvatureIdentities, ThreeDimensionalSample) {
  QuadricSpec q = QuadricSpec::sequential(3);
  auto r = check_curvature_identities(q, draws(q, 1), options(5));
  expect_all_pass(r);
  EXPECT_LE(worst(r), 1e-6);
}

TEST(CheckClosedForms, Passes) {
  for (int n = 2; n <= 4; ++n) expect_all_pass(check_closed_forms(QuadricSpec::sequential(n), options(10)));
}

TEST(CheckDegenerateRemark, DiagonalTermReported) {
  QuadricSpec q = QuadricSpec::sequential(3);
  auto r = check_degenerate_remark(q, options(20));
  expect_all_pass(r);
  int nonzero = 0, total = 0;
  for (const auto& rec : r.records) {
    if (rec.check_id != "diagonal") continue;
    ++total;
    ASSERT_TRUE(rec.value.has_value());
    if (*rec.value > 1e-8) ++nonzero;
  }
  EXPECT_EQ(total, 20);
  EXPECT_GE(nonzero, 18);
}

TEST(NegativeControls, EveryRecordFails) {
  QuadricSpec q = QuadricSpec::sequential(3);
  auto r = run_suite(Suite::negative, q, draws(q, 1), options(10));
  std::set<std::string> ids;
  for (const auto& rec : r.records) {
    EXPECT_FALSE(rec.pass) << rec.check_id;
    ids.insert(rec.check_id);
  }
  EXPECT_EQ(ids, (std::set<std::string>{"perturbed_metric_hoj", "swapped_isometry", "unrebased_corner",
                                        "mixed_term_recurrence"}));
}

TEST(RunSuite, EvaluationErrorsBecomeRecords) {
  QuadricSpec q = QuadricSpec::sequential(3);
  DeformParams p = DeformParams::uniform(3, 1.0);
  p.rebase = false;
  auto r = check_isometry(q, {p}, options(3));
  ASSERT_EQ(r.records.size(), 3u);
  for (const auto& rec : r.records) {
    EXPECT_FALSE(rec.pass);
    EXPECT_FALSE(rec.error.empty());
  }
}

TEST(RunSuite, DeterministicAcrossThreadCounts) {
  QuadricSpec q = random_complex_quadric(3, 2);
  auto ds = draws(q, 2);
  SuiteOptions a = options(8), b = options(8);
  a.threads = 1;
  b.threads = 4;
  auto ra = run_suites(default_suites(), q, ds, a);
  auto rb = run_suites(default_suites(), q, ds, b);
  ASSERT_EQ(ra.records.size(), rb.records.size());
  for (std::size_t i = 0; i < ra.records.size(); ++i) {
    EXPECT_EQ(ra.records[i].check_id, rb.records[i].check_id);
    EXPECT_EQ(ra.records[i].u, rb.records[i].u);
    EXPECT_EQ(ra.records[i].residual, rb.records[i].residual);
  }
}

TEST(RunSuite, ToleranceOverrideFlipsVerdict) {
  QuadricSpec q = QuadricSpec::sequential(3);
  SuiteOptions opt = options(5);
  opt.tol.set("isometry.metric", 0.0);
  auto r = check_isometry(q, draws(q, 1), opt);
  bool any_fail = false;
  for (const auto& rec : r.records) any_fail |= !rec.pass && rec.residual > 0;
  EXPECT_TRUE(any_fail || worst(r) == 0.0);
}

TEST(Catalog, EveryCheckHasDefaultTolerance) {
  for (const auto& info : suite_catalog()) {
    EXPECT_FALSE(info.claim.empty());
    for (auto c : info.checks) EXPECT_GE(default_tolerance(suite_name(info.suite), c), 0.0);
  }
  EXPECT_EQ(default_suites().size(), kAllSuites.size() - 1);
}
