#include <gtest/gtest.h>

#include <random>

#include "qdlab/checks.hpp"
#include "qdlab/geometry.hpp"
#include "qdlab/immersions.hpp"
#include "support/fd_oracle.hpp"

using namespace qdlab;

namespace {

std::vector<Cx> vals(const ImmersionJet& x) {
  std::vector<Cx> v;
  for (const auto& c : x.coords) v.push_back(c.value());
  return v;
}

double max_diff(const std::vector<Cx>& a, const std::vector<Cx>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST(QuadricSpec, RejectsCoincidentCoefficients) {
  QuadricSpec q{2, {1.0, 2.0, 2.0}};
  try {
    q.validate();
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("a_1 and a_2"), std::string::npos);
  }
  EXPECT_THROW((QuadricSpec{2, {0.0, 1.0, 2.0}}.validate()), ConfigError);
  EXPECT_THROW((QuadricSpec{2, {1.0, 2.0}}.validate()), ConfigError);
  EXPECT_NO_THROW(QuadricSpec::sequential(4).validate());
}

TEST(CosineCascade, Examples) {
  EXPECT_EQ(cosine_cascade(std::vector<Cx>{0.9, 0.0, 0.0}, 1), Cx(1.0));
  EXPECT_EQ(cosine_cascade(std::vector<Cx>{0.4, 0.7, 1.1}, 3), Cx(1.0));
  EXPECT_LE(std::abs(cosine_cascade(std::vector<Cx>{0.3, 0.5}, 0) - std::cos(0.3) * std::cos(0.5)), 1e-16);
}

TEST(EvalQuadric, OriginPoint) {
  QuadricSpec q{3, {2.0, 3.0, 5.0, 7.0}};
  std::vector<Cx> u(3, 0.0);
  auto x = quadric_point(q, u);
  EXPECT_LE(std::abs(x[0] - std::sqrt(2.0)), 1e-15);
  for (int j = 1; j <= 3; ++j) EXPECT_EQ(x[j], Cx{});
}

TEST(EvalQuadric, PoleOfFirstAngle) {
  QuadricSpec q{2, {1.0, 2.0, 3.0}};
  std::vector<Cx> u{kPi / 2, 0.0};
  auto x = quadric_point(q, u);
  EXPECT_LE(std::abs(x[0]), 1e-16);
  EXPECT_LE(std::abs(x[1] - std::sqrt(2.0)), 1e-15);
  EXPECT_LE(std::abs(x[2]), 1e-16);
}

TEST(EvalQuadric, PointsLieOnQuadric) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> d(-1.5, 1.5);
  for (int n = 2; n <= 6; ++n) {
    QuadricSpec q = random_complex_quadric(n, 100 + n);
    for (int i = 0; i < 50; ++i) {
      std::vector<Cx> u(n);
      for (auto& v : u) v = Cx(d(rng), 0.2 * d(rng));
      auto x = eval_quadric(q, u, 2);
      Jet s = Jet::constant(0.0, n, 2);
      for (int j = 0; j <= n; ++j) s += x.coords[j] * x.coords[j] / q.a[j];
      EXPECT_LE(std::abs(s.value() - 1.0), 1e-12);
      for (std::size_t k = 1; k < s.coeffs().size(); ++k) EXPECT_LE(std::abs(s.coeffs()[k]), 1e-12);
    }
  }
}

TEST(Embed, InsertsZerosBetweenCoordinates) {
  std::vector<Cx> p{1.0, 2.0, 3.0};
  EXPECT_EQ(embed(p), p);
  std::vector<Cx> p3{1.0, 2.0, 3.0, 4.0};
  EXPECT_EQ(embed(p3), (std::vector<Cx>{1.0, 2.0, 3.0, 0.0, 4.0}));
}

TEST(PetersonProfiles, RadiusSquaredIsClosedForm) {
  QuadricSpec q = QuadricSpec::sequential(4);
  DeformParams p{{0.8, 0.5, 0.2}};
  auto r = peterson_radicands(q, p);
  AnsatzSurface s = peterson_surface(q, p);
  for (int k = 1; k < 4; ++k) {
    for (double t : {0.2, 0.6, 1.3}) {
      const Cx f = s.f(k)(Cx(t));
      const Cx zp = p.z_at(k - 1), zk = p.z_at(k);
      const Cx expect = (zp - zk) * q.a[0] + (q.a[k] - zp * q.a[0]) * std::sin(t) * std::sin(t);
      EXPECT_LE(std::abs(f * f - expect), 1e-14);
      EXPECT_LE(std::abs(r.f_squared[k - 1](Cx(t)) - expect), 1e-14);
    }
  }
}

TEST(PetersonProfiles, AngleProfileReferenceValues) {
  QuadricSpec q = QuadricSpec::sequential(3);
  DeformParams p{{0.3, 0.1}};
  AnsatzSurface s = peterson_surface(q, p);
  Jet g = s.g(1)(jet_var(0, 0.8, 1, 2));
  EXPECT_NEAR(g.value().real(), 1.11794959987667129410928786586, 1e-12);
  EXPECT_NEAR(jet_partial(g, {1}).real(), 1.02646796116618263881973756594, 1e-13);
  EXPECT_NEAR(jet_partial(g, {2}).real(), -0.745734172744282357568099254013, 1e-12);
  EXPECT_EQ(s.g_base(1), 0.0);
}

TEST(PetersonProfiles, LastCoordinateIsEllipticIntegral) {
  QuadricSpec q = QuadricSpec::sequential(2);
  AnsatzSurface s = peterson_surface(q, DeformParams{{0.5}});
  EXPECT_NEAR(s.h()(Cx(1.1)).real(), 1.61641298311368953401502307938, 1e-12);
}

TEST(PetersonProfiles, CornerRequiresRebase) {
  QuadricSpec q = QuadricSpec::sequential(3);
  DeformParams p = DeformParams::uniform(3, 1.0);
  p.rebase = false;
  EXPECT_THROW(peterson_surface(q, p), DomainError);
  p.rebase = true;
  AnsatzSurface s = peterson_surface(q, p);
  EXPECT_EQ(s.g_base(1), kPi / 2);
}

TEST(PetersonProfiles, WrongParameterCountRejected) {
  EXPECT_THROW(peterson_surface(QuadricSpec::sequential(3), DeformParams{{0.5}}), ConfigError);
}

TEST(ZeroDeformation, ReproducesEmbeddedQuadric) {
  for (int n = 2; n <= 5; ++n) {
    QuadricSpec q = QuadricSpec::sequential(n);
    AnsatzSurface s = peterson_surface(q, DeformParams::uniform(n, 0.0));
    for (double t : {0.2, 0.7, 1.3}) {
      std::vector<Cx> u(n);
      for (int j = 0; j < n; ++j) u[j] = t + 0.05 * j;
      auto xz = s.point(u);
      auto xq = embed(quadric_point(q, u));
      // The first angle is fixed up to the rotation sign of the principal plane.
      EXPECT_LE(std::abs(xz[0] * xz[0] - xq[0] * xq[0]), 1e-10);
      EXPECT_LE(std::abs(xz[1] * xz[1] - xq[1] * xq[1]), 1e-10);
      for (int c = 2; c < 2 * n - 1; ++c) EXPECT_LE(std::abs(xz[c] - xq[c]), 1e-10) << "n=" << n << " c=" << c;
    }
  }
}

TEST(ZeroDeformation, PlanarProfilesMatchQuadric) {
  const double a0 = 1.0, a1 = 2.0;
  QuadricSpec q{2, {a0, a1, 3.0}};
  AnsatzSurface s = peterson_surface(q, DeformParams{{0.0}});
  for (double u = 0.1; u <= 1.4; u += 0.1) {
    const Cx f = s.f(1)(Cx(u)), g = s.g(1)(Cx(u));
    EXPECT_LE(std::abs(f * std::cos(g) - std::sqrt(a0) * std::cos(u)), 1e-10);
    EXPECT_LE(std::abs(f * std::sin(g) - std::sqrt(a1) * std::sin(u)), 1e-10);
  }
}

TEST(ClosedForms, UnitDeformationMatchesPetersonFormulae) {
  QuadricSpec q = QuadricSpec::sequential(3);
  AnsatzSurface s = peterson_surface(q, DeformParams::uniform(3, 1.0));
  std::vector<Cx> u{0.4, 0.9, 1.2};
  auto cf = peterson_closed_z1(q, u);
  for (int k = 1; k < 3; ++k) {
    const Cx r = cosine_cascade(u, k) * s.f(k)(u[k - 1]);
    EXPECT_LE(std::abs(r * r - cf.radius[k - 1] * cf.radius[k - 1]), 1e-12);
    const Cx dg = s.g(k)(jet_var(0, u[k - 1], 1, 1)).coeffs()[1];
    const Cx dcf = atanh(jet_var(0, std::cos(u[k - 1]), 1, 1)).coeffs()[1] * -std::sin(u[k - 1]) *
                   std::sqrt(q.a[0]) / std::sqrt(q.a[k] - q.a[0]);
    EXPECT_LE(std::abs(std::abs(dg) - std::abs(dcf)), 1e-10);
  }
  EXPECT_LE(std::abs(s.h()(u[2]) - cf.last), 1e-12);
}

TEST(ClosedForms, AngleVanishesAtRightAngle) {
  QuadricSpec q = QuadricSpec::sequential(3);
  std::vector<Cx> u{kPi / 2, 0.5, 0.5};
  EXPECT_LE(std::abs(peterson_closed_z1(q, u).angle[0]), 1e-16);
  AnsatzSurface s = peterson_surface(q, DeformParams::uniform(3, 1.0));
  EXPECT_LE(std::abs(s.g(1)(Cx(kPi / 2))), 1e-16);
}

TEST(ClosedForms, RebasedAngleIsArtanh) {
  QuadricSpec q{2, {1.0, 2.0, 3.0}};
  AnsatzSurface s = peterson_surface(q, DeformParams{{1.0}});
  EXPECT_NEAR(s.g(1)(Cx(0.9)).real(), -0.72762462434018419450363660038, 1e-12);
}

TEST(Generalized, ZeroParametersGiveQuadricShape) {
  QuadricSpec q = QuadricSpec::sequential(4);
  BaseProfiles base = quadric_base_profiles(q);
  DeformParams p = DeformParams::uniform(4, 0.0, ZConvention::generalized);
  std::vector<Cx> u{0.3, 0.6, 0.9, 1.2};
  auto x = eval_generalized(4, base, p, u, 1);
  auto v = vals(x);
  for (int k = 2; k < 4; ++k) EXPECT_EQ(v[2 * k - 1], Cx{});
  EXPECT_LE(max_diff(v, embed(quadric_point(q, u))), 1e-12);
}

TEST(Generalized, DeformedMemberIsIsometric) {
  QuadricSpec q = QuadricSpec::sequential(3);
  BaseProfiles base = quadric_base_profiles(q);
  DeformParams p{{0.1, 0.15}, ZConvention::generalized};
  std::vector<Cx> u{0.5, 0.7, 0.9};
  auto g0 = first_form(eval_quadric(q, u, 1));
  auto gz = first_form(eval_generalized(3, base, p, u, 1));
  for (int j = 0; j < 3; ++j) {
    for (int k = 0; k < 3; ++k) EXPECT_LE(std::abs(g0.val(j, k) - gz.val(j, k)), 1e-10);
  }
}

TEST(Generalized, ConventionMismatchRejected) {
  QuadricSpec q = QuadricSpec::sequential(3);
  EXPECT_THROW(generalized_surface(3, quadric_base_profiles(q), DeformParams{{0.1, 0.2}}), ConfigError);
  EXPECT_THROW(peterson_surface(q, DeformParams{{0.1, 0.2}, ZConvention::generalized}), ConfigError);
}

TEST(Isometry, RotationConstantsLeaveMetricUnchanged) {
  QuadricSpec q = QuadricSpec::sequential(3);
  DeformParams p{{0.7, 0.3}};
  AnsatzSurface s = peterson_surface(q, p);
  std::vector<Profile> f{s.f(1), s.f(2)}, g{s.g(1).shifted(0.37), s.g(2).shifted(-1.1)};
  AnsatzSurface t(3, f, g, s.h());
  std::vector<Cx> u{0.4, 0.8, 1.0};
  auto ga = first_form(s.eval(u, 1)), gb = first_form(t.eval(u, 1));
  for (int j = 0; j < 3; ++j) {
    for (int k = 0; k < 3; ++k) EXPECT_LE(std::abs(ga.val(j, k) - gb.val(j, k)), 1e-12);
  }
}

TEST(Isometry, PointMatchesIndependentEvaluator) {
  for (int n = 2; n <= 5; ++n) {
    QuadricSpec q = random_complex_quadric(n, 9);
    DeformParams p = draw_z(q, 3, 0, SamplingDomain{});
    AnsatzSurface s = peterson_surface(q, p);
    oracle::PetersonOracle o(q, p);
    SampleRng rng(1, "points", static_cast<std::uint64_t>(n));
    auto u = sample_u(n, SamplingDomain{0.15, 1.4, 0.05}, rng);
    EXPECT_LE(max_diff(s.point(u), o.point(u)), 1e-11) << "n=" << n;
  }
}
