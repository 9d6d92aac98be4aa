#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "parevo/certificates.hpp"

#include <cmath>
#include <sstream>

using namespace parevo;

namespace {

template <class F>
ErrorKind error_kind(F&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::Config;
}

SampleCloud cloud(const Domain& d, double T = 1.0, std::uint64_t seed = 1) {
  SamplerConfig cfg;
  cfg.T = T;
  cfg.seed = seed;
  return make_cloud(d, cfg);
}

}  // namespace

TEST_CASE("sample clouds are deterministic and lie in the domain") {
  const Domain ext = Domain::exterior_ball(2, Vec(1.0, 0.0), 1.5);
  const SampleCloud a = cloud(ext), b = cloud(ext), c = cloud(ext, 1.0, 2);
  REQUIRE(a.interior.size() == 4096);
  REQUIRE(a.boundary.size() == 512);
  bool differs = false;
  for (size_t i = 0; i < a.interior.size(); ++i) {
    CHECK(a.interior[i].x == b.interior[i].x);
    CHECK(a.interior[i].t == b.interior[i].t);
    differs = differs || a.interior[i].x != c.interior[i].x;
    CHECK(ext.raw_distance(a.interior[i].x) >= 0.0);
    CHECK((a.interior[i].x - ext.center()).norm() <= 32.0 + 1.5 + 1e-9);
    CHECK(a.interior[i].t >= 0.0);
    CHECK(a.interior[i].t <= 1.0);
  }
  CHECK(differs);
  for (const auto& p : a.boundary) CHECK(std::abs(ext.raw_distance(p.x)) < 1e-12);
  CHECK(cloud(Domain::whole_space(1)).boundary.empty());

  SamplerConfig bad;
  bad.s = 2.0;
  bad.T = 1.0;
  CHECK(error_kind([&] { make_cloud(ext, bad); }) == ErrorKind::Config);
}

TEST_CASE("first worked example: ellipticity, Lyapunov and compactness") {
  const Domain half = Domain::half_space(1);
  const CoefficientSet cs = make_coefficients("radial-power", {}, 1);
  const BoundaryCondition bc = BoundaryCondition::make_neumann(half);
  const SampleCloud cl = cloud(half);
  const ScalarField q = make_scalar_field("quadratic", {}, half);

  const EllipticityReport e = check_ellipticity(cs, half, cl);
  CHECK(e.pass);
  CHECK(e.eta0 == doctest::Approx(1.0));
  CHECK(e.c_min >= 1.0 - 1e-12);

  const LyapunovCertificate l = check_lyapunov(cs, bc, half, q, 3.0, cl);
  CHECK(l.pass);
  CHECK(l.margin > 0.0);
  CHECK(l.boundary_margin == doctest::Approx(0.0));
  CHECK(l.blowup.pass);

  CHECK_FALSE(check_lyapunov(cs, bc, half, q, 0.0, cl).pass);

  const CompactnessCertificate k = check_compactness(cs, half, q, 1.0, 4.0, 1.0, cl);
  CHECK(k.pass);
  CHECK_FALSE(check_compactness(cs, half, q, 1.0, 4.0, 0.0, cl).pass);

  std::ostringstream os;
  l.write(os);
  CHECK(os.str().find("status = pass") != std::string::npos);
}

TEST_CASE("cubic drift admits a compactness certificate; heat does not") {
  const Domain line = Domain::whole_space(1);
  const ScalarField q = make_scalar_field("quadratic", {}, line);
  const SampleCloud cl = cloud(line);
  CHECK(check_compactness(make_coefficients("cubic-drift", {}, 1), line, q, 1.0, 4.0, 1.0, cl).pass);
  CHECK_FALSE(check_compactness(make_coefficients("heat", {}, 1), line, q, 1.0, 4.0, 1.0, cl).pass);
}

TEST_CASE("blow-up detection") {
  const Domain half = Domain::half_space(2);
  CHECK(check_blowup(half, make_scalar_field("quadratic", {}, half), {0.0, 1.0}).pass);
  CHECK_FALSE(check_blowup(half, make_scalar_field("constant", {}, half), {0.0}).pass);
  // sqrt(1 + |x|^2) grows, but only by a factor of about 45 over the radii
  const BlowupCheck s = check_blowup(half, make_scalar_field("sqrt", {}, half), {0.0});
  CHECK(s.radii.size() == 7);
  CHECK(s.pass);
  const Domain ext = Domain::exterior_ball(2, Vec::Zero(), 3.0);
  const BlowupCheck e = check_blowup(ext, make_scalar_field("quadratic", {}, ext), {0.0});
  CHECK(e.radii.front() == 4.0);
}

TEST_CASE("non-symmetric diffusion is a precondition failure") {
  const Domain plane = Domain::whole_space(2);
  CoefficientSet cs = make_coefficients("heat", {}, 2);
  cs.Q = [](double, const Vec&) {
    Mat m = Mat::Identity();
    m(0, 1) = 0.5;
    return m;
  };
  CHECK(error_kind([&] { check_ellipticity(cs, plane, cloud(plane)); }) == ErrorKind::Precondition);
}

TEST_CASE("gradient hypotheses") {
  const Domain half = Domain::half_space(1);
  const CoefficientSet cs = make_coefficients("normal-power", {}, 1);
  const SampleCloud cl = cloud(half);
  const GradientHypothesesReport r = check_gradient_hypotheses(cs, half, 0.5, cl);
  CHECK(r.pass);
  CHECK(r.L4 == 0.0);
  CHECK(r.strip_bounded);
  CHECK(std::isfinite(r.M1));
  // fitted on one cloud, the bounds hold on another
  const auto [fraction, worst] = r.audit(cs, cloud(half, 1.0, 9));
  CHECK(fraction <= 0.01);
  CHECK(worst <= 1e-3 * (1.0 + r.L1 + r.L2 + r.L3));  // sampled sups, not exact ones

  CoefficientSet bare = cs;
  bare.Jb = nullptr;
  CHECK(error_kind([&] { check_gradient_hypotheses(bare, half, 0.5, cl); }) == ErrorKind::Capability);

  // unbounded coefficients in the boundary strip
  const CoefficientSet e61 = make_coefficients("radial-power", {}, 2);
  const Domain half2 = Domain::half_space(2);
  CHECK_FALSE(check_gradient_hypotheses(e61, half2, 0.5, cloud(half2)).strip_bounded);
}

TEST_CASE("gauge certificates") {
  const Domain half = Domain::half_space(1);
  const CoefficientSet heat = make_coefficients("heat", {}, 1);
  const SampleCloud cl = cloud(half);
  const ScalarField one = make_scalar_field("constant", {}, half);

  const GaugeCertificate g = check_gauge(heat, BoundaryCondition::make_neumann(half), half, one, 0.0, cl);
  CHECK(g.pass);
  CHECK(g.M == doctest::Approx(1.0));

  // a negative Robin coefficient needs a non-constant gauge
  const BoundaryCondition robin = BoundaryCondition::make_robin(half, -0.2);
  CHECK_FALSE(check_gauge(heat, robin, half, one, 1.0, cl).pass);
  const ScalarField zeta = make_scalar_field("zeta-gauge", {{"sigma", 0.05}, {"delta", 0.5}}, half);
  const GaugeCertificate z = check_gauge(heat, robin, half, zeta, 0.5, cl);
  CHECK(z.pass);
  CHECK(z.M >= 1.0);
  CHECK(std::isfinite(z.M));
}

TEST_CASE("Robin gauge") {
  const Domain half = Domain::half_space(1);
  const CoefficientSet heat = make_coefficients("heat", {}, 1);
  const SampleCloud cl = cloud(half);
  const RobinGauge g = build_robin_gauge(heat, BoundaryCondition::make_robin(half, -0.2), half, 2.0, cl);
  CHECK(g.pass);
  CHECK(g.g == doctest::Approx(0.2));
  CHECK(g.support_ok);
  CHECK(g.trace_error < 1e-12);
  CHECK(g.eval(point(5.0)).value == 0.0);

  const CoefficientSet n = robin_to_neumann(heat, g, half);
  CHECK(n.b(0.0, point(0.0))[0] == doctest::Approx(-0.4));
  CHECK(n.b(0.0, point(3.0))[0] == 0.0);
  CHECK(n.c0 <= heat.c0);

  CHECK(error_kind([&] { build_robin_gauge(heat, BoundaryCondition::make_dirichlet(), half, 2.0, cl); }) ==
        ErrorKind::Precondition);
  const Domain ext = Domain::exterior_ball(2, Vec::Zero(), 1.0);
  CHECK(error_kind([&] {
          build_robin_gauge(make_coefficients("heat", {}, 2), BoundaryCondition::make_neumann(ext), ext, 2.0,
                            cloud(ext));
        }) == ErrorKind::Capability);
}
