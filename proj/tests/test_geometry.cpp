#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "parevo/geometry.hpp"

#include <cmath>
#include <random>

using namespace parevo;

namespace {

const double kPi = std::acos(-1.0);

void require_kind(ErrorKind kind, const std::function<void()>& fn) {
  try {
    fn();
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == kind);
  }
}

}  // namespace

TEST_CASE("distances and normals of the model domains") {
  const Domain half = Domain::half_space(2);
  CHECK(signed_distance(half, Vec(3.0, 2.5)) == doctest::Approx(2.5));
  CHECK((outward_normal(half, Vec(1.0, 0.0)) - Vec(0.0, -1.0)).norm() < 1e-15);
  CHECK((half.projection(Vec(1.0, 4.0)) - Vec(1.0, 0.0)).norm() < 1e-15);

  const Domain ext = Domain::exterior_ball(2, Vec::Zero(), 1.0);
  CHECK(signed_distance(ext, Vec(2.0, 0.0)) == doctest::Approx(1.0));
  CHECK((outward_normal(ext, Vec(1.0, 0.0)) - Vec(-1.0, 0.0)).norm() < 1e-15);
  CHECK_FALSE(ext.convex());

  const Domain line = Domain::whole_space(1);
  CHECK(signed_distance(line, point(5.0)) == kNoBoundary);
  require_kind(ErrorKind::Capability, [&] { line.projection(point(0.0)); });
  require_kind(ErrorKind::Domain, [&] { signed_distance(ext, Vec(0.5, 0.0)); });
  require_kind(ErrorKind::Config, [] { Domain::exterior_ball(1, Vec::Zero(), 1.0); });
  require_kind(ErrorKind::Precondition, [&] { outward_normal(half, Vec(0.0, 1.0)); });
}

TEST_CASE("distance jet matches finite differences (property)") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-3.0, 3.0);
  const Domain ext = Domain::exterior_ball(2, Vec(0.5, -0.25), 1.0);
  const double e = 1e-5;
  int checked = 0;
  while (checked < 100) {
    const Vec x(U(rng), U(rng));
    if (ext.raw_distance(x) < 0.1) continue;
    const Jet j = ext.distance_jet(x);
    for (int a = 0; a < 2; ++a) {
      Vec dx = Vec::Zero();
      dx[a] = e;
      const double g = (ext.raw_distance(x + dx) - ext.raw_distance(x - dx)) / (2 * e);
      CHECK(j.grad[a] == doctest::Approx(g).epsilon(1e-6));
      const Jet jp = ext.distance_jet(x + dx), jm = ext.distance_jet(x - dx);
      for (int b = 0; b < 2; ++b) CHECK(j.hess(b, a) == doctest::Approx((jp.grad[b] - jm.grad[b]) / (2 * e)).epsilon(1e-5));
    }
    ++checked;
  }
}

TEST_CASE("truncation tags: physical, artificial and corners") {
  const TruncatedDomain td = truncate(Domain::half_space(2), 4.0);
  CHECK(td.classify(Vec(1.0, 0.0)) == BoundaryTag::Physical);
  CHECK(td.classify(Vec(4.0, 2.0)) == BoundaryTag::Artificial);
  CHECK(td.classify(Vec(4.0, 0.0)) == BoundaryTag::Artificial);
  CHECK(td.classify(Vec(1.0, 1.0)) == BoundaryTag::Interior);

  const TruncatedDomain annulus = truncate(Domain::exterior_ball(2, Vec::Zero(), 1.0), 6.0);
  CHECK(annulus.classify(Vec(1.0, 0.0)) == BoundaryTag::Physical);
  CHECK(annulus.classify(Vec(0.0, 6.0)) == BoundaryTag::Artificial);
  CHECK(annulus.measure() == doctest::Approx(kPi * 35.0));
  CHECK(truncate(Domain::whole_space(1), 3.0).physical_empty());
}

TEST_CASE("boundary samples lie on the boundary near the center") {
  const Domain ext = Domain::exterior_ball(2, Vec::Zero(), 1.0);
  const auto pts = boundary_samples(ext, Vec(1.0, 0.0), 0.5, 40);
  CHECK(pts.size() == 40);
  for (const Vec& p : pts) {
    CHECK(p.norm() == doctest::Approx(1.0));
    CHECK((p - Vec(1.0, 0.0)).norm() <= 0.5 + 1e-12);
  }
  CHECK(boundary_samples(Domain::half_space(1), point(0.0), 1.0, 10).size() == 1);
}

TEST_CASE("chart round trip and the flattening identity (property)") {
  const Domain ext = Domain::exterior_ball(2, Vec::Zero(), 1.0);
  const BoundaryVector nu = [](const Vec& x) { return Vec(-x.normalized()); };
  const BoundaryVector tilted = [](const Vec& x) {
    const Vec n = -x.normalized();
    return Vec((n + 0.5 * Vec(-n[1], n[0])).normalized());
  };

  SUBCASE("beta = nu gives rho = -1") {
    const Chart ch = build_chart(ext, Vec(1.0, 0.0), nu);
    for (const Vec& p : boundary_samples(ext, ch.base_point(), 0.4, 20)) CHECK(ch.rho(p) == doctest::Approx(-1.0));
  }

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (const auto& beta : {nu, tilted}) {
    const Chart ch = build_chart(ext, Vec(std::cos(0.7), std::sin(0.7)), beta);
    int n = 0;
    while (n < 100) {
      const Vec x = ch.base_point() + ch.radius() * Vec(U(rng), U(rng));
      if (!ch.covers(x)) continue;
      CHECK((ch.inverse(ch.forward(x)) - x).norm() < 1e-10);
      ++n;
    }
    for (const Vec& p : boundary_samples(ext, ch.base_point(), 0.9 * ch.radius(), 50)) {
      CHECK(std::abs(ch.forward(p)[1]) < 1e-12);
      CHECK((ch.jacobian(p) * beta(p) - Vec(0.0, ch.rho(p))).norm() < 1e-8);
    }
  }

  const Domain half = Domain::half_space(2);
  const BoundaryVector hb = [](const Vec& x) { return Vec(Vec(0.4 * std::cos(x[0]), -1.0).normalized()); };
  const Chart hc = build_chart(half, Vec::Zero(), hb);
  for (const Vec& p : boundary_samples(half, Vec::Zero(), 0.9, 30))
    CHECK((hc.jacobian(p) * hb(p) - Vec(0.0, hc.rho(p))).norm() < 1e-8);
}

TEST_CASE("tangential beta is rejected") {
  const Domain ext = Domain::exterior_ball(2, Vec::Zero(), 1.0);
  const BoundaryVector tangent = [](const Vec& x) { return Vec(Vec(-x[1], x[0]).normalized()); };
  require_kind(ErrorKind::Precondition, [&] { build_chart(ext, Vec(1.0, 0.0), tangent); });
  require_kind(ErrorKind::Precondition, [&] { build_chart(ext, Vec(2.0, 0.0), tangent); });
}

TEST_CASE("cutoff: plateau, support and derivative scaling") {
  const Cutoff c(1.0, 2.0, false, Vec::Zero(), 2);
  CHECK(c.value(Vec(0.5, 0.5)) == 1.0);
  CHECK(c.value(Vec(2.0, 0.1)) == 0.0);
  double prev = 1.0;
  for (int i = 0; i <= 100; ++i) {
    const double v = c.profile(1.0 + i / 100.0);
    CHECK(v <= prev + 1e-15);
    CHECK(v >= 0.0);
    prev = v;
  }
  // |D^k theta| (r2 - r1)^k does not depend on the scale.
  for (int k = 1; k <= 3; ++k) {
    double m1 = 0.0, m8 = 0.0;
    const Cutoff a(1.0, 2.0, false, Vec::Zero(), 1), b(8.0, 16.0, false, Vec::Zero(), 1);
    for (int i = 0; i <= 2000; ++i) {
      m1 = std::max(m1, std::abs(a.profile(1.0 + i / 2000.0, k)));
      m8 = std::max(m8, std::abs(b.profile(8.0 * (1.0 + i / 2000.0), k)) * std::pow(8.0, k));
    }
    CHECK(m8 == doctest::Approx(m1).epsilon(1e-6));
  }
  // jet vs finite differences
  const Vec x(0.9, 0.8);
  const Jet j = c.eval(x);
  const double e = 1e-6;
  CHECK(j.grad[0] == doctest::Approx((c.value(x + Vec(e, 0)) - c.value(x - Vec(e, 0))) / (2 * e)).epsilon(1e-5));
  CHECK(mollifier_cdf(-1.0) == 0.0);
  CHECK(mollifier_cdf(1.0) == doctest::Approx(1.0));
  CHECK(mollifier_cdf(0.0) == doctest::Approx(0.5));
  require_kind(ErrorKind::Precondition, [] { build_cutoff(2.0, 1.0, false); });
}
