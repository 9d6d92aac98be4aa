#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "parevo/fields.hpp"

#include <cmath>
#include <random>

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

Domain domain_for(const std::string& name, int dim) {
  if (name == "example-exterior") return Domain::exterior_ball(2, Vec::Zero(), 1.0);
  if (name == "radial-power" || name == "normal-power") return Domain::half_space(dim);
  return Domain::whole_space(dim);
}

}  // namespace

TEST_CASE("catalog Jacobians agree with finite differences (property)") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-2.5, 2.5);
  const double e = 1e-6;
  for (const auto& name : coefficient_catalog()) {
    for (int dim : {1, 2}) {
      if (name == "example-exterior" && dim == 1) continue;
      CAPTURE(name);
      CAPTURE(dim);
      const Domain dom = domain_for(name, dim);
      const CoefficientSet cs = make_coefficients(name, {}, dim);
      REQUIRE(cs.has_jacobians());
      int n = 0;
      while (n < 25) {
        Vec x = dim == 2 ? Vec(U(rng), U(rng)) : point(U(rng));
        if (dom.kind() == DomainKind::HalfSpace) x[dim - 1] = std::abs(x[dim - 1]) + 0.1;
        if (dom.kind() == DomainKind::ExteriorBall && x.norm() < 1.1) continue;
        const double t = 0.3;
        const auto dQ = cs.dQ(t, x);
        const Mat Jb = cs.Jb(t, x);
        const Vec gc = cs.grad_c(t, x);
        for (int k = 0; k < dim; ++k) {
          Vec dx = Vec::Zero();
          dx[k] = e;
          const Mat fdQ = (cs.Q(t, x + dx) - cs.Q(t, x - dx)) / (2 * e);
          const Vec fdb = (cs.b(t, x + dx) - cs.b(t, x - dx)) / (2 * e);
          const double fdc = (cs.c(t, x + dx) - cs.c(t, x - dx)) / (2 * e);
          CHECK((dQ[k] - fdQ).norm() <= 1e-5 * (1.0 + fdQ.norm()));
          CHECK((Jb.col(k) - fdb).norm() <= 1e-5 * (1.0 + fdb.norm()));
          CHECK(std::abs(gc[k] - fdc) <= 1e-5 * (1.0 + std::abs(fdc)));
        }
        CHECK(cs.c(t, x) >= cs.c0 - 1e-12);
        ++n;
      }
    }
  }
}

TEST_CASE("one-dimensional entries keep unused components zero") {
  const CoefficientSet cs = make_coefficients("radial-power", {}, 1);
  const Vec x(1.5, 7.0);  // garbage in the unused slot
  CHECK(cs.b(0.0, x)[1] == 0.0);
  CHECK(cs.Q(0.0, x)(1, 1) == 0.0);
  CHECK(cs.Q(0.0, x)(0, 0) == doctest::Approx(1.0));  // r = 0
  CHECK(cs.b(0.0, x)[0] == doctest::Approx(-1.5 * (1.0 + 2.25)));
}

TEST_CASE("catalog errors") {
  CHECK(error_kind([] { make_coefficients("heta", {}, 1); }) == ErrorKind::Config);
  CHECK(error_kind([] { make_coefficients("heat", {{"alpha", 1.0}}, 1); }) == ErrorKind::Config);
  CHECK(error_kind([] { make_coefficients("radial-power", {{"r", 3.0}, {"p", 1.0}, {"m", 1.0}}, 1); }) ==
        ErrorKind::Config);
  CHECK(error_kind([] { make_scalar_field("quadric", {}, Domain::whole_space(1)); }) == ErrorKind::Config);
  CHECK(error_kind([] { make_scalar_field("zeta-gauge", {}, Domain::whole_space(1)); }) == ErrorKind::Capability);
}

TEST_CASE("scalar field jets agree with finite differences") {
  const Domain half = Domain::half_space(2);
  const double e = 1e-5;
  for (const auto& name : scalar_field_catalog()) {
    CAPTURE(name);
    const ScalarField f = make_scalar_field(name, {}, half);
    for (const Vec& x : {Vec(0.3, 0.05), Vec(-1.0, 0.2), Vec(2.0, 1.5)}) {
      const Jet j = f(0.0, x);
      for (int k = 0; k < 2; ++k) {
        Vec dx = Vec::Zero();
        dx[k] = e;
        const Jet jp = f(0.0, x + dx), jm = f(0.0, x - dx);
        CHECK(j.grad[k] == doctest::Approx((jp.value - jm.value) / (2 * e)).epsilon(1e-5).scale(1.0));
        for (int l = 0; l < 2; ++l)
          CHECK(j.hess(l, k) == doctest::Approx((jp.grad[l] - jm.grad[l]) / (2 * e)).epsilon(1e-4).scale(1.0));
      }
    }
  }
}

TEST_CASE("differential action on a quadratic") {
  // OU: A(1 + x^2) = 2 a - 2 k x^2 - c (1 + x^2)
  const CoefficientSet cs = make_coefficients("ou", {{"a", 1.0}, {"k", 1.0}, {"c", 0.5}}, 1);
  const ScalarField q = make_scalar_field("quadratic", {}, Domain::whole_space(1));
  for (double x : {-2.0, 0.0, 1.5})
    CHECK(differential_action(cs, 0.0, q, point(x)) == doctest::Approx(2.0 - 2.0 * x * x - 0.5 * (1.0 + x * x)));
}

TEST_CASE("orientation normalization") {
  const Domain half = Domain::half_space(1);
  const auto inward = BoundaryCondition::make_oblique([](double, const Vec&) { return point(1.0); },
                                                      [](double, const Vec&) { return 0.3; });
  const BoundaryCondition n = normalize_orientation(inward, half);
  CHECK(n.beta(0.0, point(0.0))[0] == doctest::Approx(-1.0));
  CHECK(n.gamma(0.0, point(0.0)) == doctest::Approx(-0.3));

  const Domain ext = Domain::exterior_ball(2, Vec::Zero(), 1.0);
  const auto tangent = BoundaryCondition::make_oblique(
      [](double, const Vec& x) { return Vec(Vec(-x[1], x[0]).normalized()); }, [](double, const Vec&) { return 0.0; });
  CHECK(error_kind([&] { normalize_orientation(tangent, ext); }) == ErrorKind::Precondition);

  const auto mixed = BoundaryCondition::make_oblique([](double, const Vec& x) { return Vec(x[1] > 0 ? -x : x); },
                                                     [](double, const Vec&) { return 0.0; });
  CHECK(error_kind([&] { normalize_orientation(mixed, ext); }) == ErrorKind::Config);

  const auto long_beta = BoundaryCondition::make_oblique([](double, const Vec&) { return point(-2.0); },
                                                         [](double, const Vec&) { return 0.0; });
  CHECK_THROWS_AS(normalize_orientation(long_beta, half), Error);

  const BoundaryCondition d = normalize_orientation(BoundaryCondition::make_dirichlet(), half);
  CHECK(d.dirichlet());
}

TEST_CASE("truncated operator blends to the Laplacian outside B_2n") {
  const Domain half = Domain::half_space(2);
  const CoefficientSet cs = make_coefficients("radial-power", {}, 2);
  const auto tilted = BoundaryCondition::make_oblique([](double, const Vec&) { return Vec(Vec(0.6, -0.8)); },
                                                      [](double, const Vec&) { return 0.5; });
  const auto [tc, tb] = truncate_operator(cs, tilted, make_schedule(half, 2));
  const Vec inside(0.5, 0.5), outside(5.0, 1.0);
  CHECK((tc.Q(0.0, inside) - cs.Q(0.0, inside)).norm() < 1e-14);
  CHECK((tc.b(0.0, inside) - cs.b(0.0, inside)).norm() < 1e-14);
  CHECK((tc.Q(0.0, outside) - Mat::Identity()).norm() < 1e-14);
  CHECK(tc.b(0.0, outside).norm() < 1e-14);
  CHECK(tc.c(0.0, outside) == 0.0);
  CHECK((tb.beta(0.0, Vec(5.0, 0.0)) - Vec(0.0, -1.0)).norm() < 1e-14);
  CHECK(tb.gamma(0.0, Vec(5.0, 0.0)) == 0.0);
  CHECK(tb.beta(0.0, Vec(3.0, 0.0)).norm() == doctest::Approx(1.0));
}

TEST_CASE("test-function support checks") {
  const Domain half = Domain::half_space(1);
  TestFunction ok{point(2.0), 1.0, 1.0, 1};
  CHECK_NOTHROW(ok.check_support(half));
  TestFunction touching{point(0.5), 1.0, 1.0, 1};
  CHECK(error_kind([&] { touching.check_support(half); }) == ErrorKind::Precondition);
  CHECK(ok(point(2.0)) == doctest::Approx(1.0));
  CHECK(ok(point(3.0)) == 0.0);
}

TEST_CASE("boundary action") {
  const Domain half = Domain::half_space(1);
  const BoundaryCondition robin = BoundaryCondition::make_robin(half, 0.5);
  Jet j;
  j.value = 2.0;
  j.grad = point(3.0);
  CHECK(boundary_action(robin, 0.0, j, point(0.0)) == doctest::Approx(-3.0 + 1.0));
  CHECK(boundary_action(BoundaryCondition::make_dirichlet(), 0.0, j, point(0.0)) == doctest::Approx(2.0));
}
