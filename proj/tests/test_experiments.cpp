#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "parevo/experiments.hpp"

#include <cmath>
#include <numbers>

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

EvolutionOperator heat_op(const Domain& d, BoundaryCondition bc, Window K, double R = 8.0, double h = 1.0 / 64.0,
                          double dt = 1e-3, const ParamMap& params = {}) {
  SchemeConfig sc;
  sc.dt = dt;
  RefinementPolicy p;
  p.R = R;
  p.h = h;
  p.window = K;
  return EvolutionOperator(make_coefficients("heat", params, d.dim()), std::move(bc), d, sc, p);
}

GradientHypothesesReport hypotheses(const EvolutionOperator& G) {
  SamplerConfig cfg;
  return check_gradient_hypotheses(G.coefficients(), G.domain(), 0.5, make_cloud(G.domain(), cfg));
}

InitialData as_data(const TestFunction& tf) {
  return [tf](const Vec& x) { return tf(x); };
}

const Domain kHalf = Domain::half_space(1);
const Window kHalfWindow{point(0.0), point(4.0)};

}  // namespace

TEST_CASE("kappa is invariant under scaling of the datum") {
  const EvolutionOperator G = heat_op(kHalf, BoundaryCondition::make_neumann(kHalf), kHalfWindow, 8.0, 1.0 / 32.0, 0.01);
  const auto hyp = hypotheses(G);
  const TestFunction f{point(2.0), 1.0, 1.0, 1};
  const GradEstReport a = gradient_constant(G, 0.0, 1.0, {as_data(f)}, &hyp);
  const GradEstReport b =
      gradient_constant(G, 0.0, 1.0, {[f](const Vec& x) { return 1e3 * f(x); }}, &hyp);
  REQUIRE(a.kappa.size() == b.kappa.size());
  for (size_t i = 0; i < a.kappa.size(); ++i) CHECK(std::abs(a.kappa[i] - b.kappa[i]) <= 1e-10 * a.C);
  CHECK(a.times.front() >= 10.0 * G.scheme().dt - 1e-12);
  CHECK(a.times.back() == doctest::Approx(1.0));
}

TEST_CASE("Neumann heat keeps constants flat") {
  // R = 16 keeps the Dirichlet artificial boundary from bending u inside the window
  const EvolutionOperator G = heat_op(kHalf, BoundaryCondition::make_neumann(kHalf), kHalfWindow, 16.0, 1.0 / 32.0, 0.01);
  const auto hyp = hypotheses(G);
  const GradEstReport r = gradient_constant(G, 0.0, 1.0, {[](const Vec&) { return 1.0; }}, &hyp);
  CHECK(r.C <= 1e-8);
}

TEST_CASE("whole-line heat of a smoothed sign approaches 1/sqrt(pi)") {
  const Domain line = Domain::whole_space(1);
  const EvolutionOperator G = heat_op(line, BoundaryCondition::make_dirichlet(), Window{point(-4.0), point(4.0)});
  const auto hyp = hypotheses(G);
  const GradEstReport r = gradient_constant(G, 0.0, 1.0, {smoothed_sign(0.05)}, &hyp);
  CHECK(r.C == doctest::Approx(1.0 / std::sqrt(std::numbers::pi)).epsilon(0.02));
}

TEST_CASE("gradient hypotheses gate the estimate") {
  const EvolutionOperator G = heat_op(kHalf, BoundaryCondition::make_neumann(kHalf), kHalfWindow, 8.0, 1.0 / 32.0, 0.01);
  const InitialData f = smoothed_sign(0.5);
  CHECK(error_kind([&] { gradient_constant(G, 0.0, 1.0, {f}); }) == ErrorKind::Precondition);
  GradientHypothesesReport failed = hypotheses(G);
  failed.pass = false;
  CHECK(error_kind([&] { gradient_constant(G, 0.0, 1.0, {f}, &failed); }) == ErrorKind::Hypothesis);
  const GradEstReport w = gradient_constant(G, 0.0, 1.0, {f}, &failed, true);
  CHECK(w.waived);
  CHECK_FALSE(w.warning.empty());
}

TEST_CASE("batch size and refinement barely move C") {
  SchemeConfig sc;
  sc.dt = 0.005;
  RefinementPolicy p;
  p.h = 1.0 / 32.0;
  p.window = kHalfWindow;
  const EvolutionOperator G(make_coefficients("normal-power", {}, 1), BoundaryCondition::make_neumann(kHalf), kHalf, sc, p);
  const auto hyp = hypotheses(G);
  auto batch = [&](int n) {
    std::vector<InitialData> fs;
    for (const auto& b : random_bumps(G, n, 5, false)) fs.push_back(as_data(b));
    return fs;
  };
  const double c8 = gradient_constant(G, 0.0, 1.0, batch(8), &hyp).C;
  const double c16 = gradient_constant(G, 0.0, 1.0, batch(16), &hyp).C;
  CHECK(c16 >= c8 - 1e-12);  // the first eight bumps are shared
  CHECK(c16 <= 1.1 * c8);
  // kappa peaks at the first sampled time 10 dt, so C settles once dt resolves the start
  const double mid = gradient_constant(G.refined(1), 0.0, 1.0, batch(8), &hyp).C;
  const double fine = gradient_constant(G.refined(2), 0.0, 1.0, batch(8), &hyp).C;
  CHECK(std::abs(fine - mid) <= 0.05 * fine);
}

TEST_CASE("random bumps stay inside the window and off the boundary") {
  const EvolutionOperator G = heat_op(kHalf, BoundaryCondition::make_neumann(kHalf), kHalfWindow, 8.0, 1.0 / 32.0, 0.01);
  const auto a = random_bumps(G, 12, 3), b = random_bumps(G, 12, 3);
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].center == b[i].center);
    CHECK(a[i].center[0] - a[i].radius >= 0.05 - 1e-12);
    CHECK(a[i].amplitude > 0.0);
  }
}

TEST_CASE("long-time decay: preconditions and rate") {
  const Domain line = Domain::whole_space(1);
  const EvolutionOperator G =
      heat_op(line, BoundaryCondition::make_dirichlet(), Window{point(-4.0), point(4.0)}, 16.0, 1.0 / 16.0, 0.02, {{"c", 1.0}});
  CHECK(error_kind([&] { long_time_decay(G, 0.0, smoothed_sign(0.5), 2.0); }) == ErrorKind::Precondition);
  const DecayReport r = long_time_decay(G, 0.0, smoothed_sign(0.5), 6.0);
  CHECK(r.pass);
  CHECK(r.rate >= 0.9);
}

TEST_CASE("Bernstein monitor") {
  const Domain line = Domain::whole_space(1);
  const EvolutionOperator G = heat_op(line, BoundaryCondition::make_dirichlet(), Window{point(-4.0), point(4.0)},
                                      8.0, 1.0 / 32.0, 0.005);
  const TestFunction f{point(0.0), 1.0, 1.0, 1};

  const BernsteinMonitor m = bernstein_monitor(G, 0.0, 1.0, as_data(f), 2.0);
  CHECK(m.pass);
  CHECK(m.min_z >= 0.0);
  CHECK(m.implied_kappa == doctest::Approx(1.0 / std::sqrt(2.0)));

  // A constant datum keeps z = f^2 away from the artificial boundary.
  const EvolutionOperator N = heat_op(kHalf, BoundaryCondition::make_neumann(kHalf), kHalfWindow, 8.0, 1.0 / 32.0, 0.01);
  const BernsteinMonitor c = bernstein_monitor(N, 0.0, 1.0, [](const Vec&) { return 2.0; }, 1.0);
  CHECK(c.pass);
  for (double z : c.max_z) CHECK(z == doctest::Approx(4.0));

  // Far too large a: at the origin z = 10 t u'^2 reaches about 3 ||f||^2.
  CHECK_FALSE(bernstein_monitor(G, 0.0, 1.0, smoothed_sign(0.5), 10.0).pass);
  CHECK(bernstein_monitor(G, 0.0, 1.0, smoothed_sign(0.5), 2.0).pass);

  CHECK(error_kind([&] { bernstein_monitor(G, 0.0, 1.0, as_data(f), 0.0); }) == ErrorKind::Config);
  const Domain ext = Domain::exterior_ball(2, Vec::Zero(), 1.0);
  const EvolutionOperator E = heat_op(ext, BoundaryCondition::make_neumann(ext), Window{Vec(1.0, 0.0), Vec(3.0, 7.0)},
                                      4.0, 1.0 / 8.0, 0.05);
  CHECK(error_kind([&] { bernstein_monitor(E, 0.0, 0.5, [](const Vec&) { return 1.0; }, 1.0); }) ==
        ErrorKind::Precondition);
}

TEST_CASE("flattened boundary condition") {
  SUBCASE("tilted field on the half-plane") {
    const Domain half = Domain::half_space(2);
    const auto beta = [](double, const Vec& x) { return Vec(Vec(0.3 * std::sin(x[0]), -1.0).normalized()); };
    const auto bc = BoundaryCondition::make_oblique(beta, [](double, const Vec&) { return 0.5; });
    const EvolutionOperator G = heat_op(half, bc, Window{Vec(-2.0, 0.0), Vec(2.0, 2.0)}, 4.0, 1.0 / 32.0, 0.01);
    const Chart ch = build_chart(half, Vec::Zero(), [&](const Vec& x) { return beta(0.0, x); });
    const InitialData f = [](const Vec& x) { return std::exp(-(x - Vec(0.0, 0.8)).squaredNorm()); };
    const FlattenReport r = flatten_boundary_check(G, ch, 0.3, 0.0, f);
    CHECK(r.samples > 0);
    CHECK(r.residual <= 5e-3);
  }
  for (double gamma : {0.3, 0.0}) {
    CAPTURE(gamma);
    const Domain ext = Domain::exterior_ball(2, Vec::Zero(), 1.0);
    const auto beta = [](double, const Vec& x) {
      const Vec n = -x.normalized();
      return Vec((n + 0.4 * Vec(-n[1], n[0])).normalized());
    };
    const auto bc = BoundaryCondition::make_oblique(beta, [gamma](double, const Vec&) { return gamma; });
    const EvolutionOperator G = heat_op(ext, bc, Window{Vec(1.0, 0.0), Vec(4.0, 7.0)}, 6.0, 1.0 / 32.0, 0.01);
    const Chart ch = build_chart(ext, Vec(std::cos(0.7), std::sin(0.7)), [&](const Vec& x) { return beta(0.0, x); });
    const InitialData f = [](const Vec& x) { return std::exp(-(x - Vec(1.8, 1.2)).squaredNorm()); };
    const FlattenReport r = flatten_boundary_check(G, ch, 0.3, 0.0, f);
    CHECK(r.residual <= 1e-2);
  }
  const Domain half = Domain::half_space(1);
  const EvolutionOperator D = heat_op(half, BoundaryCondition::make_dirichlet(), kHalfWindow);
  CHECK(error_kind([&] {
          flatten_boundary_check(D, build_chart(half, point(0.0), [](const Vec&) { return point(-1.0); }), 0.3, 0.0,
                                 smoothed_sign(0.5));
        }) == ErrorKind::Precondition);
}
