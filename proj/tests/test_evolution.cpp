#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "parevo/evolution.hpp"

#include <cmath>

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

EvolutionOperator make_op(const std::string& catalog, const Domain& d, BoundaryCondition bc, double lo, double hi,
                          double R = 8.0, double h = 1.0 / 32.0, double dt = 0.01, bool implicit = false) {
  SchemeConfig sc;
  sc.dt = dt;
  if (implicit) {
    sc.theta = 1.0;
    sc.rannacher = 0;
  }
  RefinementPolicy p;
  p.R = R;
  p.h = h;
  p.window = Window{point(lo), point(hi)};
  return EvolutionOperator(make_coefficients(catalog, {}, d.dim()), std::move(bc), d, sc, p);
}

const InitialData bump = [](const Vec& x) { return std::exp(-4.0 * (x[0] - 1.5) * (x[0] - 1.5)); };

}  // namespace

TEST_CASE("G(s, s) is the identity") {
  const Domain half = Domain::half_space(1);
  const EvolutionOperator G = make_op("ou", half, BoundaryCondition::make_neumann(half), 0.0, 4.0);
  const DiscreteField f = DiscreteField::sample(G.grid(), bump);
  const DiscreteField u = G.apply(0.3, 0.3, bump);
  CHECK((u.values - f.values).cwiseAbs().maxCoeff() == 0.0);
  CHECK(error_kind([&] { G.apply(0.1, 0.3, bump); }) == ErrorKind::Precondition);
}

TEST_CASE("evolution law") {
  const Domain half = Domain::half_space(1);
  SUBCASE("implicit Euler on a 64-node grid composes exactly at step boundaries") {
    const EvolutionOperator G =
        make_op("radial-power", half, BoundaryCondition::make_neumann(half), 0.0, 3.0, 4.0, 4.0 / 63.0, 0.01, true);
    REQUIRE(G.grid()->size() == 64);
    CHECK(evolution_law_residual(G, 0.0, 0.3, 0.7, bump) < 1e-12);
  }
  SUBCASE("Crank-Nicolson with restarts agrees to discretization accuracy") {
    const EvolutionOperator G = make_op("radial-power", half, BoundaryCondition::make_neumann(half), 0.0, 3.0);
    CHECK(evolution_law_residual(G, 0.0, 0.3, 0.7, bump) < 1e-3);
  }
  SUBCASE("time-dependent coefficients") {
    SchemeConfig sc;
    sc.dt = 0.005;
    RefinementPolicy p;
    p.h = 1.0 / 32.0;
    p.window = Window{point(0.0), point(3.0)};
    const EvolutionOperator G(make_coefficients("radial-power", {{"omega_amp", 0.5}}, 1),
                              BoundaryCondition::make_neumann(half), half, sc, p);
    CHECK(evolution_law_residual(G, 0.0, 0.4, 1.0, bump) < 1e-3);
  }
}

TEST_CASE("kernel mass equals G 1 and respects the contraction bound") {
  const Domain half = Domain::half_space(1);
  const EvolutionOperator G = make_op("radial-power", half, BoundaryCondition::make_neumann(half), 0.0, 3.0);
  const std::vector<Vec> probes = {point(0.0), point(0.5), point(2.0)};
  const KernelEstimate K = estimate_kernel(G, 0.5, 0.0, probes);
  const DiscreteField one = G.apply(0.5, 0.0, [](const Vec&) { return 1.0; });
  for (size_t i = 0; i < probes.size(); ++i) {
    CHECK(K.mass[i] == doctest::Approx(one.values[K.rows[i]]).epsilon(1e-8));
    CHECK(K.mass[i] <= K.mass_bound + 2e-3);
  }
  CHECK(K.mass_bound == doctest::Approx(std::exp(-0.5)));
  CHECK(K.min_value >= -1e-10);
  CHECK(error_kind([&] { estimate_kernel(G, 0.0, 0.0, probes); }) == ErrorKind::Precondition);
}

TEST_CASE("heat kernel on the line: oracle and symmetry") {
  const Domain line = Domain::whole_space(1);
  const EvolutionOperator G = make_op("heat", line, BoundaryCondition::make_dirichlet(), -4.0, 4.0);
  const KernelEstimate K = estimate_kernel(G, 1.0, 0.0, {point(0.0), point(1.0)});
  const int n0 = G.nearest_node(point(0.0)), n1 = G.nearest_node(point(1.0));
  CHECK(K.value(0, n1) == doctest::Approx(K.value(1, n0)).epsilon(1e-6));
  CHECK(K.value(0, n1) == doctest::Approx(oracle::heat_kernel(1.0, 1.0, 1.0)).epsilon(1e-3));
  CHECK(K.mass[0] == doctest::Approx(std::erf(4.0)).epsilon(1e-3));  // Dirichlet truncation at R = 8
}

TEST_CASE("tightness profiles decrease in the radius") {
  const Domain line = Domain::whole_space(1);
  const EvolutionOperator G = make_op("cubic-drift", line, BoundaryCondition::make_dirichlet(), -4.0, 4.0);
  const auto rows = tightness_profile(G, 1.0, 0.0, {point(-4.0), point(0.0), point(4.0)}, {0.5, 1.0, 2.0, 3.0});
  REQUIRE(rows.size() == 4);
  for (size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].sup_tail <= rows[i - 1].sup_tail + 1e-14);
  CHECK(rows.back().sup_tail <= 0.05);
}

TEST_CASE("comparison ODE against the closed-form Riccati solution") {
  for (double y0 : {0.0, 1.0, 5.0, 50.0})
    for (double tau : {0.1, 1.0, 3.0}) CHECK(comparison_ode(y0, tau, 1.0, 4.0, 1.0) == doctest::Approx(oracle::riccati(y0, tau, 1.0, 4.0)).epsilon(1e-8));
  CHECK(comparison_ode(2.0, 0.0, 1.0, 4.0, 1.0) == 2.0);
}

TEST_CASE("Lyapunov moments") {
  const Domain line = Domain::whole_space(1);
  const EvolutionOperator G = make_op("cubic-drift", line, BoundaryCondition::make_dirichlet(), -4.0, 4.0, 12.0);
  const ScalarField psi = make_scalar_field("quadratic", {}, line);
  SamplerConfig cfg;
  const CompactnessCertificate cert = check_compactness(G.coefficients(), line, psi, 1.0, 4.0, 1.0, make_cloud(line, cfg));
  REQUIRE(cert.pass);
  const MomentReport m = lyapunov_moment(G, 1.0, 0.0, psi, 1.0, 4.0, 1.0, cert, {point(-3.0), point(0.0), point(3.0)});
  CHECK(m.worst_excess <= 1e-3);
  CHECK(m.holder_ok);

  CompactnessCertificate failed = cert;
  failed.pass = false;
  CHECK(error_kind([&] { lyapunov_moment(G, 1.0, 0.0, psi, 1.0, 4.0, 1.0, failed, {point(0.0)}); }) ==
        ErrorKind::Precondition);
}

TEST_CASE("integral identity and interchange") {
  const Domain half = Domain::half_space(1);
  const EvolutionOperator G = make_op("ou", half, BoundaryCondition::make_neumann(half), 0.0, 4.0, 8.0, 1.0 / 32.0, 0.005);
  const TestFunction f{point(2.0), 1.0, 1.0, 1};
  CHECK(integral_identity_residual(G, 1.0, 0.2, 0.6, f) <= 5e-3);
  CHECK(error_kind([&] { integral_identity_residual(G, 1.0, 0.2, 0.6, f, 4); }) == ErrorKind::Config);

  auto family = [](double r, const Vec& x) { return std::exp(-(x[0] - r) * (x[0] - r)); };
  CHECK(interchange_discrepancy(G, 1.0, 0.0, family, 1.0, 3.0) <= 1e-10);
}

TEST_CASE("refined operators halve h and dt") {
  const Domain line = Domain::whole_space(1);
  const EvolutionOperator G = make_op("heat", line, BoundaryCondition::make_dirichlet(), -2.0, 2.0);
  const EvolutionOperator F = G.refined(2);
  CHECK(F.policy().h == doctest::Approx(G.policy().h / 4.0));
  CHECK(F.scheme().dt == doctest::Approx(G.scheme().dt / 4.0));
  const DiscreteField a = G.apply(0.5, 0.0, bump), b = F.apply(0.5, 0.0, bump);
  double e = 0.0;
  for (int k : G.window_nodes()) e = std::max(e, std::abs(a.values[k] - b.interpolate(a.grid->node(k))));
  CHECK(e <= 1e-3);
}
