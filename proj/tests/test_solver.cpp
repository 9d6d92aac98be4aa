#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "parevo/solver.hpp"

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

SolveRequest heat_request(const Domain& d, BoundaryCondition bc, InitialData f, double t = 1.0) {
  SolveRequest r;
  r.coeffs = make_coefficients("heat", {}, d.dim());
  r.bc = std::move(bc);
  r.domain = d;
  r.t = t;
  r.f = std::move(f);
  return r;
}

double window_error(const DiscreteField& u, const Window& K, const std::function<double(double)>& exact) {
  double e = 0.0;
  for (int k : u.grid->window_nodes(K)) e = std::max(e, std::abs(u.values[k] - exact(u.grid->node(k)[0])));
  return e;
}

// Whole-line heat from exp(-x^2).
double gauss_exact(double t, double x) { return std::exp(-x * x / (1.0 + 4.0 * t)) / std::sqrt(1.0 + 4.0 * t); }

}  // namespace

TEST_CASE("grid nodes, tags and quadrature weights") {
  const GridPtr g = Grid::build(truncate(Domain::half_space(1), 2.0), 0.5);
  REQUIRE(g->size() == 5);
  CHECK(g->tag(0) == BoundaryTag::Physical);
  CHECK(g->tag(2) == BoundaryTag::Interior);
  CHECK(g->tag(4) == BoundaryTag::Artificial);
  CHECK(g->measure() == doctest::Approx(2.0));

  const GridPtr sq = Grid::build(truncate(Domain::half_space(2), 2.0), 0.25);
  CHECK(sq->measure() == doctest::Approx(sq->truncation().measure()));
  CHECK(sq->tag(sq->index(3, 0)) == BoundaryTag::Physical);
  CHECK(sq->tag(sq->index(0, 0)) == BoundaryTag::Artificial);  // corner

  const GridPtr polar = Grid::build(truncate(Domain::exterior_ball(2, Vec::Zero(), 1.0), 4.0), 1.0 / 32.0);
  CHECK(polar->kind() == GridKind::Polar);
  CHECK(polar->periodic(1));
  CHECK(polar->measure() == doctest::Approx(std::numbers::pi * 15.0).epsilon(1e-3));
  for (int j = 0; j < polar->count(1); ++j) CHECK(polar->node(polar->index(0, j)).norm() == doctest::Approx(1.0));

  CHECK(error_kind([] { Grid::build(truncate(Domain::whole_space(1), 2.0), 0.0); }) == ErrorKind::Config);
}

TEST_CASE("interpolation is exact on cubics, gradients on quadratics") {
  const GridPtr g = Grid::build(truncate(Domain::whole_space(2), 2.0), 0.25);
  auto cubic = [](const Vec& x) { return x[0] * x[0] * x[0] - 2.0 * x[0] * x[1] + x[1] * x[1] * x[1] + 1.0; };
  const DiscreteField u = DiscreteField::sample(g, cubic);
  for (const Vec& x : {Vec(0.1, 0.3), Vec(-1.9, 1.7), Vec(1.13, -0.77)})
    CHECK(u.interpolate(x) == doctest::Approx(cubic(x)).epsilon(1e-12));

  auto quad = [](const Vec& x) { return x[0] * x[0] + 3.0 * x[0] * x[1] - x[1]; };
  const DiscreteField q = DiscreteField::sample(g, quad);
  for (int k = 0; k < g->size(); ++k) {
    const Vec x = g->node(k);
    CHECK((q.gradient(k) - Vec(2.0 * x[0] + 3.0 * x[1], 3.0 * x[0] - 1.0)).norm() < 1e-10);
  }

  const GridPtr polar = Grid::build(truncate(Domain::exterior_ball(2, Vec::Zero(), 1.0), 3.0), 1.0 / 64.0, 0.01);
  auto lin = [](const Vec& x) { return 2.0 * x[0] - x[1]; };
  const DiscreteField p = DiscreteField::sample(polar, lin);
  CHECK(p.interpolate(Vec(1.5, -0.4)) == doctest::Approx(lin(Vec(1.5, -0.4))).epsilon(1e-6));
  for (int k : {polar->index(10, 7), polar->index(0, 100)}) CHECK((p.gradient(k) - Vec(2.0, -1.0)).norm() < 1e-3);
}

TEST_CASE("Dirichlet half-line heat reproduces the erf profile") {
  const Domain half = Domain::half_space(1);
  SolveRequest r = heat_request(half, BoundaryCondition::make_dirichlet(), [](const Vec&) { return 1.0; });
  r.R = 12.0;
  const DiscreteField u = solve_cauchy(r);
  const Window K{point(0.0), point(4.0)};
  // the datum is discontinuous at the corner, so the error is dominated by the start-up
  CHECK(window_error(u, K, [](double x) { return oracle::erf_profile(1.0, 1.0, x); }) <= 2e-3);
}

TEST_CASE("Neumann data preserves constants") {
  const Domain half = Domain::half_space(1);
  SolveRequest r = heat_request(half, BoundaryCondition::make_neumann(half), [](const Vec&) { return 1.0; });
  r.R = 12.0;
  const DiscreteField u = solve_cauchy(r);
  for (int k : u.grid->window_nodes(Window{point(0.0), point(4.0)})) CHECK(u.values[k] == doctest::Approx(1.0).epsilon(1e-6));

  const Domain ext = Domain::exterior_ball(2, Vec::Zero(), 1.0);
  SolveRequest p = heat_request(ext, BoundaryCondition::make_neumann(ext), [](const Vec&) { return 1.0; }, 0.2);
  p.R = 8.0;
  p.h = 1.0 / 16.0;
  p.scheme.dt = 0.01;
  const DiscreteField v = solve_cauchy(p);
  for (int k : v.grid->window_nodes(Window{Vec(1.0, 0.0), Vec(3.0, 7.0)}))
    CHECK(v.values[k] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("second-order convergence in time and space") {
  const Domain line = Domain::whole_space(1);
  const Window K{point(-3.0), point(3.0)};
  auto f = [](const Vec& x) { return std::exp(-x[0] * x[0]); };
  auto exact = [](double x) { return gauss_exact(1.0, x); };

  std::vector<double> err_dt;
  for (double dt : {0.1, 0.05, 0.025}) {
    SolveRequest r = heat_request(line, BoundaryCondition::make_dirichlet(), f);
    r.h = 1.0 / 256.0;
    r.scheme.dt = dt;
    err_dt.push_back(window_error(solve_cauchy(r), K, exact));
  }
  CHECK(std::log2(err_dt[0] / err_dt[1]) >= 1.9);
  CHECK(std::log2(err_dt[1] / err_dt[2]) >= 1.9);

  std::vector<double> err_h;
  for (double h : {0.2, 0.1, 0.05}) {
    SolveRequest r = heat_request(line, BoundaryCondition::make_dirichlet(), f);
    r.h = h;
    r.scheme.dt = 1e-3;
    err_h.push_back(window_error(solve_cauchy(r), K, exact));
  }
  CHECK(std::log2(err_h[0] / err_h[1]) >= 1.9);
  CHECK(std::log2(err_h[1] / err_h[2]) >= 1.9);
}

TEST_CASE("scheme configuration and failure modes") {
  SchemeConfig s;
  s.rannacher = 3;
  CHECK(error_kind([&] { s.validate(); }) == ErrorKind::Config);
  s.rannacher = 2;
  s.theta = 1.5;
  CHECK(error_kind([&] { s.validate(); }) == ErrorKind::Config);

  const Domain line = Domain::whole_space(1);
  SolveRequest r = heat_request(line, BoundaryCondition::make_dirichlet(), [](const Vec&) { return 1.0; });
  r.coeffs = make_coefficients("heat", {{"c", -50.0}}, 1);
  r.h = 1.0 / 16.0;
  r.scheme.dt = 0.01;
  CHECK(error_kind([&] { solve_cauchy(r); }) == ErrorKind::Numerical);

  SolveRequest back = heat_request(line, BoundaryCondition::make_dirichlet(), [](const Vec&) { return 1.0; });
  back.s = 1.0;
  back.t = 0.5;
  CHECK(error_kind([&] { solve_cauchy(back); }) == ErrorKind::Precondition);
}

TEST_CASE("refinement loop") {
  const Domain line = Domain::whole_space(1);
  SolveRequest r = heat_request(line, BoundaryCondition::make_dirichlet(), [](const Vec& x) { return std::exp(-x[0] * x[0]); }, 0.5);
  r.h = 1.0 / 8.0;
  r.scheme.dt = 0.02;
  r.R = 6.0;
  const Window K{point(-2.0), point(2.0)};

  const Refinement ok = refine_until(r, K, 1e-3, 6);
  CHECK(ok.converged);
  CHECK(ok.log.size() >= 2);
  CHECK(std::isnan(ok.log.front().difference));
  CHECK(ok.log.back().difference <= 1e-3);

  // a constant datum feels the artificial boundary, so refinement keeps changing the answer
  SolveRequest flat = r;
  flat.f = [](const Vec&) { return 1.0; };
  CHECK(error_kind([&] { refine_until(flat, K, 1e-5, 1); }) == ErrorKind::Numerical);
  const Refinement soft = refine_until(flat, K, 1e-5, 1, false);
  CHECK_FALSE(soft.converged);

  const Refinement single = refine_until(r, K, 1e-3, 0);
  CHECK(single.log.size() == 1);
}

TEST_CASE("Propagator advances several columns independently") {
  const Domain half = Domain::half_space(1);
  const GridPtr g = Grid::build(truncate(half, 8.0), 1.0 / 32.0);
  SchemeConfig s;
  s.dt = 0.01;
  const Propagator P(make_coefficients("ou", {}, 1), BoundaryCondition::make_neumann(half), g, s);
  Eigen::MatrixXd U(g->size(), 2);
  for (int k = 0; k < g->size(); ++k) {
    U(k, 0) = std::exp(-std::pow(g->node(k)[0] - 2.0, 2));
    U(k, 1) = std::sin(g->node(k)[0]);
  }
  const Eigen::MatrixXd both = P.run(U, 0.0, 0.5);
  const Eigen::MatrixXd first = P.run(U.col(0), 0.0, 0.5);
  CHECK((both.col(0) - first.col(0)).cwiseAbs().maxCoeff() < 1e-13);
  CHECK(P.steps(0.0, 0.5) == 50);
}
