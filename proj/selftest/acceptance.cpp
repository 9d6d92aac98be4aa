#include "acceptance.hpp"

#include "oracles.hpp"
#include "parevo/certificates.hpp"
#include "parevo/evolution.hpp"
#include "parevo/experiments.hpp"
#include "parevo/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

namespace parevo::selftest {

namespace {

const double kPi = 3.14159265358979323846;

// Collects sub-checks of one criterion.
struct Checks {
  bool pass = true;
  std::ostringstream detail;
  std::ostream* log = nullptr;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    detail << (ok ? "ok   " : "FAIL ") << what << "\n";
    if (log) *log << "    " << (ok ? "ok   " : "FAIL ") << what << std::endl;
  }
};

std::string num(double v, int prec = 3) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

struct OpSpec {
  std::string catalog;
  ParamMap params;
  Domain domain = Domain::whole_space(1);
  BoundaryCondition bc = BoundaryCondition::make_dirichlet();
  double R = 8.0;
  double h = 1.0 / 64.0;
  double dt = 1e-3;
  double theta = 0.5;
  int rannacher = 2;
  Window window;
};

EvolutionOperator make_op(const OpSpec& o) {
  SchemeConfig sc;
  sc.dt = o.dt;
  sc.theta = o.theta;
  sc.rannacher = o.rannacher;
  RefinementPolicy p;
  p.R = o.R;
  p.h = o.h;
  p.window = o.window;
  return EvolutionOperator(make_coefficients(o.catalog, o.params, o.domain.dim()), o.bc, o.domain, sc, p);
}

Window interval(double lo, double hi) { return Window{point(lo), point(hi)}; }

double window_error(const DiscreteField& u, const EvolutionOperator& G, const oracle::Fn& exact) {
  double e = 0.0;
  for (int k : u.grid->window_nodes(G.policy().window))
    e = std::max(e, std::abs(u.values[k] - exact(u.grid->node(k)[0])));
  return e;
}

SampleCloud cloud_for(const Domain& domain, double s, double T, std::uint64_t seed) {
  SamplerConfig cfg;
  cfg.s = s;
  cfg.T = T;
  cfg.seed = seed;
  return make_cloud(domain, cfg);
}

InitialData as_data(const TestFunction& tf) {
  return [tf](const Vec& x) { return tf(x); };
}

Eigen::MatrixXd sample(const Grid& grid, const std::vector<InitialData>& fs) {
  Eigen::MatrixXd F(grid.size(), static_cast<int>(fs.size()));
  for (size_t j = 0; j < fs.size(); ++j)
    for (int k = 0; k < grid.size(); ++k) F(k, static_cast<int>(j)) = fs[j](grid.node(k));
  return F;
}

using Clock = std::chrono::steady_clock;
double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// ---------------------------------------------------------------------------
// 1. Oracle reproduction

void oracle_reproduction(Checks& c, const Options&) {
  const Domain line = Domain::whole_space(1), half = Domain::half_space(1);
  const TestFunction centred{point(0.0), 1.0, 1.0, 1};
  const TestFunction off{point(2.0), 1.0, 1.0, 1};
  const TestFunction shifted{point(0.5), 1.0, 1.0, 1};
  const double tau = 0.5;

  struct Case {
    std::string name;
    OpSpec spec;
    TestFunction f;
    oracle::Fn exact;
  };
  auto fn = [](const TestFunction& tf) { return [tf](double y) { return tf(point(y)); }; };
  std::vector<Case> cases;
  {
    OpSpec o;
    o.catalog = "heat";
    o.domain = line;
    cases.push_back({"whole-line heat vs Gaussian", o, centred,
                     [g = fn(centred), tau](double x) { return oracle::gaussian_convolution(g, 1.0, tau, x); }});
  }
  {
    OpSpec o;
    o.catalog = "heat";
    o.domain = half;
    o.window = interval(0.0, 4.0);
    cases.push_back({"Dirichlet half-line vs images", o, off,
                     [g = fn(off), tau](double x) { return oracle::images_dirichlet(g, 1.0, tau, x); }});
    o.bc = BoundaryCondition::make_neumann(half);
    cases.push_back({"Neumann half-line vs images", o, off,
                     [g = fn(off), tau](double x) { return oracle::images_neumann(g, 1.0, tau, x); }});
  }
  {
    OpSpec o;
    o.catalog = "ou";
    o.domain = line;
    cases.push_back({"OU vs Mehler", o, shifted,
                     [g = fn(shifted), tau](double x) { return oracle::mehler(g, 1.0, 1.0, 0.0, tau, x); }});
  }

  for (const auto& cs : cases) {
    const auto t0 = Clock::now();
    const EvolutionOperator G = make_op(cs.spec);
    const double e0 = window_error(G.apply(tau, 0.0, as_data(cs.f)), G, cs.exact);
    const EvolutionOperator Gf = G.refined(1);
    const double e1 = window_error(Gf.apply(tau, 0.0, as_data(cs.f)), Gf, cs.exact);
    const double secs = since(t0);
    c.check(e0 <= 2e-3, cs.name + ": error " + num(e0) + " <= 2e-3");
    c.check(e1 <= 0.5 * e0, cs.name + ": refined error " + num(e1) + " <= half");
    c.check(secs <= 60.0, cs.name + ": " + num(secs) + " s <= 60 s");
  }
}

// ---------------------------------------------------------------------------
// 2. Contraction and mass

void contraction_and_mass(Checks& c, const Options& opts) {
  namespace fs = std::filesystem;
  std::vector<fs::path> files;
  if (!opts.scenario_dir.empty() && fs::is_directory(opts.scenario_dir))
    for (const auto& e : fs::directory_iterator(opts.scenario_dir))
      if (e.path().extension() == ".scn") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  c.check(!files.empty(), "bundled scenarios found in '" + opts.scenario_dir + "'");

  int used = 0;
  for (const auto& path : files) {
    Scenario sc = load_scenario(path.string());
    if ((sc.boundary.kind == "robin" || sc.boundary.kind == "oblique") && sc.boundary.gamma < 0.0) continue;
    ++used;
    // Implicit Euler keeps the discrete maximum principle exact.
    sc.scheme.theta = 1.0;
    sc.scheme.rannacher = 0;
    const EvolutionOperator G = build_operator(sc, 0);
    const double tau = sc.t - sc.s;
    const double bound = std::exp(-G.coefficients().c0 * tau);

    std::vector<InitialData> fs;
    for (const auto& b : random_bumps(G, 20, opts.seed + used, false)) fs.push_back(as_data(b));
    const Eigen::MatrixXd F = sample(*G.grid(), fs);
    const Eigen::MatrixXd U = G.apply_columns(sc.t, sc.s, F);
    double worst = 0.0;
    for (int j = 0; j < F.cols(); ++j)
      worst = std::max(worst, U.col(j).cwiseAbs().maxCoeff() / (bound * F.col(j).cwiseAbs().maxCoeff()));
    c.check(worst <= 1.0 + 1e-8, sc.name + ": max ||Gf|| / (e^{-c0 tau} ||f||) = " + num(worst, 8));

    const DiscreteField one = G.apply(sc.t, sc.s, [](const Vec&) { return 1.0; });
    c.check(one.sup() <= bound + 2e-3, sc.name + ": mass " + num(one.sup(), 6) + " <= " + num(bound, 6) + " + 2e-3");
  }
  c.check(used >= 3, std::to_string(used) + " scenarios with gamma >= 0");

  // Kernel mass with c = 1 against the images oracle.
  OpSpec o;
  o.catalog = "heat";
  o.params = {{"c", 1.0}};
  o.domain = Domain::half_space(1);
  o.window = interval(0.0, 4.0);
  const EvolutionOperator G = make_op(o);
  const KernelEstimate K = estimate_kernel(G, 1.0, 0.0, {point(1.0)});
  const double expected = std::exp(-1.0) * oracle::erf_profile(1.0, 1.0, 1.0);
  c.check(std::abs(K.mass[0] - expected) <= 2e-3,
          "c=1 Dirichlet kernel mass at x=1: " + num(K.mass[0], 6) + " vs " + num(expected, 6));
  c.check(K.mass[0] <= K.mass_bound + 2e-3, "kernel mass below e^{-c0 tau} + 2e-3");
}

// ---------------------------------------------------------------------------
// 3. Maximum principle, positivity, monotonicity

void maximum_principle(Checks& c, const Options& opts) {
  std::mt19937_64 rng(opts.seed * 7919 + 3);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const std::vector<std::string> catalogs = {"heat", "ou", "cubic-drift", "radial-power"};
  int fails_neg = 0, fails_pos = 0, fails_mono = 0;
  double worst_neg = -1e300, worst_mono = -1e300, worst_pos = 1e300;
  const int scenarios = 50;
  for (int n = 0; n < scenarios; ++n) {
    OpSpec o;
    o.catalog = catalogs[rng() % catalogs.size()];
    if (o.catalog == "heat") o.params = {{"c", U(rng)}, {"a", 0.5 + U(rng)}, {"omega_amp", 0.5 * U(rng)}};
    if (o.catalog == "ou") o.params = {{"k", 0.5 + 1.5 * U(rng)}, {"c", U(rng)}};
    if (o.catalog == "cubic-drift") o.params = {{"k", 0.2 + 0.8 * U(rng)}};
    if (o.catalog == "radial-power") o.params = {{"omega_amp", 0.5 * U(rng)}};
    const bool half = U(rng) < 0.6;
    o.domain = half ? Domain::half_space(1) : Domain::whole_space(1);
    if (half) {
      const int kind = static_cast<int>(rng() % 3);
      o.bc = kind == 0   ? BoundaryCondition::make_dirichlet()
             : kind == 1 ? BoundaryCondition::make_neumann(o.domain)
                         : BoundaryCondition::make_robin(o.domain, U(rng));
    }
    o.R = 6.0;
    o.h = 1.0 / 32.0;
    o.dt = 1e-2;
    o.theta = 1.0;
    o.rannacher = 0;
    o.window = half ? interval(0.0, 3.0) : interval(-3.0, 3.0);
    const EvolutionOperator G = make_op(o);
    const double s = U(rng), tau = 0.1 + 0.4 * U(rng);

    const auto bumps = random_bumps(G, 3, rng(), true);
    const auto signed_bumps = random_bumps(G, 2, rng(), false);
    auto neg = [&](const Vec& x) { return -bumps[0](x) - bumps[1](x); };
    auto pos = [&](const Vec& x) { return bumps[2](x); };
    auto f1 = [&](const Vec& x) { return signed_bumps[0](x) + signed_bumps[1](x); };
    auto f2 = [&](const Vec& x) { return f1(x) + bumps[0](x); };
    const Eigen::MatrixXd F = sample(*G.grid(), {neg, pos, f1, f2});
    const Eigen::MatrixXd V = G.apply_columns(s + tau, s, F);

    const double mneg = V.col(0).maxCoeff();
    worst_neg = std::max(worst_neg, mneg);
    if (mneg > 1e-12) ++fails_neg;
    const double mono = (V.col(2) - V.col(3)).maxCoeff();
    worst_mono = std::max(worst_mono, mono);
    if (mono > 1e-12) ++fails_mono;
    double mpos = 1e300;
    for (int k : G.window_nodes()) {
      if (G.boundary().dirichlet() && G.grid()->tag(k) == BoundaryTag::Physical) continue;
      mpos = std::min(mpos, V(k, 1));
    }
    worst_pos = std::min(worst_pos, mpos);
    if (!(mpos > 0.0)) ++fails_pos;
  }
  c.check(fails_neg == 0, "f <= 0 => u <= 1e-12 on " + std::to_string(scenarios) + " scenarios (max u " +
                              num(worst_neg) + ")");
  c.check(fails_pos == 0, "f >= 0, f != 0 => u > 0 on the window (min u " + num(worst_pos) + ")");
  c.check(fails_mono == 0, "f1 <= f2 => u1 <= u2 + 1e-12 (max u1 - u2 " + num(worst_mono) + ")");
}

// ---------------------------------------------------------------------------
// 4. Evolution law

void evolution_law(Checks& c, const Options&) {
  std::vector<std::pair<std::string, OpSpec>> ops;
  {
    OpSpec o;
    o.catalog = "heat";
    o.params = {{"omega_amp", 0.5}, {"omega_freq", 3.0}};
    ops.push_back({"nonautonomous heat (line)", o});
  }
  {
    OpSpec o;
    o.catalog = "ou";
    o.domain = Domain::half_space(1);
    o.bc = BoundaryCondition::make_neumann(o.domain);
    o.window = interval(0.0, 4.0);
    ops.push_back({"OU (Neumann half-line)", o});
  }
  {
    OpSpec o;
    o.catalog = "radial-power";
    o.params = {{"omega_amp", 0.3}};
    o.domain = Domain::half_space(1);
    o.bc = BoundaryCondition::make_robin(o.domain, 0.5);
    o.window = interval(0.0, 4.0);
    ops.push_back({"radial-power (Robin half-line)", o});
  }
  const std::vector<std::array<double, 3>> triples = {{0.0, 0.25, 0.5}, {0.0, 0.5, 1.0}, {0.2, 0.35, 0.7}};
  const TestFunction f{point(1.5), 1.0, 1.0, 1};
  for (const auto& [name, spec] : ops) {
    const EvolutionOperator G = make_op(spec), Gf = G.refined(1);
    for (const auto& [s, r, t] : triples) {
      const double e0 = evolution_law_residual(G, s, r, t, as_data(f));
      const double e1 = evolution_law_residual(Gf, s, r, t, as_data(f));
      const std::string tag = name + " (" + num(s) + "," + num(r) + "," + num(t) + ")";
      c.check(e0 <= 5e-3, tag + ": residual " + num(e0) + " <= 5e-3");
      c.check(e1 <= 0.5 * e0 || e1 <= 1e-12, tag + ": refined " + num(e1) + " <= half");
    }
  }
}

// ---------------------------------------------------------------------------
// 5. Gradient estimate

void gradient_estimate(Checks& c, const Options& opts) {
  const auto t0 = Clock::now();
  OpSpec o;
  o.catalog = "heat";
  o.domain = Domain::half_space(1);
  o.window = interval(0.0, 4.0);
  const EvolutionOperator G = make_op(o);
  const GradientHypothesesReport hyp =
      check_gradient_hypotheses(G.coefficients(), G.domain(), 0.5, cloud_for(G.domain(), 0.0, 1.0, opts.seed));
  c.check(hyp.pass, "heat gradient hypotheses certified");
  const GradEstReport rep = gradient_constant(G, 0.0, 1.0, {[](const Vec&) { return 1.0; }}, &hyp);
  const double ref = 1.0 / std::sqrt(kPi);
  double worst = 0.0;
  int used = 0;
  for (size_t i = 0; i < rep.times.size(); ++i) {
    if (rep.times[i] < 0.05 - 1e-9) continue;
    ++used;
    worst = std::max(worst, std::abs(rep.kappa[i] / ref - 1.0));
  }
  c.check(used >= 10 && worst <= 0.02, "Dirichlet heat f=1: max |kappa/(1/sqrt(pi)) - 1| = " + num(worst) +
                                           " over " + std::to_string(used) + " times in [0.05, 1]");
  c.check(since(t0) <= 120.0, "runtime " + num(since(t0)) + " s <= 120 s");

  OpSpec e;
  e.catalog = "normal-power";
  e.domain = Domain::half_space(1);
  e.bc = BoundaryCondition::make_neumann(e.domain);
  e.window = interval(0.0, 4.0);
  const EvolutionOperator G2 = make_op(e);
  const GradientHypothesesReport hyp2 =
      check_gradient_hypotheses(G2.coefficients(), G2.domain(), 0.5, cloud_for(G2.domain(), 0.0, 1.0, opts.seed));
  c.check(hyp2.pass, "normal-power gradient hypotheses certified (L2 = " + num(hyp2.L2) + ", L3 = " + num(hyp2.L3) + ")");
  std::vector<InitialData> batch;
  for (const auto& b : random_bumps(G2, 8, opts.seed, false)) batch.push_back(as_data(b));
  const GradEstReport r2 = gradient_constant(G2, 0.0, 1.0, batch, &hyp2);
  bool finite = true;
  for (double k : r2.kappa) finite = finite && std::isfinite(k);
  c.check(finite && r2.max_to_median() <= 3.0,
          "normal-power kappa curve bounded: C = " + num(r2.C) + ", max/median = " + num(r2.max_to_median()));
}

// ---------------------------------------------------------------------------
// 6. Long-time decay

void long_time(Checks& c, const Options&) {
  for (double cval : {0.0, 1.0, 2.0}) {
    OpSpec o;
    o.catalog = "heat";
    o.params = {{"c", cval}};
    o.R = 16.0;
    o.window = interval(-8.0, 8.0);
    const EvolutionOperator G = make_op(o);
    const double horizon = cval > 0.0 ? 5.0 / cval : 5.0;
    const DecayReport d = long_time_decay(G, 0.0, smoothed_sign(0.1), horizon);
    if (cval == 0.0)
      c.check(std::abs(d.rate) <= 0.02, "heat control: rate " + num(d.rate) + " within 0.02 of 0");
    else
      c.check(std::abs(d.rate - cval) <= 0.05 * cval, "c = " + num(cval) + ": rate " + num(d.rate, 5) + " within 5%");
  }
}

// ---------------------------------------------------------------------------
// 7. Compactness and tightness

void tightness(Checks& c, const Options& opts) {
  std::vector<Vec> probes;
  for (int i = -8; i <= 8; ++i) probes.push_back(point(i));
  OpSpec o;
  o.catalog = "cubic-drift";
  o.R = 12.0;
  o.h = 1.0 / 32.0;
  o.window = interval(-8.0, 8.0);
  const EvolutionOperator G = make_op(o);
  const KernelEstimate K1 = estimate_kernel(G, 1.0, 0.0, probes);
  const auto prof = tightness_profile(K1, {1, 2, 3, 4});
  c.check(prof.back().sup_tail <= 0.05, "cubic drift: sup tail beyond n=4 at t-s=1 is " + num(prof.back().sup_tail));

  OpSpec hc = o;
  hc.catalog = "heat";
  const EvolutionOperator H = make_op(hc);
  const auto ctrl = tightness_profile(H, 1.0, 0.0, probes, {4});
  c.check(ctrl.back().sup_tail >= 0.5, "heat control: sup tail beyond n=4 is " + num(ctrl.back().sup_tail) + " >= 0.5");

  const Domain& dom = G.domain();
  const ScalarField psi = make_scalar_field("quadratic", {}, dom);
  const CompactnessCertificate cert =
      check_compactness(G.coefficients(), dom, psi, 1.0, 4.0, 1.0, cloud_for(dom, 0.0, 3.0, opts.seed));
  c.check(cert.pass, "compactness certificate (psi = 1 + x^2, c1 = 1, c2 = 4, eps = 1), margin " + num(cert.margin));
  std::vector<Vec> inner;
  for (int i = -4; i <= 4; ++i) inner.push_back(point(i));
  for (double tau : {1.0, 3.0}) {
    const MomentReport m = lyapunov_moment(G, tau, 0.0, psi, 1.0, 4.0, 1.0, cert, inner);
    c.check(m.worst_excess <= 5e-2, "t-s = " + num(tau) + ": moment - ODE bound <= " + num(m.worst_excess));
    double ode_err = 0.0;
    for (size_t i = 0; i < inner.size(); ++i)
      ode_err = std::max(ode_err, std::abs(m.ode_bound[i] - oracle::riccati(psi(0.0, inner[i]).value, tau, 1.0, 4.0)));
    c.check(ode_err <= 1e-6, "t-s = " + num(tau) + ": RK4 comparison ODE vs closed form " + num(ode_err));
    if (tau == 3.0) c.check(m.sup_moment <= 2.1, "t-s = 3: sup moment " + num(m.sup_moment) + " <= 2.0 + 0.1");
  }
}

// ---------------------------------------------------------------------------
// 8. Gauge equivalences

void gauges(Checks& c, const Options& opts) {
  const Domain half = Domain::half_space(1);
  OpSpec o;
  o.catalog = "heat";
  o.domain = half;
  o.bc = BoundaryCondition::make_robin(half, -0.2);
  o.window = interval(0.0, 4.0);
  o.R = 12.0;
  const EvolutionOperator G = make_op(o);
  const TestFunction f{point(1.5), 1.0, 1.0, 1};
  const double t = 0.5;
  const DiscreteField direct = G.apply(t, 0.0, as_data(f));
  const auto nodes = G.window_nodes();
  auto diff = [&](const DiscreteField& u) {
    double e = 0.0;
    for (int k : nodes) e = std::max(e, std::abs(u.values[k] - direct.interpolate(u.grid->node(k))));
    return e;
  };
  const SampleCloud cloud = cloud_for(half, 0.0, t, opts.seed);

  const ScalarField phi = make_scalar_field("zeta-gauge", {{"sigma", 0.05}, {"delta", 0.5}}, half);
  const double H = 0.5;
  const GaugeCertificate gc = check_gauge(G.coefficients(), G.boundary(), half, phi, H, cloud);
  c.check(gc.pass, "zeta gauge certificate (H = 0.5): margin " + num(gc.margin) + ", boundary " + num(gc.boundary_margin));
  const DiscreteField viag = apply_via_gauge(G, t, 0.0, as_data(f), phi, H, gc);
  const double e1 = diff(viag);
  c.check(e1 <= 5e-3, "gamma = -0.2: phi-gauge vs direct oblique solve " + num(e1));

  const RobinGauge rg = build_robin_gauge(G.coefficients(), G.boundary(), half, 2.0, cloud);
  c.check(rg.pass, "Robin gauge certificate: g = " + num(rg.g) + ", trace error " + num(rg.trace_error));
  const double e2 = diff(apply_robin_via_neumann(G, t, 0.0, as_data(f), rg));
  c.check(e2 <= 5e-3, "Robin via Neumann vs direct Robin " + num(e2));

  double worst = 0.0;
  std::vector<InitialData> fs;
  for (const auto& b : random_bumps(G, 10, opts.seed, false)) fs.push_back(as_data(b));
  const Eigen::MatrixXd F = sample(*G.grid(), fs);
  const Eigen::MatrixXd U = G.apply_columns(t, 0.0, F);
  for (int j = 0; j < F.cols(); ++j)
    worst = std::max(worst, U.col(j).cwiseAbs().maxCoeff() / F.col(j).cwiseAbs().maxCoeff());
  const double bound = gc.M * std::exp(H * t);
  c.check(worst <= bound, "||G f|| / ||f|| = " + num(worst) + " <= M e^{H t} = " + num(bound));
}

// ---------------------------------------------------------------------------
// 9. Appendix suite

void appendix(Checks& c, const Options&) {
  OpSpec o;
  o.catalog = "heat";
  o.params = {{"omega_amp", 0.5}};
  const EvolutionOperator G = make_op(o);
  const TestFunction f{point(0.0), 1.0, 1.0, 1};
  const double r0 = integral_identity_residual(G, 0.5, 0.1, 0.3, f, 9);
  const double r1 = integral_identity_residual(G.refined(1), 0.5, 0.1, 0.3, f, 9);
  c.check(r0 <= 5e-3, "integral identity residual " + num(r0) + " <= 5e-3");
  c.check(r1 <= 0.5 * r0, "refined residual " + num(r1) + " <= half");

  // Chart identity on a tilted oblique field around the unit disc.
  const Domain ext = Domain::exterior_ball(2, Vec::Zero(), 1.0);
  const BoundaryVector beta = [](const Vec& x) {
    const Vec n = -x.normalized();  // outward for the exterior domain
    const Vec tan(-n[1], n[0]);
    return Vec((n + 0.4 * tan).normalized());
  };
  double chart_err = 0.0;
  int samples = 0;
  for (int i = 0; i < 4; ++i) {
    const double a = 0.3 + i * kPi / 2.0;
    const Chart ch = build_chart(ext, Vec(std::cos(a), std::sin(a)), beta);
    for (const Vec& p : boundary_samples(ext, ch.base_point(), 0.9 * ch.radius(), 50)) {
      const Vec v = ch.jacobian(p) * beta(p);
      chart_err = std::max(chart_err, (v - Vec(0.0, ch.rho(p))).norm());
      ++samples;
    }
  }
  const Domain hs = Domain::half_space(2);
  const BoundaryVector hb = [](const Vec& x) { return Vec(Vec(0.3 * std::sin(x[0]), -1.0).normalized()); };
  const Chart hc = build_chart(hs, Vec::Zero(), hb);
  for (const Vec& p : boundary_samples(hs, Vec::Zero(), 0.9 * hc.radius(), 50)) {
    chart_err = std::max(chart_err, (hc.jacobian(p) * hb(p) - Vec(0.0, hc.rho(p))).norm());
    ++samples;
  }
  c.check(samples >= 200 && chart_err <= 1e-8,
          "chart identity |J phi beta - rho e_d| = " + num(chart_err) + " on " + std::to_string(samples) + " samples");

  // Cutoff derivative bounds scale like (r2 - r1)^{-k}.
  for (int k = 1; k <= 3; ++k) {
    double lo = 1e300, hi = 0.0;
    for (double scale : {1.0, 4.0, 16.0}) {
      const Cutoff cut(scale, 2.0 * scale, false, Vec::Zero(), 1);
      double m = 0.0;
      for (int i = 0; i <= 4000; ++i) m = std::max(m, std::abs(cut.profile(scale * (1.0 + i / 4000.0), k)));
      const double C = m * std::pow(scale, k);
      lo = std::min(lo, C);
      hi = std::max(hi, C);
    }
    c.check(hi <= 1.5 * lo, "cutoff derivative order " + std::to_string(k) + ": constants within factor " + num(hi / lo));
  }

  const auto family = [](double r, const Vec& x) { return TestFunction{point(r), 1.0, 1.0, 1}(x); };
  const double disc = interchange_discrepancy(G, 0.5, 0.0, family, -1.0, 1.0);
  c.check(disc <= 1e-3, "quadrature / operator interchange discrepancy " + num(disc));
}

// ---------------------------------------------------------------------------
// 10. Bernstein monitor

void bernstein(Checks& c, const Options& opts) {
  std::vector<std::tuple<std::string, OpSpec, TestFunction>> cases;
  {
    OpSpec o;
    o.catalog = "heat";
    cases.push_back({"whole-line heat", o, TestFunction{point(0.0), 1.0, 1.0, 1}});
  }
  {
    OpSpec o;
    o.catalog = "heat";
    o.domain = Domain::half_space(1);
    o.bc = BoundaryCondition::make_neumann(o.domain);
    o.window = interval(0.0, 4.0);
    cases.push_back({"Neumann half-line heat", o, TestFunction{point(1.5), 1.0, 1.0, 1}});
  }
  for (const auto& [name, spec, f] : cases) {
    const EvolutionOperator G = make_op(spec);
    const GradientHypothesesReport hyp =
        check_gradient_hypotheses(G.coefficients(), G.domain(), 0.5, cloud_for(G.domain(), 0.0, 1.0, opts.seed));
    const GradEstReport k = gradient_constant(G, 0.0, 1.0, {as_data(f)}, &hyp);
    for (double a : {1.0, 2.0}) {
      const BernsteinMonitor m = bernstein_monitor(G, 0.0, 1.0, as_data(f), a);
      const double zmax = *std::max_element(m.max_z.begin(), m.max_z.end());
      c.check(m.pass && m.min_z >= 0.0, name + ", a = " + num(a) + ": max z / ||f||^2 = " + num(zmax / m.f_sup2, 6));
      c.check(k.C <= m.implied_kappa * 1.02, name + ", a = " + num(a) + ": kappa " + num(k.C) + " <= 1/sqrt(a) = " +
                                                 num(m.implied_kappa) + " (+2%)");
    }
  }
}

using Fn = void (*)(Checks&, const Options&);

struct Criterion {
  const char* name;
  Fn fn;
};

const Criterion kCriteria[] = {
    {"oracle-reproduction", oracle_reproduction}, {"contraction-and-mass", contraction_and_mass},
    {"maximum-principle", maximum_principle},     {"evolution-law", evolution_law},
    {"gradient-estimate", gradient_estimate},     {"long-time-decay", long_time},
    {"compactness-tightness", tightness},         {"gauge-equivalences", gauges},
    {"appendix-suite", appendix},                 {"bernstein-monitor", bernstein},
};

}  // namespace

int criterion_count() { return static_cast<int>(std::size(kCriteria)); }

const char* criterion_name(int id) { return kCriteria[id - 1].name; }

CriterionResult run_criterion(int id, const Options& opts) {
  if (id < 1 || id > criterion_count()) throw Error(ErrorKind::Config, "no criterion " + std::to_string(id));
  CriterionResult r;
  r.id = id;
  r.name = criterion_name(id);
  Checks c;
  c.log = opts.log;
  if (opts.log) *opts.log << "[" << id << "] " << r.name << std::endl;
  const auto t0 = Clock::now();
  try {
    kCriteria[id - 1].fn(c, opts);
  } catch (const Error& e) {
    c.check(false, std::string("error: ") + e.what());
  } catch (const std::exception& e) {
    c.check(false, std::string("exception: ") + e.what());
  }
  r.seconds = since(t0);
  r.pass = c.pass;
  r.detail = c.detail.str();
  return r;
}

std::vector<CriterionResult> run_all(const Options& opts, const std::vector<int>& ids) {
  std::vector<CriterionResult> out;
  std::vector<int> todo = ids;
  if (todo.empty())
    for (int i = 1; i <= criterion_count(); ++i) todo.push_back(i);
  for (int id : todo) out.push_back(run_criterion(id, opts));
  return out;
}

void print(std::ostream& os, const CriterionResult& r, bool verbose) {
  os << (r.pass ? "PASS " : "FAIL ") << std::setw(2) << r.id << " " << r.name << " (" << std::fixed
     << std::setprecision(1) << r.seconds << " s)" << std::defaultfloat << "\n";
  if (!verbose) return;
  std::istringstream is(r.detail);
  std::string line;
  while (std::getline(is, line)) os << "      " << line << "\n";
}

}  // namespace parevo::selftest
