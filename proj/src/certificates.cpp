#include "parevo/certificates.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

namespace parevo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double radical_inverse(std::uint64_t i, int base) {
  double inv = 1.0 / base, f = inv, r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return r;
}

// Halton point with a Cranley-Patterson rotation derived from the seed.
struct Halton {
  double shift[3];
  explicit Halton(std::uint64_t seed, std::uint64_t stream) {
    std::mt19937_64 rng(seed * 7919u + stream);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (double& s : shift) s = U(rng);
  }
  std::array<double, 3> operator()(std::uint64_t i) const {
    static const int bases[3] = {2, 3, 5};
    std::array<double, 3> u{};
    for (int k = 0; k < 3; ++k) {
      double v = radical_inverse(i + 1, bases[k]) + shift[k];
      u[k] = v - std::floor(v);
      u[k] = std::clamp(u[k], 1e-9, 1.0 - 1e-9);
    }
    return u;
  }
};

Vec interior_point(const Domain& domain, double radius, double u, double v) {
  const int d = domain.dim();
  switch (domain.kind()) {
    case DomainKind::WholeSpace:
      if (d == 1) return point(radius * (2.0 * u - 1.0));
      return radius * u * Vec(std::cos(2.0 * std::numbers::pi * v), std::sin(2.0 * std::numbers::pi * v));
    case DomainKind::HalfSpace:
      if (d == 1) return point(radius * u);
      return radius * u * Vec(std::cos(std::numbers::pi * v), std::sin(std::numbers::pi * v));
    case DomainKind::ExteriorBall: {
      const double r = domain.radius() + (radius - domain.radius()) * u;
      return domain.center() + r * Vec(std::cos(2.0 * std::numbers::pi * v), std::sin(2.0 * std::numbers::pi * v));
    }
  }
  return Vec::Zero();
}

Vec boundary_point(const Domain& domain, double radius, double u) {
  switch (domain.kind()) {
    case DomainKind::WholeSpace:
      break;
    case DomainKind::HalfSpace:
      return domain.dim() == 1 ? point(0.0) : point(radius * (2.0 * u - 1.0), 0.0);
    case DomainKind::ExteriorBall:
      return domain.center() +
             domain.radius() * Vec(std::cos(2.0 * std::numbers::pi * u), std::sin(2.0 * std::numbers::pi * u));
  }
  return Vec::Zero();
}

double lambda_min(const Mat& Q, int dim) {
  if (dim == 1) return Q(0, 0);
  Eigen::SelfAdjointEigenSolver<Mat> es(Q, Eigen::EigenvaluesOnly);
  return es.eigenvalues()[0];
}

double lambda_max_sym(const Mat& J, int dim) {
  if (dim == 1) return J(0, 0);
  const Mat S = 0.5 * (J + J.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues()[1];
}

void check_symmetric(const Mat& Q, double t, const Vec& x) {
  if (std::abs(Q(0, 1) - Q(1, 0)) > 1e-12) {
    std::ostringstream os;
    os << "diffusion matrix not symmetric at t=" << t << ", x=(" << x[0] << "," << x[1] << ")";
    throw Error(ErrorKind::Precondition, os.str());
  }
}

void write_blowup(std::ostream& os, const BlowupCheck& b) {
  os << "blowup.pass = " << (b.pass ? "true" : "false") << "\n";
  os << "blowup.minima =";
  for (double m : b.minima) os << " " << m;
  os << "\n";
}

const char* flag(bool b) { return b ? "pass" : "fail"; }

BoundaryCondition normalized(const BoundaryCondition& bc, const Domain& domain, const SampleCloud& cloud) {
  if (bc.dirichlet() || !domain.has_boundary()) return bc;
  return normalize_orientation(bc, domain, 1e-3, {cloud.config.s, cloud.config.T});
}

}  // namespace

std::string SampleCloud::describe() const {
  std::ostringstream os;
  os << interior.size() << " interior + " << boundary.size() << " boundary Halton samples in [" << config.s << ","
     << config.T << "] x B_" << config.radius << " (seed " << config.seed << ")";
  return os.str();
}

SampleCloud make_cloud(const Domain& domain, const SamplerConfig& cfg) {
  if (cfg.interior < 1) throw Error(ErrorKind::Config, "sample cloud needs interior points");
  if (!(cfg.T >= cfg.s)) throw Error(ErrorKind::Config, "sample interval must satisfy s <= T");
  SampleCloud cloud;
  cloud.config = cfg;
  const Halton hi(cfg.seed, 1), hb(cfg.seed, 2);
  for (int i = 0; i < cfg.interior; ++i) {
    const auto u = hi(i);
    cloud.interior.push_back({cfg.s + (cfg.T - cfg.s) * u[0], interior_point(domain, cfg.radius, u[1], u[2])});
  }
  if (domain.has_boundary()) {
    for (int i = 0; i < cfg.boundary; ++i) {
      const auto u = hb(i);
      cloud.boundary.push_back({cfg.s + (cfg.T - cfg.s) * u[0], boundary_point(domain, cfg.radius, u[1])});
    }
  }
  return cloud;
}

std::vector<SamplePoint> strip_samples(const Domain& domain, const SamplerConfig& cfg, double delta0, double radius) {
  std::vector<SamplePoint> out;
  if (!domain.has_boundary()) return out;
  const Halton h(cfg.seed, 3);
  for (int i = 0; i < cfg.boundary; ++i) {
    const auto u = h(i);
    const double t = cfg.s + (cfg.T - cfg.s) * u[0];
    Vec x;
    if (domain.kind() == DomainKind::HalfSpace)
      x = domain.dim() == 1 ? point(delta0 * u[1]) : point(radius * (2.0 * u[2] - 1.0), delta0 * u[1]);
    else
      x = domain.center() + (domain.radius() + delta0 * u[1]) *
                                Vec(std::cos(2.0 * std::numbers::pi * u[2]), std::sin(2.0 * std::numbers::pi * u[2]));
    out.push_back({t, x});
  }
  return out;
}

BlowupCheck check_blowup(const Domain& domain, const ScalarField& phi, const std::vector<double>& times) {
  BlowupCheck b;
  const Vec c = domain.kind() == DomainKind::ExteriorBall ? domain.center() : Vec(Vec::Zero());
  for (int k = 0; k <= 6; ++k) {
    const double R = std::ldexp(1.0, k);
    if (domain.kind() == DomainKind::ExteriorBall && R <= domain.radius() * (1.0 + 1e-9)) continue;
    std::vector<Vec> pts;
    if (domain.dim() == 1) {
      pts.push_back(point(R));
      if (domain.kind() == DomainKind::WholeSpace) pts.push_back(point(-R));
    } else {
      const double span = domain.kind() == DomainKind::HalfSpace ? std::numbers::pi : 2.0 * std::numbers::pi;
      for (int i = 0; i < 64; ++i) {
        const double a = span * i / (domain.kind() == DomainKind::HalfSpace ? 63.0 : 64.0);
        pts.push_back(c + R * Vec(std::cos(a), std::sin(a)));
      }
    }
    double m = kInf;
    for (double t : times)
      for (const Vec& x : pts) m = std::min(m, phi(t, x).value);
    b.radii.push_back(R);
    b.minima.push_back(m);
  }
  b.pass = b.minima.size() >= 2;
  for (size_t i = 1; i < b.minima.size(); ++i)
    if (!(b.minima[i] > b.minima[i - 1])) b.pass = false;
  if (b.pass) b.pass = b.minima.back() >= 10.0 * std::abs(b.minima.front()) && b.minima.back() > 0.0;
  return b;
}

// ---------------------------------------------------------------------------

EllipticityReport check_ellipticity(const CoefficientSet& coeffs, const Domain& domain, const SampleCloud& cloud) {
  (void)domain;
  EllipticityReport r;
  r.eta0 = kInf;
  r.c_min = kInf;
  r.c0 = coeffs.c0;
  for (const auto& [t, x] : cloud.interior) {
    const Mat Q = coeffs.Q(t, x);
    check_symmetric(Q, t, x);
    r.eta0 = std::min(r.eta0, lambda_min(Q, coeffs.dim));
    r.c_min = std::min(r.c_min, coeffs.c(t, x));
  }
  r.c0_ok = r.c_min >= coeffs.c0 - kSlack;
  r.pass = r.eta0 > 0.0 && r.c0_ok;
  r.cloud = cloud.describe();
  return r;
}

LyapunovCertificate check_lyapunov(const CoefficientSet& coeffs, const BoundaryCondition& bc0, const Domain& domain,
                                   const ScalarField& phi, double lambda, const SampleCloud& cloud) {
  LyapunovCertificate c;
  c.lambda = lambda;
  c.s = cloud.config.s;
  c.T = cloud.config.T;
  c.margin = kInf;
  c.boundary_margin = kInf;
  for (const auto& [t, x] : cloud.interior) {
    const Jet p = phi(t, x);
    c.margin = std::min(c.margin, p.dt - differential_action(coeffs, t, p, x) + lambda * p.value);
  }
  const BoundaryCondition bc = normalized(bc0, domain, cloud);
  if (!bc.dirichlet())
    for (const auto& [t, x] : cloud.boundary) c.boundary_margin = std::min(c.boundary_margin, boundary_action(bc, t, phi(t, x), x));
  c.blowup = check_blowup(domain, phi, {c.s, c.T});
  c.pass = lambda > 0.0 && c.margin > 0.0 && c.boundary_margin >= -kSlack && c.blowup.pass;
  return c;
}

GaugeCertificate check_gauge(const CoefficientSet& coeffs, const BoundaryCondition& bc0, const Domain& domain,
                             const ScalarField& phi, double H, const SampleCloud& cloud) {
  GaugeCertificate g;
  g.H = H;
  g.inf_phi = kInf;
  g.sup_phi = -kInf;
  g.margin = kInf;
  g.boundary_margin = kInf;
  auto visit = [&](double t, const Vec& x) {
    const Jet p = phi(t, x);
    g.inf_phi = std::min(g.inf_phi, p.value);
    g.sup_phi = std::max(g.sup_phi, p.value);
    return p;
  };
  for (const auto& [t, x] : cloud.interior) {
    const Jet p = visit(t, x);
    g.margin = std::min(g.margin, H * p.value + p.dt - differential_action(coeffs, t, p, x));
  }
  const BoundaryCondition bc = normalized(bc0, domain, cloud);
  for (const auto& [t, x] : cloud.boundary) {
    const Jet p = visit(t, x);
    if (!bc.dirichlet()) g.boundary_margin = std::min(g.boundary_margin, boundary_action(bc, t, p, x));
  }
  g.M = g.inf_phi > 0.0 ? g.sup_phi / g.inf_phi : kInf;
  g.pass = g.inf_phi > 0.0 && g.margin >= -kSlack && g.boundary_margin >= -kSlack;
  return g;
}

CompactnessCertificate check_compactness(const CoefficientSet& coeffs, const Domain& domain, const ScalarField& psi,
                                         double c1, double c2, double eps, const SampleCloud& cloud) {
  CompactnessCertificate c;
  c.c1 = c1;
  c.c2 = c2;
  c.eps = eps;
  c.margin = kInf;
  for (const auto& [t, x] : cloud.interior) {
    const Jet p = psi(t, x);
    const double pw = p.value > 0.0 ? std::pow(p.value, 1.0 + eps) : 0.0;
    c.margin = std::min(c.margin, c2 - c1 * pw - differential_action(coeffs, t, p, x));
  }
  c.blowup = check_blowup(domain, psi, {cloud.config.s, cloud.config.T});
  c.pass = c1 > 0.0 && c2 > 0.0 && eps > 0.0 && c.margin >= -kSlack && c.blowup.pass;
  return c;
}

namespace {

double grad_q_ratio(const CoefficientSet& cs, double t, const Vec& x) {
  const auto dQ = cs.dQ(t, x);
  double worst = 0.0;
  for (int i = 0; i < cs.dim; ++i)
    for (int j = 0; j < cs.dim; ++j) {
      double s = 0.0;
      for (int k = 0; k < cs.dim; ++k) s += dQ[k](i, j) * dQ[k](i, j);
      worst = std::max(worst, std::sqrt(s));
    }
  return worst / lambda_min(cs.Q(t, x), cs.dim);
}

}  // namespace

GradientHypothesesReport check_gradient_hypotheses(const CoefficientSet& coeffs, const Domain& domain, double delta0,
                                                   const SampleCloud& cloud) {
  if (!coeffs.has_jacobians()) throw Error(ErrorKind::Capability, "gradient hypotheses need analytic derivatives");
  GradientHypothesesReport r;
  r.delta0 = delta0;
  for (const auto& [t, x] : cloud.interior) {
    r.M1 = std::max(r.M1, grad_q_ratio(coeffs, t, x));
    const double c = coeffs.c(t, x);
    const double gc = norm(coeffs.grad_c(t, x), coeffs.dim);
    if (c > 0.0) r.L2 = std::max(r.L2, gc / c);
    r.L3 = std::max(r.L3, lambda_max_sym(coeffs.Jb(t, x), coeffs.dim));
  }
  for (const auto& [t, x] : cloud.interior) {
    const double c = coeffs.c(t, x);
    const double gc = norm(coeffs.grad_c(t, x), coeffs.dim);
    r.L1 = std::max(r.L1, gc - r.L2 * std::max(c, 0.0));
  }
  r.L4 = 0.0;
  // Absorb floating-point noise.
  r.M1 += kSlack;
  r.L1 += kSlack;
  r.L2 += kSlack;
  r.L3 += kSlack;

  if (domain.has_boundary()) {
    auto strip_sup = [&](double radius) {
      double sup = 0.0;
      for (const auto& [t, x] : strip_samples(domain, cloud.config, delta0, radius)) {
        const double q = coeffs.Q(t, x).cwiseAbs().maxCoeff();
        const double b = norm(coeffs.b(t, x), coeffs.dim);
        const double c = std::abs(coeffs.c(t, x));
        sup = std::max({sup, q, b, c});
        r.L5 = std::max(r.L5, b / (1.0 + std::max(coeffs.c(t, x), 0.0)));
      }
      return sup;
    };
    r.strip_sup_inner = strip_sup(cloud.config.radius / 4.0);
    r.strip_sup_outer = strip_sup(cloud.config.radius);
    r.strip_bounded = std::isfinite(r.strip_sup_outer) && r.strip_sup_outer <= 2.0 * r.strip_sup_inner + kSlack;
  } else {
    r.strip_bounded = true;
  }
  r.pass = r.L4 < 0.5 && r.strip_bounded && std::isfinite(r.M1) && std::isfinite(r.L1) && std::isfinite(r.L2) &&
           std::isfinite(r.L3);
  return r;
}

std::pair<double, double> GradientHypothesesReport::audit(const CoefficientSet& coeffs,
                                                          const SampleCloud& cloud) const {
  int violated = 0, total = 0;
  double worst = 0.0;
  auto record = [&](double excess) {
    ++total;
    if (excess > 0.0) {
      ++violated;
      worst = std::max(worst, excess);
    }
  };
  for (const auto& [t, x] : cloud.interior) {
    const double eta = lambda_min(coeffs.Q(t, x), coeffs.dim);
    record(grad_q_ratio(coeffs, t, x) * eta - M1 * eta);
    const double c = coeffs.c(t, x);
    record(norm(coeffs.grad_c(t, x), coeffs.dim) - (L1 + L2 * c));
    record(lambda_max_sym(coeffs.Jb(t, x), coeffs.dim) - (L3 + L4 * c));
  }
  return {total ? static_cast<double>(violated) / total : 0.0, worst};
}

// ---------------------------------------------------------------------------
// Reports

void EllipticityReport::write(std::ostream& os) const {
  os << "[ellipticity]\nstatus = " << flag(pass) << "\neta0 = " << eta0 << "\nc_min = " << c_min
     << "\nc0 = " << c0 << "\nc0_audit = " << flag(c0_ok) << "\ncloud = " << cloud << "\n";
}

void LyapunovCertificate::write(std::ostream& os) const {
  os << "[lyapunov]\nstatus = " << flag(pass) << "\nlambda = " << lambda << "\ninterval = [" << s << ", " << T
     << "]\nmargin = " << margin << "\nboundary_margin = " << boundary_margin << "\n";
  write_blowup(os, blowup);
}

void GaugeCertificate::write(std::ostream& os) const {
  os << "[gauge]\nstatus = " << flag(pass) << "\nH = " << H << "\ninf_phi = " << inf_phi << "\nsup_phi = " << sup_phi
     << "\nM = " << M << "\nmargin = " << margin << "\nboundary_margin = " << boundary_margin << "\n";
}

void CompactnessCertificate::write(std::ostream& os) const {
  os << "[compactness]\nstatus = " << flag(pass) << "\nc1 = " << c1 << "\nc2 = " << c2 << "\nepsilon = " << eps
     << "\nmargin = " << margin << "\n";
  write_blowup(os, blowup);
}

void GradientHypothesesReport::write(std::ostream& os) const {
  os << "[gradient]\nstatus = " << flag(pass) << "\nM1 = " << M1 << "\nL1 = " << L1 << "\nL2 = " << L2
     << "\nL3 = " << L3 << "\nL4 = " << L4 << "\nL5 = " << L5 << "\ndelta0 = " << delta0
     << "\nstrip_sup = " << strip_sup_inner << " / " << strip_sup_outer << "\nstrip_bounded = " << flag(strip_bounded)
     << "\n";
}

// ---------------------------------------------------------------------------
// Gauges

std::pair<CoefficientSet, BoundaryCondition> gauge_transform(const CoefficientSet& coeffs,
                                                             const BoundaryCondition& bc, const ScalarField& phi,
                                                             double H, const Domain& domain) {
  SamplerConfig cfg;
  cfg.interior = 512;
  cfg.boundary = 64;
  const SampleCloud cloud = make_cloud(domain, cfg);
  for (const auto* set : {&cloud.interior, &cloud.boundary})
    for (const auto& [t, x] : *set)
      if (!(phi(t, x).value > 0.0)) throw Error(ErrorKind::Precondition, "gauge function must be positive");

  CoefficientSet out = coeffs;
  out.name = coeffs.name + "~gauged";
  out.b = [b = coeffs.b, Q = coeffs.Q, phi](double t, const Vec& x) {
    const Jet p = phi(t, x);
    return Vec(b(t, x) + 2.0 * Q(t, x) * p.grad / p.value);
  };
  out.c = [coeffs, phi, H](double t, const Vec& x) {
    const Jet p = phi(t, x);
    if (!(p.value > 0.0)) throw Error(ErrorKind::Precondition, "gauge function must be positive");
    return H + p.dt / p.value - differential_action(coeffs, t, p, x) / p.value;
  };
  out.Jb = nullptr;
  out.grad_c = nullptr;
  out.c0 = 0.0;

  BoundaryCondition bout = bc;
  if (!bc.dirichlet()) {
    bout.gamma = [bc, phi](double t, const Vec& x) {
      const Jet p = phi(t, x);
      return boundary_action(bc, t, p, x) / p.value;
    };
  }
  return {out, bout};
}

std::array<double, 4> RobinGauge::profile(double xd) const {
  const double s = std::abs(xd);
  const double p0 = theta.profile(s), p1 = theta.profile(s, 1), p2 = theta.profile(s, 2), p3 = theta.profile(s, 3);
  return {g * xd * p0, g * (p0 + xd * p1), g * (2.0 * p1 + xd * p2), g * (3.0 * p2 + xd * p3)};
}

Jet RobinGauge::eval(const Vec& x) const {
  const int d = dim - 1;
  const auto p = profile(x[d]);
  Jet j;
  j.value = p[0];
  j.grad[d] = p[1];
  j.hess(d, d) = p[2];
  return j;
}

ScalarField RobinGauge::field() const {
  RobinGauge copy = *this;
  return [copy](double, const Vec& x) { return copy.eval(x); };
}

void RobinGauge::write(std::ostream& os) const {
  os << "[robin_gauge]\nstatus = " << flag(pass) << "\ng = " << g << "\ndelta = " << delta << "\nL6 = " << L6
     << "\nL7 = " << L7 << "\nsupport = " << flag(support_ok) << "\ntrace_error = " << trace_error << "\n";
}

RobinGauge build_robin_gauge(const CoefficientSet& coeffs, const BoundaryCondition& bc0, const Domain& domain,
                             double delta, const SampleCloud& cloud) {
  if (domain.kind() != DomainKind::HalfSpace)
    throw Error(ErrorKind::Capability, "the Robin gauge is available on the half-space only");
  if (bc0.dirichlet()) throw Error(ErrorKind::Precondition, "the Robin gauge needs oblique boundary data");
  if (!(delta > 0.0)) throw Error(ErrorKind::Config, "Robin gauge width must be positive");
  const BoundaryCondition bc = normalized(bc0, domain, cloud);
  const int d = domain.dim() - 1;
  double gamma = std::numeric_limits<double>::quiet_NaN();
  for (const auto& [t, x] : cloud.boundary) {
    const Vec beta = bc.beta(t, x);
    if (std::abs(beta[d] + 1.0) > 1e-10 || (domain.dim() == 2 && std::abs(beta[0]) > 1e-10))
      throw Error(ErrorKind::Capability, "the Robin gauge needs beta = nu on the boundary");
    const double gv = bc.gamma(t, x);
    if (std::isnan(gamma)) gamma = gv;
    if (std::abs(gv - gamma) > 1e-12) throw Error(ErrorKind::Capability, "the Robin gauge needs constant gamma");
  }
  RobinGauge G;
  G.g = -gamma;
  G.delta = delta;
  G.dim = domain.dim();
  G.theta = Cutoff(0.5 * delta, delta, true, Vec::Zero(), 1);

  G.trace_error = std::abs(G.profile(0.0)[1] - G.g);
  G.support_ok = true;
  for (int i = 0; i <= 200; ++i) {
    const double s = delta * (1.0 + i / 100.0);
    const auto p = G.profile(s);
    if (p[0] != 0.0 || p[1] != 0.0 || p[2] != 0.0) G.support_ok = false;
  }
  for (int i = 0; i <= 4000; ++i) {
    const auto p = G.profile(delta * i / 4000.0);
    G.L6 = std::max(G.L6, std::abs(p[1]) + std::abs(p[2]) + std::abs(p[3]));
  }
  double worst = kInf;
  auto visit = [&](double t, const Vec& x) {
    const Jet j = G.eval(x);
    const Mat Q = coeffs.Q(t, x);
    const double ac = (Q * j.hess).trace() + coeffs.b(t, x).dot(j.grad);
    worst = std::min(worst, ac - j.grad.dot(Q * j.grad));
  };
  for (const auto& [t, x] : cloud.interior) visit(t, x);
  for (const auto& [t, x] : cloud.boundary) visit(t, x);
  for (const auto& [t, x] : strip_samples(domain, cloud.config, delta, cloud.config.radius)) visit(t, x);
  G.L7 = -worst;
  G.pass = G.support_ok && G.trace_error <= 1e-8 && std::isfinite(G.L6) && std::isfinite(G.L7);
  return G;
}

CoefficientSet robin_to_neumann(const CoefficientSet& coeffs, const RobinGauge& gauge, const Domain& domain) {
  if (domain.kind() != DomainKind::HalfSpace)
    throw Error(ErrorKind::Capability, "Robin-to-Neumann transform is available on the half-space only");
  CoefficientSet out = coeffs;
  out.name = coeffs.name + "~neumann";
  out.b = [b = coeffs.b, Q = coeffs.Q, gauge](double t, const Vec& x) {
    return Vec(b(t, x) - 2.0 * Q(t, x) * gauge.eval(x).grad);
  };
  out.c = [coeffs, gauge](double t, const Vec& x) {
    const Jet j = gauge.eval(x);
    const Mat Q = coeffs.Q(t, x);
    return coeffs.c(t, x) + (Q * j.hess).trace() + coeffs.b(t, x).dot(j.grad) - j.grad.dot(Q * j.grad);
  };
  out.Jb = nullptr;
  out.grad_c = nullptr;
  out.c0 = coeffs.c0 - gauge.L7;
  return out;
}

}  // namespace parevo
