#include "parevo/fields.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace parevo {

namespace {

Mat eye(int dim) {
  Mat m = Mat::Zero();
  for (int k = 0; k < dim; ++k) m(k, k) = 1.0;
  return m;
}

Vec restrict_to(const Vec& x, int dim) {
  Vec y = x;
  if (dim == 1) y[1] = 0.0;
  return y;
}

Mat restrict_mat(const Mat& m, int dim) {
  if (dim == 2) return m;
  Mat r = Mat::Zero();
  r(0, 0) = m(0, 0);
  return r;
}

double sqnorm(const Vec& x, int dim) { return dim == 1 ? x[0] * x[0] : x.squaredNorm(); }

double param(const ParamMap& p, const ParamMap& defaults, const std::string& key) {
  auto it = p.find(key);
  if (it != p.end()) return it->second;
  return defaults.at(key);
}

void check_params(const std::string& entry, const ParamMap& p, const ParamMap& defaults) {
  for (const auto& [key, value] : p) {
    if (!defaults.count(key)) throw Error(ErrorKind::Config, "unknown parameter '" + key + "' for " + entry);
    if (!std::isfinite(value)) throw Error(ErrorKind::Config, "non-finite parameter '" + key + "' for " + entry);
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Boundary conditions

BoundaryCondition BoundaryCondition::make_dirichlet() {
  BoundaryCondition bc;
  bc.kind = Kind::Dirichlet;
  return bc;
}

BoundaryCondition BoundaryCondition::make_oblique(VectorField beta, PotentialField gamma, bool time_dependent) {
  BoundaryCondition bc;
  bc.kind = Kind::Oblique;
  bc.beta = std::move(beta);
  bc.gamma = std::move(gamma);
  bc.time_dependent = time_dependent;
  return bc;
}

BoundaryCondition BoundaryCondition::make_neumann(const Domain& domain) { return make_robin(domain, 0.0); }

BoundaryCondition BoundaryCondition::make_robin(const Domain& domain, double gamma) {
  if (!domain.has_boundary()) throw Error(ErrorKind::Capability, "whole space has no boundary condition");
  return make_oblique([domain](double, const Vec& x) { return domain.normal_at_projection(x); },
                      [gamma](double, const Vec&) { return gamma; });
}

// ---------------------------------------------------------------------------
// Test functions

Jet TestFunction::eval(const Vec& x) const {
  Jet j;
  const Vec rel = restrict_to(Vec(x - center), dim);
  const double s = rel.squaredNorm() / (radius * radius);
  if (s >= 1.0) return j;
  const double w = 1.0 - s;
  const double g = std::exp(1.0 - 1.0 / w);
  const double g1 = -g / (w * w);
  const double g2 = g * (1.0 / (w * w * w * w) - 2.0 / (w * w * w));
  const Vec ds = 2.0 * rel / (radius * radius);
  j.value = amplitude * g;
  j.grad = amplitude * g1 * ds;
  j.hess = restrict_mat(amplitude * (g2 * ds * ds.transpose() + g1 * 2.0 / (radius * radius) * Mat::Identity()), dim);
  return j;
}

ScalarField TestFunction::field() const {
  TestFunction copy = *this;
  return [copy](double, const Vec& x) { return copy.eval(x); };
}

void TestFunction::check_support(const Domain& domain) const {
  if (!(radius > 0.0)) throw Error(ErrorKind::Precondition, "test function radius must be positive");
  if (!domain.contains(center, 0.0)) throw Error(ErrorKind::Precondition, "test function center outside the domain");
  if (domain.has_boundary() && domain.raw_distance(center) <= radius)
    throw Error(ErrorKind::Precondition, "test function support touches the boundary");
}

// ---------------------------------------------------------------------------
// Truncation

TruncationSchedule make_schedule(const Domain& domain, int n) {
  if (n < 1) throw Error(ErrorKind::Precondition, "truncation index must be at least 1");
  return TruncationSchedule{n, build_cutoff(n, 2.0 * n, false, Vec::Zero(), domain.dim()), domain};
}

std::pair<CoefficientSet, BoundaryCondition> truncate_operator(const CoefficientSet& coeffs,
                                                               const BoundaryCondition& bc,
                                                               const TruncationSchedule& sched) {
  CoefficientSet out = coeffs;
  const Cutoff theta = sched.theta;
  const int dim = coeffs.dim;
  const Mat id = eye(dim);
  out.name = coeffs.name + "^(" + std::to_string(sched.n) + ")";
  out.Q = [q = coeffs.Q, theta, id](double t, const Vec& x) {
    const double w = theta.value(x);
    if (w == 0.0) return id;
    return Mat(w * q(t, x) + (1.0 - w) * id);
  };
  out.b = [b = coeffs.b, theta](double t, const Vec& x) {
    const double w = theta.value(x);
    return w == 0.0 ? Vec(Vec::Zero()) : Vec(w * b(t, x));
  };
  out.c = [c = coeffs.c, theta](double t, const Vec& x) {
    const double w = theta.value(x);
    return w == 0.0 ? 0.0 : w * c(t, x);
  };
  // Derivatives of the blend need derivatives of theta as well.
  if (coeffs.has_jacobians()) {
    out.dQ = [q = coeffs.Q, dq = coeffs.dQ, theta, id](double t, const Vec& x) {
      const Jet w = theta.eval(x);
      std::array<Mat, 2> d{Mat::Zero(), Mat::Zero()};
      if (w.value == 0.0) return d;
      const auto inner = dq(t, x);
      const Mat qv = q(t, x);
      for (int k = 0; k < 2; ++k) d[k] = w.value * inner[k] + w.grad[k] * (qv - id);
      return d;
    };
    out.Jb = [b = coeffs.b, jb = coeffs.Jb, theta, dim](double t, const Vec& x) {
      const Jet w = theta.eval(x);
      if (w.value == 0.0) return Mat(Mat::Zero());
      return restrict_mat(Mat(w.value * jb(t, x) + b(t, x) * w.grad.transpose()), dim);
    };
    out.grad_c = [c = coeffs.c, gc = coeffs.grad_c, theta](double t, const Vec& x) {
      const Jet w = theta.eval(x);
      if (w.value == 0.0) return Vec(Vec::Zero());
      return Vec(w.value * gc(t, x) + c(t, x) * w.grad);
    };
  }
  out.c0 = std::min(0.0, coeffs.c0);

  BoundaryCondition bout = bc;
  if (!bc.dirichlet()) {
    const TruncationSchedule s = sched;
    bout.beta = [beta = bc.beta, s, dim](double t, const Vec& x) {
      const double w = s.theta.value(x);
      Vec v = restrict_to(Vec(w * beta(t, x) + (1.0 - w) * s.mu(x)), dim);
      return Vec(v / norm(v, dim));
    };
    bout.gamma = [gamma = bc.gamma, theta](double t, const Vec& x) {
      const double w = theta.value(x);
      return w == 0.0 ? 0.0 : w * gamma(t, x);
    };
  }
  return {out, bout};
}

double differential_action(const CoefficientSet& coeffs, double t, const Jet& f, const Vec& x) {
  const Mat q = coeffs.Q(t, x);
  return (q * f.hess).trace() + coeffs.b(t, x).dot(f.grad) - coeffs.c(t, x) * f.value;
}

double differential_action(const CoefficientSet& coeffs, double t, const ScalarField& f, const Vec& x) {
  if (!f) throw Error(ErrorKind::Capability, "field evaluator missing");
  return differential_action(coeffs, t, f(t, x), x);
}

double boundary_action(const BoundaryCondition& bc, double t, const Jet& f, const Vec& x) {
  if (bc.dirichlet()) return f.value;
  return bc.beta(t, x).dot(f.grad) + bc.gamma(t, x) * f.value;
}

std::vector<Vec> boundary_audit_points(const Domain& domain, double radius, int count) {
  switch (domain.kind()) {
    case DomainKind::WholeSpace:
      return {};
    case DomainKind::HalfSpace:
      return boundary_samples(domain, Vec::Zero(), radius, count);
    case DomainKind::ExteriorBall:
      return boundary_samples(domain, domain.center(), 2.0 * domain.radius() + 1.0, count);
  }
  return {};
}

BoundaryCondition normalize_orientation(const BoundaryCondition& bc, const Domain& domain, double beta_min,
                                        const std::vector<double>& times) {
  if (bc.dirichlet()) return bc;
  if (!domain.has_boundary()) return bc;
  int positive = 0, negative = 0;
  for (double t : times) {
    for (const Vec& p : boundary_audit_points(domain)) {
      const Vec beta = bc.beta(t, p);
      const double len = norm(beta, domain.dim());
      if (std::abs(len - 1.0) > 1e-10) {
        std::ostringstream os;
        os << "boundary field must have unit length (|beta| = " << len << ")";
        throw Error(ErrorKind::Config, os.str());
      }
      const double proj = beta.dot(domain.normal_at_projection(p));
      if (std::abs(proj) < beta_min)
        throw Error(ErrorKind::Precondition, "boundary field is tangential at a boundary sample");
      (proj > 0.0 ? positive : negative)++;
    }
  }
  if (positive > 0 && negative > 0)
    throw Error(ErrorKind::Config, "inconsistent orientation: <beta, nu> changes sign along the boundary");
  if (negative == 0) return bc;
  BoundaryCondition flipped = bc;
  flipped.beta = [beta = bc.beta](double t, const Vec& x) { return Vec(-beta(t, x)); };
  flipped.gamma = [gamma = bc.gamma](double t, const Vec& x) { return -gamma(t, x); };
  return flipped;
}

// ---------------------------------------------------------------------------
// Coefficient catalog

const std::vector<std::string>& coefficient_catalog() {
  static const std::vector<std::string> names = {"heat",        "ou",          "cubic-drift",
                                                 "radial-power", "normal-power", "example-exterior"};
  return names;
}

const ParamMap& coefficient_defaults(const std::string& name) {
  static const std::map<std::string, ParamMap> defaults = {
      {"heat", {{"a", 1.0}, {"c", 0.0}, {"omega_amp", 0.0}, {"omega_freq", 1.0}}},
      {"ou", {{"a", 1.0}, {"k", 1.0}, {"c", 0.0}}},
      {"cubic-drift", {{"a", 1.0}, {"k", 1.0}, {"c", 0.0}}},
      {"radial-power",
       {{"omega", 1.0}, {"omega_amp", 0.0}, {"r", 0.0}, {"p", 1.0}, {"b0", 1.0}, {"m", 1.0}, {"chat", 1.0},
        {"chat_amp", 0.0}}},
      {"normal-power",
       {{"qhat", 1.0}, {"r", 0.5}, {"p", 0.0}, {"m", 1.0}, {"sigma0", 1.0}, {"chat", 1.0}, {"chat_amp", 0.25}}},
      {"example-exterior", {{"a", 1.0}, {"k", 1.0}, {"chat", 0.0}, {"m", 0.0}}},
  };
  auto it = defaults.find(name);
  if (it == defaults.end()) throw Error(ErrorKind::Config, "unknown coefficient catalog entry '" + name + "'");
  return it->second;
}

CoefficientSet make_coefficients(const std::string& name, const ParamMap& params, int dim) {
  const ParamMap& defaults = coefficient_defaults(name);
  check_params(name, params, defaults);
  auto P = [&](const char* key) { return param(params, defaults, key); };
  if (dim != 1 && dim != 2) throw Error(ErrorKind::Config, "dimension must be 1 or 2");
  const Mat id = eye(dim);

  CoefficientSet cs;
  cs.name = name;
  cs.dim = dim;

  if (name == "heat" || name == "ou" || name == "cubic-drift") {
    const double a = P("a"), c = P("c");
    if (!(a > 0.0)) throw Error(ErrorKind::Config, name + ": diffusion a must be positive");
    double amp = 0.0, freq = 1.0;
    if (name == "heat") {
      amp = P("omega_amp");
      freq = P("omega_freq");
      if (std::abs(amp) >= 1.0) throw Error(ErrorKind::Config, "heat: |omega_amp| must be below 1");
    }
    cs.time_dependent = amp != 0.0;
    cs.Q = [a, amp, freq, id](double t, const Vec&) { return Mat(a * (1.0 + amp * std::sin(freq * t)) * id); };
    cs.dQ = [](double, const Vec&) { return std::array<Mat, 2>{Mat::Zero(), Mat::Zero()}; };
    cs.c = [c](double, const Vec&) { return c; };
    cs.grad_c = [](double, const Vec&) { return Vec(Vec::Zero()); };
    cs.c0 = c;
    if (name == "heat") {
      cs.b = [](double, const Vec&) { return Vec(Vec::Zero()); };
      cs.Jb = [](double, const Vec&) { return Mat(Mat::Zero()); };
    } else if (name == "ou") {
      const double k = P("k");
      cs.b = [k, dim](double, const Vec& x) { return Vec(-k * restrict_to(x, dim)); };
      cs.Jb = [k, id](double, const Vec&) { return Mat(-k * id); };
    } else {
      const double k = P("k");
      cs.b = [k, dim](double, const Vec& x) {
        const Vec y = restrict_to(x, dim);
        return Vec(-k * y.squaredNorm() * y);
      };
      cs.Jb = [k, dim, id](double, const Vec& x) {
        const Vec y = restrict_to(x, dim);
        return Mat(-k * (y.squaredNorm() * id + 2.0 * y * y.transpose()));
      };
    }
    return cs;
  }

  if (name == "radial-power") {
    const double omega = P("omega"), omega_amp = P("omega_amp"), r = P("r"), p = P("p"), b0 = P("b0"), m = P("m"),
                 chat = P("chat"), chat_amp = P("chat_amp");
    if (!(omega > 0.0) || std::abs(omega_amp) >= 1.0) throw Error(ErrorKind::Config, "radial-power: inf omega must be positive");
    if (!(chat > 0.0) || std::abs(chat_amp) >= 1.0) throw Error(ErrorKind::Config, "radial-power: inf chat must be positive");
    if (!(b0 > 0.0) || p < 0.0 || m < 0.0) throw Error(ErrorKind::Config, "radial-power: need b0 > 0, p >= 0, m >= 0");
    if (!(std::max(r - 1.0, 0.0) < std::max(p, m)))
      throw Error(ErrorKind::Config, "radial-power: requires (r-1)^+ < max{p, m}");
    auto om = [omega, omega_amp](double t) { return omega * (1.0 + omega_amp * std::sin(t)); };
    cs.time_dependent = omega_amp != 0.0;
    cs.Q = [om, r, dim, id](double t, const Vec& x) { return Mat(om(t) * std::pow(1.0 + sqnorm(x, dim), r) * id); };
    cs.dQ = [om, r, dim, id](double t, const Vec& x) {
      const double s = 1.0 + sqnorm(x, dim);
      const double f = om(t) * r * std::pow(s, r - 1.0) * 2.0;
      const Vec y = restrict_to(x, dim);
      return std::array<Mat, 2>{Mat(f * y[0] * id), Mat(f * y[1] * id)};
    };
    cs.b = [b0, p, dim](double, const Vec& x) {
      const Vec y = restrict_to(x, dim);
      return Vec(-b0 * std::pow(1.0 + y.squaredNorm(), p) * y);
    };
    cs.Jb = [b0, p, dim, id](double, const Vec& x) {
      const Vec y = restrict_to(x, dim);
      const double s = 1.0 + y.squaredNorm();
      return Mat(-b0 * (std::pow(s, p) * id + 2.0 * p * std::pow(s, p - 1.0) * y * y.transpose()));
    };
    cs.c = [chat, chat_amp, m, dim](double, const Vec& x) {
      return chat * (1.0 + chat_amp * std::sin(x[0])) * std::pow(1.0 + sqnorm(x, dim), m);
    };
    cs.grad_c = [chat, chat_amp, m, dim](double, const Vec& x) {
      const Vec y = restrict_to(x, dim);
      const double s = 1.0 + y.squaredNorm();
      const double hat = chat * (1.0 + chat_amp * std::sin(x[0]));
      Vec g = hat * m * std::pow(s, m - 1.0) * 2.0 * y;
      g[0] += chat * chat_amp * std::cos(x[0]) * std::pow(s, m);
      return g;
    };
    cs.c0 = chat * (1.0 - std::abs(chat_amp));
    return cs;
  }

  if (name == "normal-power") {
    const double qhat = P("qhat"), r = P("r"), p = P("p"), m = P("m"), sigma0 = P("sigma0"), chat = P("chat"),
                 chat_amp = P("chat_amp");
    if (!(qhat > 0.0) || !(sigma0 > 0.0)) throw Error(ErrorKind::Config, "normal-power: need qhat > 0, sigma0 > 0");
    if (!(chat > 0.0) || std::abs(chat_amp) >= 1.0) throw Error(ErrorKind::Config, "normal-power: inf chat must be positive");
    if (r < 0.0 || p < 0.0 || m < 0.0) throw Error(ErrorKind::Config, "normal-power: exponents must be nonnegative");
    if (!(r < std::max(p + 1.0, m + 1.0))) throw Error(ErrorKind::Config, "normal-power: requires r < max{p+1, m+1}");
    const int d = dim - 1;
    cs.Q = [qhat, r, d, id](double, const Vec& x) { return Mat(qhat * std::pow(1.0 + x[d] * x[d], r) * id); };
    cs.dQ = [qhat, r, d, id](double, const Vec& x) {
      std::array<Mat, 2> out{Mat::Zero(), Mat::Zero()};
      out[d] = qhat * r * std::pow(1.0 + x[d] * x[d], r - 1.0) * 2.0 * x[d] * id;
      return out;
    };
    cs.b = [sigma0, p, d, dim](double, const Vec& x) {
      return Vec(-sigma0 * std::pow(1.0 + x[d] * x[d], p) * restrict_to(x, dim));
    };
    cs.Jb = [sigma0, p, d, dim, id](double, const Vec& x) {
      const double w = 1.0 + x[d] * x[d];
      Mat j = -sigma0 * std::pow(w, p) * id;
      Vec ed = Vec::Zero();
      ed[d] = 1.0;
      j += -sigma0 * restrict_to(x, dim) * (p * std::pow(w, p - 1.0) * 2.0 * x[d] * ed).transpose();
      return j;
    };
    cs.c = [chat, chat_amp, m, d](double, const Vec& x) {
      return chat * (1.0 + chat_amp * std::sin(x[d])) * std::pow(1.0 + x[d] * x[d], m);
    };
    cs.grad_c = [chat, chat_amp, m, d](double, const Vec& x) {
      const double w = 1.0 + x[d] * x[d];
      const double hat = chat * (1.0 + chat_amp * std::sin(x[d]));
      Vec g = Vec::Zero();
      g[d] = chat * chat_amp * std::cos(x[d]) * std::pow(w, m) + hat * m * std::pow(w, m - 1.0) * 2.0 * x[d];
      return g;
    };
    cs.c0 = chat * (1.0 - std::abs(chat_amp));
    return cs;
  }

  // example-exterior
  const double a = P("a"), k = P("k"), chat = P("chat"), m = P("m");
  if (!(a > 0.0) || chat < 0.0 || m < 0.0) throw Error(ErrorKind::Config, "example-exterior: need a > 0, chat >= 0, m >= 0");
  cs.Q = [a, id](double, const Vec&) { return Mat(a * id); };
  cs.dQ = [](double, const Vec&) { return std::array<Mat, 2>{Mat::Zero(), Mat::Zero()}; };
  cs.b = [k, dim](double, const Vec& x) { return Vec(-k * restrict_to(x, dim)); };
  cs.Jb = [k, id](double, const Vec&) { return Mat(-k * id); };
  cs.c = [chat, m, dim](double, const Vec& x) { return chat * std::pow(1.0 + sqnorm(x, dim), m); };
  cs.grad_c = [chat, m, dim](double, const Vec& x) {
    const Vec y = restrict_to(x, dim);
    return Vec(chat * m * std::pow(1.0 + y.squaredNorm(), m - 1.0) * 2.0 * y);
  };
  cs.c0 = chat;
  return cs;
}

// ---------------------------------------------------------------------------
// Scalar field catalog

double Zeta::value(double r) const {
  if (r >= a) return 0.5;
  const double u = 1.0 - r / a;
  return 0.5 + 0.5 * u * u * u * u;
}

double Zeta::d1(double r) const {
  if (r >= a) return 0.0;
  const double u = 1.0 - r / a;
  return -2.0 * u * u * u / a;
}

double Zeta::d2(double r) const {
  if (r >= a) return 0.0;
  const double u = 1.0 - r / a;
  return 6.0 * u * u / (a * a);
}

const std::vector<std::string>& scalar_field_catalog() {
  static const std::vector<std::string> names = {"constant",          "quadratic",     "sqrt",
                                                 "exterior-lyapunov", "zeta-gauge",    "zeta-lyapunov",
                                                 "bump",              "smoothed-sign"};
  return names;
}

const ParamMap& scalar_field_defaults(const std::string& name) {
  static const std::map<std::string, ParamMap> defaults = {
      {"constant", {{"value", 1.0}}},
      {"quadratic", {}},
      {"sqrt", {{"k", 1.0}}},
      {"exterior-lyapunov", {{"delta", 0.5}}},
      {"zeta-gauge", {{"sigma", 2.0}, {"delta", 0.5}}},
      {"zeta-lyapunov", {{"sigma", 2.0}, {"delta", 0.5}}},
      {"bump", {{"center", 2.0}, {"center_y", 0.0}, {"radius", 1.0}, {"amplitude", 1.0}}},
      {"smoothed-sign", {{"width", 0.5}}},
  };
  auto it = defaults.find(name);
  if (it == defaults.end()) throw Error(ErrorKind::Config, "unknown scalar field '" + name + "'");
  return it->second;
}

ScalarField make_scalar_field(const std::string& name, const ParamMap& params, const Domain& domain) {
  const ParamMap& defaults = scalar_field_defaults(name);
  check_params(name, params, defaults);
  auto P = [&](const char* key) { return param(params, defaults, key); };
  const int dim = domain.dim();
  const Mat id = eye(dim);

  if (name == "constant") {
    const double v = P("value");
    return [v](double, const Vec&) {
      Jet j;
      j.value = v;
      return j;
    };
  }
  if (name == "quadratic") {
    return [dim, id](double, const Vec& x) {
      Jet j;
      const Vec y = restrict_to(x, dim);
      j.value = 1.0 + y.squaredNorm();
      j.grad = 2.0 * y;
      j.hess = 2.0 * id;
      return j;
    };
  }
  if (name == "sqrt") {
    const double k = P("k");
    return [k, dim, id](double, const Vec& x) {
      Jet j;
      const Vec y = restrict_to(x, dim);
      const double v = std::sqrt(k * k + y.squaredNorm());
      j.value = v;
      j.grad = y / v;
      j.hess = id / v - y * y.transpose() / (v * v * v);
      return j;
    };
  }
  if (name == "bump") {
    TestFunction tf{point(P("center"), dim == 2 ? P("center_y") : 0.0), P("radius"), P("amplitude"), dim};
    return tf.field();
  }
  if (name == "smoothed-sign") {
    // erf(x_1 / w)
    const double w = P("width");
    if (!(w > 0.0)) throw Error(ErrorKind::Config, "smoothed-sign: width must be positive");
    return [w](double, const Vec& x) {
      Jet j;
      const double z = x[0] / w, g = 2.0 / std::sqrt(std::acos(-1.0)) * std::exp(-z * z) / w;
      j.value = std::erf(z);
      j.grad[0] = g;
      j.hess(0, 0) = -2.0 * z / w * g;
      return j;
    };
  }
  if (!domain.has_boundary()) throw Error(ErrorKind::Capability, name + " requires a domain with boundary");
  const double delta = P("delta");
  if (!(delta > 0.0) || delta > 1.0) throw Error(ErrorKind::Config, name + ": delta must lie in (0, 1]");

  if (name == "exterior-lyapunov") {
    // (1 - r) theta + (1 - theta)(1 + |x|^2) with theta(x) = P(r_Omega(x)), P = 1 on [0, delta/2], 0 past delta.
    const Cutoff cut(delta / 2.0, delta, false, Vec::Zero(), 1);
    return [domain, cut, dim, id](double, const Vec& x) {
      const Jet r = domain.distance_jet(x);
      const double th = cut.profile(r.value), th1 = cut.profile(r.value, 1), th2 = cut.profile(r.value, 2);
      Jet theta;
      theta.value = th;
      theta.grad = th1 * r.grad;
      theta.hess = th2 * r.grad * r.grad.transpose() + th1 * r.hess;
      const Vec y = restrict_to(x, dim);
      Jet q;
      q.value = 1.0 + y.squaredNorm();
      q.grad = 2.0 * y;
      q.hess = 2.0 * id;
      Jet one_minus_r;
      one_minus_r.value = 1.0 - r.value;
      one_minus_r.grad = -r.grad;
      one_minus_r.hess = -r.hess;
      // product rule for a*theta + b*(1-theta)
      Jet out;
      out.value = one_minus_r.value * th + q.value * (1.0 - th);
      out.grad = one_minus_r.grad * th + one_minus_r.value * theta.grad + q.grad * (1.0 - th) - q.value * theta.grad;
      out.hess = one_minus_r.hess * th + one_minus_r.grad * theta.grad.transpose() +
                 theta.grad * one_minus_r.grad.transpose() + one_minus_r.value * theta.hess + q.hess * (1.0 - th) -
                 q.grad * theta.grad.transpose() - theta.grad * q.grad.transpose() - q.value * theta.hess;
      out.hess = restrict_mat(out.hess, dim);
      return out;
    };
  }

  const double sigma = P("sigma");
  if (!(sigma > 0.0)) throw Error(ErrorKind::Config, name + ": sigma must be positive");
  const Zeta zeta{delta / 2.0};
  auto zeta_jet = [domain, zeta, sigma, dim](const Vec& x) {
    const Jet r = domain.distance_jet(x);
    const double s = sigma * r.value;
    Jet z;
    z.value = zeta.value(s);
    z.grad = sigma * zeta.d1(s) * r.grad;
    z.hess = restrict_mat(Mat(sigma * sigma * zeta.d2(s) * r.grad * r.grad.transpose() + sigma * zeta.d1(s) * r.hess), dim);
    return z;
  };
  if (name == "zeta-gauge") return [zeta_jet](double, const Vec& x) { return zeta_jet(x); };

  // zeta-lyapunov: z + (1 - z)|x|^2
  return [zeta_jet, dim, id](double, const Vec& x) {
    const Jet z = zeta_jet(x);
    const Vec y = restrict_to(x, dim);
    const double q = y.squaredNorm();
    const Vec qg = 2.0 * y;
    const Mat qh = 2.0 * id;
    Jet out;
    out.value = z.value + (1.0 - z.value) * q;
    out.grad = z.grad + (1.0 - z.value) * qg - q * z.grad;
    out.hess = restrict_mat(
        Mat(z.hess + (1.0 - z.value) * qh - qg * z.grad.transpose() - z.grad * qg.transpose() - q * z.hess), dim);
    return out;
  };
}

}  // namespace parevo
