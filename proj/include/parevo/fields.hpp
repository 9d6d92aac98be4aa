#pragma once

#include "parevo/core.hpp"
#include "parevo/geometry.hpp"

#include <array>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace parevo {

/// Coefficients of A(t) = Tr(Q D^2) + <b, grad> - c.
///
/// In one dimension only the (0,0) entry of Q and the first component of b
/// are used; the remaining entries must be zero. Spatial derivatives are
/// optional and required only by the gradient-hypotheses certificate.
struct CoefficientSet {
  std::string name;
  int dim = 1;
  MatrixField Q;
  VectorField b;
  PotentialField c;
  std::function<std::array<Mat, 2>(double, const Vec&)> dQ;  // dQ[k] = dQ/dx_k
  MatrixField Jb;                                             // Jb(i,k) = db_i/dx_k
  VectorField grad_c;
  double c0 = 0.0;  // declared infimum of c
  bool time_dependent = false;

  bool has_jacobians() const { return dQ && Jb && grad_c; }
};

/// Dirichlet trace or oblique condition <beta, grad u> + gamma u = 0.
struct BoundaryCondition {
  enum class Kind { Dirichlet, Oblique };

  Kind kind = Kind::Dirichlet;
  VectorField beta;
  PotentialField gamma;
  bool time_dependent = false;

  bool dirichlet() const { return kind == Kind::Dirichlet; }

  static BoundaryCondition make_dirichlet();
  static BoundaryCondition make_oblique(VectorField beta, PotentialField gamma, bool time_dependent = false);
  /// beta = nu (outward), gamma = 0.
  static BoundaryCondition make_neumann(const Domain& domain);
  /// d_nu u + gamma u = 0 with the outward normal.
  static BoundaryCondition make_robin(const Domain& domain, double gamma);
};

/// Compactly supported C-infinity bump amplitude * exp(1 - 1/(1 - |x-c|^2/radius^2)).
struct TestFunction {
  Vec center = Vec::Zero();
  double radius = 1.0;
  double amplitude = 1.0;
  int dim = 1;

  Jet eval(const Vec& x) const;
  double operator()(const Vec& x) const { return eval(x).value; }
  ScalarField field() const;
  /// Throws Precondition when the closed support meets the boundary or leaves the domain.
  void check_support(const Domain& domain) const;
};

/// Blend weights for the n-th truncated operator: theta_n from a cutoff with
/// r1 = n, r2 = 2n, and the replacement direction mu = nu(pi(x)).
struct TruncationSchedule {
  int n = 1;
  Cutoff theta;
  Domain domain;

  Vec mu(const Vec& x) const { return domain.normal_at_projection(x); }
};

TruncationSchedule make_schedule(const Domain& domain, int n);

/// q^(n) = theta q + (1-theta) I, b^(n) = theta b, c^(n) = theta c,
/// beta^(n) = normalize(theta beta + (1-theta) mu), gamma^(n) = theta gamma.
std::pair<CoefficientSet, BoundaryCondition> truncate_operator(const CoefficientSet& coeffs,
                                                               const BoundaryCondition& bc,
                                                               const TruncationSchedule& sched);

/// Tr(Q D^2 f) + <b, grad f> - c f at (t, x).
double differential_action(const CoefficientSet& coeffs, double t, const Jet& f, const Vec& x);
double differential_action(const CoefficientSet& coeffs, double t, const ScalarField& f, const Vec& x);

/// Boundary operator <beta, grad f> + gamma f; for Dirichlet data the trace f.
double boundary_action(const BoundaryCondition& bc, double t, const Jet& f, const Vec& x);

/// Flips (beta, gamma) jointly so that <beta, nu> > 0 on all boundary samples.
/// Also checks |beta| = 1. Dirichlet data pass through.
BoundaryCondition normalize_orientation(const BoundaryCondition& bc, const Domain& domain, double beta_min = 1e-3,
                                        const std::vector<double>& times = {0.0});

/// Boundary points used for orientation and certificate audits.
std::vector<Vec> boundary_audit_points(const Domain& domain, double radius = 32.0, int count = 64);

// ---------------------------------------------------------------------------
// Catalog

using ParamMap = std::map<std::string, double>;

/// Names accepted by make_coefficients.
const std::vector<std::string>& coefficient_catalog();
/// Parameter names (with defaults) of a catalog entry.
const ParamMap& coefficient_defaults(const std::string& name);

/// Builds a bundled coefficient set. Unknown names and parameters throw Config errors.
CoefficientSet make_coefficients(const std::string& name, const ParamMap& params, int dim);

/// Named scalar fields used as Lyapunov, gauge and compactness functions.
const std::vector<std::string>& scalar_field_catalog();
const ParamMap& scalar_field_defaults(const std::string& name);
ScalarField make_scalar_field(const std::string& name, const ParamMap& params, const Domain& domain);

/// zeta(r) = 1/2 + (1 - r/a)^4 / 2 on [0, a), 1/2 beyond; zeta(0) = 1, zeta'(0) = -2/a.
struct Zeta {
  double a = 0.25;
  double value(double r) const;
  double d1(double r) const;
  double d2(double r) const;
};

}  // namespace parevo
