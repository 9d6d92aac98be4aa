#pragma once

#include "parevo/core.hpp"
#include "parevo/fields.hpp"
#include "parevo/geometry.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace parevo {

// Certificates are sampled evidence, not proofs: every hypothesis that
// quantifies over an unbounded set is checked on a finite quasi-random cloud.

struct SamplePoint {
  double t;
  Vec x;
};

struct SamplerConfig {
  double s = 0.0;
  double T = 1.0;
  double radius = 32.0;
  int interior = 4096;
  int boundary = 512;
  std::uint64_t seed = 1;
};

struct SampleCloud {
  std::vector<SamplePoint> interior;
  std::vector<SamplePoint> boundary;
  SamplerConfig config;

  std::string describe() const;
};

/// Halton points in J x (Omega cap B_radius), uniform in the radial
/// coordinate, shifted by a seed-dependent rotation; boundary points likewise.
SampleCloud make_cloud(const Domain& domain, const SamplerConfig& cfg);

/// Points of the strip {0 < r_Omega <= delta0} taken from a Halton sequence.
std::vector<SamplePoint> strip_samples(const Domain& domain, const SamplerConfig& cfg, double delta0, double radius);

inline constexpr double kSlack = 1e-8;

struct BlowupCheck {
  std::vector<double> radii;
  std::vector<double> minima;
  bool pass = false;
};

/// min of phi over |x| = 2^k, k = 0..6 (radii inside the hole of an exterior
/// ball are skipped); passes when the minima increase strictly and the last
/// one exceeds ten times the first.
BlowupCheck check_blowup(const Domain& domain, const ScalarField& phi, const std::vector<double>& times);

struct EllipticityReport {
  double eta0 = 0.0;
  double c_min = 0.0;
  double c0 = 0.0;
  bool c0_ok = false;
  bool pass = false;
  std::string cloud;
  void write(std::ostream& os) const;
};

struct LyapunovCertificate {
  double lambda = 0.0;
  double s = 0.0, T = 0.0;
  double margin = 0.0;
  double boundary_margin = 0.0;  // +inf for Dirichlet data
  BlowupCheck blowup;
  bool pass = false;
  void write(std::ostream& os) const;
};

struct GaugeCertificate {
  double H = 0.0;
  double inf_phi = 0.0, sup_phi = 0.0;
  double M = 0.0;
  double margin = 0.0;           // min of H phi + D_t phi - A phi
  double boundary_margin = 0.0;  // min of B phi
  bool pass = false;
  void write(std::ostream& os) const;
};

struct CompactnessCertificate {
  double c1 = 0.0, c2 = 0.0, eps = 0.0;
  double margin = 0.0;  // min of c2 - c1 psi^(1+eps) - A psi
  BlowupCheck blowup;
  bool pass = false;
  void write(std::ostream& os) const;
};

struct GradientHypothesesReport {
  double M1 = 0.0, L1 = 0.0, L2 = 0.0, L3 = 0.0, L4 = 0.0, L5 = 0.0;
  double delta0 = 0.0;
  double strip_sup_inner = 0.0, strip_sup_outer = 0.0;
  bool strip_bounded = false;
  bool pass = false;
  void write(std::ostream& os) const;

  /// Worst violation of the three fitted bounds on a cloud: (fraction violated, max violation).
  std::pair<double, double> audit(const CoefficientSet& coeffs, const SampleCloud& cloud) const;
};

EllipticityReport check_ellipticity(const CoefficientSet& coeffs, const Domain& domain, const SampleCloud& cloud);

LyapunovCertificate check_lyapunov(const CoefficientSet& coeffs, const BoundaryCondition& bc, const Domain& domain,
                                   const ScalarField& phi, double lambda, const SampleCloud& cloud);

GaugeCertificate check_gauge(const CoefficientSet& coeffs, const BoundaryCondition& bc, const Domain& domain,
                             const ScalarField& phi, double H, const SampleCloud& cloud);

CompactnessCertificate check_compactness(const CoefficientSet& coeffs, const Domain& domain, const ScalarField& psi,
                                         double c1, double c2, double eps, const SampleCloud& cloud);

GradientHypothesesReport check_gradient_hypotheses(const CoefficientSet& coeffs, const Domain& domain, double delta0,
                                                   const SampleCloud& cloud);

/// (A~, B~) with A~ v = (A + c) v + (2/phi) <Q grad phi, grad v> - (H + D_t phi/phi - A phi/phi) v
/// and B~ v = <beta, grad v> + (B phi / phi) v.
std::pair<CoefficientSet, BoundaryCondition> gauge_transform(const CoefficientSet& coeffs,
                                                             const BoundaryCondition& bc, const ScalarField& phi,
                                                             double H, const Domain& domain);

/// Gamma(x) = g x_d theta(x_d) on the half-space, with theta a flat cutoff that
/// equals 1 near x_d = 0 and vanishes for x_d >= delta, and g chosen so that
/// v = e^Gamma u turns the Robin condition into a Neumann one.
struct RobinGauge {
  double g = 0.0;  // D_d Gamma on the boundary
  double delta = 1.0;
  int dim = 1;
  Cutoff theta{0.5, 1.0, true, Vec::Zero(), 1};
  double L6 = 0.0, L7 = 0.0;
  bool support_ok = false;
  double trace_error = 0.0;
  bool pass = false;

  /// Derivatives of Gamma in x_d up to order 3.
  std::array<double, 4> profile(double xd) const;
  Jet eval(const Vec& x) const;
  ScalarField field() const;
  void write(std::ostream& os) const;
};

/// Requires a half-space with normal beta and constant gamma.
RobinGauge build_robin_gauge(const CoefficientSet& coeffs, const BoundaryCondition& bc, const Domain& domain,
                             double delta, const SampleCloud& cloud);

/// (Q, b - 2 Q grad Gamma, c + (A + c) Gamma - <Q grad Gamma, grad Gamma>).
CoefficientSet robin_to_neumann(const CoefficientSet& coeffs, const RobinGauge& gauge, const Domain& domain);

}  // namespace parevo
