#pragma once

#include "parevo/core.hpp"

#include <array>
#include <limits>
#include <string>
#include <vector>

namespace parevo {

enum class DomainKind { WholeSpace, HalfSpace, ExteriorBall };

const char* to_string(DomainKind kind);

/// Unbounded model domain in dimension 1 or 2.
///
/// HalfSpace has boundary {x_d = 0} and interior x_d > 0. ExteriorBall is the
/// complement of the closed ball of radius rho0 around `center` and exists in
/// two dimensions only. All queries are exact; no meshing is involved.
class Domain {
 public:
  static Domain whole_space(int dim);
  static Domain half_space(int dim);
  static Domain exterior_ball(int dim, const Vec& center, double radius);

  DomainKind kind() const { return kind_; }
  int dim() const { return dim_; }
  const Vec& center() const { return center_; }
  double radius() const { return radius_; }
  bool has_boundary() const { return kind_ != DomainKind::WholeSpace; }
  bool convex() const { return kind_ != DomainKind::ExteriorBall; }

  /// True when x lies in the closure, up to `tol`.
  bool contains(const Vec& x, double tol = 1e-12) const;

  /// Distance to the boundary without membership checks; +inf for WholeSpace
  /// and negative outside the closure.
  double raw_distance(const Vec& x) const;

  /// Projection onto the boundary (pi). Requires has_boundary().
  Vec projection(const Vec& x) const;

  /// Unit outward normal nu at the boundary point closest to x.
  Vec normal_at_projection(const Vec& x) const;

  /// r_Omega with first and second derivatives. Valid away from the center of
  /// an ExteriorBall; throws for WholeSpace.
  Jet distance_jet(const Vec& x) const;

  std::string describe() const;

 private:
  Domain(DomainKind kind, int dim, const Vec& center, double radius);

  DomainKind kind_;
  int dim_;
  Vec center_;
  double radius_;
};

inline constexpr double kNoBoundary = std::numeric_limits<double>::infinity();

/// dist(x, boundary). Returns kNoBoundary for WholeSpace.
double signed_distance(const Domain& domain, const Vec& x);

/// Outward unit normal at a boundary point.
Vec outward_normal(const Domain& domain, const Vec& x);

/// Boundary points of `domain` inside the ball B_radius(around), `count` of
/// them when the boundary there is a curve (one point for the half-line).
std::vector<Vec> boundary_samples(const Domain& domain, const Vec& around, double radius, int count);

enum class BoundaryTag { Interior, Physical, Artificial };

/// Omega intersected with a ball of radius R. Cartesian domains are truncated
/// by the box [-R, R]^d (the sup-norm ball), the exterior ball by the Euclidean
/// disc around its center, so that every truncated boundary is a grid line.
struct TruncatedDomain {
  Domain parent;
  double R = 0.0;
  std::array<double, 2> lower{0.0, 0.0};
  std::array<double, 2> upper{0.0, 0.0};

  bool physical_empty() const { return !parent.has_boundary(); }
  double measure() const;
  bool contains(const Vec& x, double tol = 1e-12) const;
  /// Boundary points of the truncation are Physical when they lie on the
  /// boundary of the parent domain and Artificial otherwise. Points on both
  /// (corners) are Artificial.
  BoundaryTag classify(const Vec& x, double tol = 1e-10) const;
};

TruncatedDomain truncate(const Domain& domain, double R);

using BoundaryVector = std::function<Vec(const Vec& x)>;

/// Boundary-flattening chart around x0 that straightens an oblique direction.
///
/// Built from the exact model chart psi (identity shift for the half-space,
/// polar coordinates for the exterior ball) by the shear
///   phi(x) = (psi^1(x) - a(psi^1(x)) psi^d(x), psi^d(x)),  a = Upsilon^1 / Upsilon^d,
/// where Upsilon = J psi(p) beta(p) at the boundary point p with tangential
/// coordinate psi^1(x). On the boundary J phi beta = rho e_d with
/// rho = -|grad psi^d| <beta, nu>.
class Chart {
 public:
  Chart(Domain domain, Vec x0, double r0, BoundaryVector beta);

  const Domain& domain() const { return domain_; }
  const Vec& base_point() const { return x0_; }
  double radius() const { return r0_; }

  Vec forward(const Vec& x) const;
  Vec inverse(const Vec& y) const;
  Mat jacobian(const Vec& x) const;
  double rho(const Vec& x) const;
  bool covers(const Vec& x) const;

 private:
  Vec psi(const Vec& x) const;
  Vec psi_inverse(const Vec& y) const;
  Mat psi_jacobian(const Vec& x) const;
  double shear(double s) const;
  double shear_slope(double s) const;

  Domain domain_;
  Vec x0_;
  double r0_;
  double theta0_ = 0.0;
  BoundaryVector beta_;
};

/// Builds the chart after checking |<beta, nu>| >= beta_min on boundary
/// samples in B_r0(x0).
Chart build_chart(const Domain& domain, const Vec& x0, BoundaryVector beta, double beta_min = 1e-3);

/// Smooth cutoff equal to 1 on B_r1(center) and vanishing outside B_r2(center).
///
/// The radial profile is the indicator of [0, r1 + eps] mollified with the
/// standard C-infinity kernel of width eps = (r2 - r1) / 6, so the support ends
/// at r1 + 2 eps and |D^k| (r2 - r1)^k is scale invariant. With the half-space
/// flag the center sits on {x_d = 0} and the profile is even in x_d.
class Cutoff {
 public:
  Cutoff(double r1, double r2, bool halfspace, const Vec& center, int dim);

  double inner() const { return r1_; }
  double outer() const { return r2_; }
  double width() const { return eps_; }
  bool halfspace() const { return halfspace_; }
  int dim() const { return dim_; }

  /// k-th derivative (k <= 3) of the radial profile at radius r >= 0.
  double profile(double r, int k = 0) const;
  double value(const Vec& x) const;
  Jet eval(const Vec& x) const;

 private:
  double r1_, r2_, eps_;
  bool halfspace_;
  Vec center_;
  int dim_;
};

Cutoff build_cutoff(double r1, double r2, bool halfspace_flag, const Vec& center = Vec::Zero(), int dim = 1);

/// CDF of the standard mollifier kernel on [-1, 1] and its derivatives, k <= 3.
double mollifier_cdf(double s, int k = 0);

}  // namespace parevo
