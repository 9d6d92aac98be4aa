#include "parevo/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace parevo {

const char* to_string(DomainKind kind) {
  switch (kind) {
    case DomainKind::WholeSpace:
      return "whole";
    case DomainKind::HalfSpace:
      return "halfspace";
    case DomainKind::ExteriorBall:
      return "exterior";
  }
  return "unknown";
}

Domain::Domain(DomainKind kind, int dim, const Vec& center, double radius)
    : kind_(kind), dim_(dim), center_(center), radius_(radius) {}

Domain Domain::whole_space(int dim) {
  if (dim != 1 && dim != 2) throw Error(ErrorKind::Config, "dimension must be 1 or 2");
  return Domain(DomainKind::WholeSpace, dim, Vec::Zero(), 0.0);
}

Domain Domain::half_space(int dim) {
  if (dim != 1 && dim != 2) throw Error(ErrorKind::Config, "dimension must be 1 or 2");
  return Domain(DomainKind::HalfSpace, dim, Vec::Zero(), 0.0);
}

Domain Domain::exterior_ball(int dim, const Vec& center, double radius) {
  if (dim != 2) throw Error(ErrorKind::Config, "exterior ball requires d = 2");
  if (!(radius > 0.0)) throw Error(ErrorKind::Config, "exterior ball radius must be positive");
  return Domain(DomainKind::ExteriorBall, dim, center, radius);
}

double Domain::raw_distance(const Vec& x) const {
  switch (kind_) {
    case DomainKind::WholeSpace:
      return kNoBoundary;
    case DomainKind::HalfSpace:
      return x[dim_ - 1];
    case DomainKind::ExteriorBall:
      return (x - center_).norm() - radius_;
  }
  return kNoBoundary;
}

bool Domain::contains(const Vec& x, double tol) const { return raw_distance(x) >= -tol; }

Vec Domain::projection(const Vec& x) const {
  switch (kind_) {
    case DomainKind::WholeSpace:
      throw Error(ErrorKind::Capability, "whole space has no boundary to project on");
    case DomainKind::HalfSpace: {
      Vec p = x;
      p[dim_ - 1] = 0.0;
      return p;
    }
    case DomainKind::ExteriorBall: {
      const Vec rel = x - center_;
      const double r = rel.norm();
      if (r == 0.0) return center_ + Vec(radius_, 0.0);
      return center_ + radius_ * rel / r;
    }
  }
  return x;
}

Vec Domain::normal_at_projection(const Vec& x) const {
  switch (kind_) {
    case DomainKind::WholeSpace:
      throw Error(ErrorKind::Capability, "whole space has no boundary normal");
    case DomainKind::HalfSpace: {
      Vec n = Vec::Zero();
      n[dim_ - 1] = -1.0;
      return n;
    }
    case DomainKind::ExteriorBall: {
      const Vec rel = x - center_;
      const double r = rel.norm();
      if (r == 0.0) return Vec(-1.0, 0.0);
      return -rel / r;
    }
  }
  return Vec::Zero();
}

Jet Domain::distance_jet(const Vec& x) const {
  Jet j;
  switch (kind_) {
    case DomainKind::WholeSpace:
      throw Error(ErrorKind::Capability, "whole space has no distance function");
    case DomainKind::HalfSpace:
      j.value = x[dim_ - 1];
      j.grad[dim_ - 1] = 1.0;
      return j;
    case DomainKind::ExteriorBall: {
      const Vec rel = x - center_;
      const double r = rel.norm();
      if (r == 0.0) throw Error(ErrorKind::Domain, "distance jet undefined at the ball center");
      const Vec e = rel / r;
      j.value = r - radius_;
      j.grad = e;
      j.hess = (Mat::Identity() - e * e.transpose()) / r;
      return j;
    }
  }
  return j;
}

std::string Domain::describe() const {
  std::ostringstream os;
  os << to_string(kind_) << " d=" << dim_;
  if (kind_ == DomainKind::ExteriorBall) os << " center=(" << center_[0] << "," << center_[1] << ") radius=" << radius_;
  return os.str();
}

double signed_distance(const Domain& domain, const Vec& x) {
  const double d = domain.raw_distance(x);
  if (d < -1e-12) throw Error(ErrorKind::Domain, "point lies outside the closure of " + domain.describe());
  return std::max(d, 0.0);
}

Vec outward_normal(const Domain& domain, const Vec& x) {
  if (!domain.has_boundary()) throw Error(ErrorKind::Capability, "whole space has no boundary");
  if (std::abs(domain.raw_distance(x)) > 1e-10)
    throw Error(ErrorKind::Precondition, "outward_normal requires a boundary point");
  return domain.normal_at_projection(x);
}

std::vector<Vec> boundary_samples(const Domain& domain, const Vec& around, double radius, int count) {
  std::vector<Vec> out;
  switch (domain.kind()) {
    case DomainKind::WholeSpace:
      break;
    case DomainKind::HalfSpace:
      if (domain.dim() == 1) {
        if (std::abs(around[0]) <= radius) out.push_back(point(0.0));
      } else {
        const Vec p = domain.projection(around);
        const double depth = std::abs(around[1]);
        if (depth > radius) break;
        const double half = std::sqrt(radius * radius - depth * depth);
        for (int i = 0; i < count; ++i) {
          const double s = count == 1 ? 0.0 : -half + 2.0 * half * i / (count - 1);
          out.push_back(point(p[0] + s, 0.0));
        }
      }
      break;
    case DomainKind::ExteriorBall: {
      const Vec rel = around - domain.center();
      const double dist = rel.norm();
      const double rho0 = domain.radius();
      // Arc of the circle within B_radius(around).
      double half_angle = std::numbers::pi;
      if (dist > 0.0) {
        const double cosv = (dist * dist + rho0 * rho0 - radius * radius) / (2.0 * dist * rho0);
        if (cosv > 1.0) break;
        if (cosv > -1.0) half_angle = std::acos(cosv);
      }
      const double mid = dist > 0.0 ? std::atan2(rel[1], rel[0]) : 0.0;
      for (int i = 0; i < count; ++i) {
        const double a = count == 1 ? mid : mid - half_angle + 2.0 * half_angle * (i + 0.5) / count;
        out.push_back(domain.center() + rho0 * Vec(std::cos(a), std::sin(a)));
      }
      break;
    }
  }
  return out;
}

double TruncatedDomain::measure() const {
  if (parent.kind() == DomainKind::ExteriorBall)
    return std::numbers::pi * (R * R - parent.radius() * parent.radius());
  double m = 1.0;
  for (int k = 0; k < parent.dim(); ++k) m *= upper[k] - lower[k];
  return m;
}

bool TruncatedDomain::contains(const Vec& x, double tol) const {
  if (!parent.contains(x, tol)) return false;
  if (parent.kind() == DomainKind::ExteriorBall) return (x - parent.center()).norm() <= R + tol;
  for (int k = 0; k < parent.dim(); ++k)
    if (x[k] < lower[k] - tol || x[k] > upper[k] + tol) return false;
  return true;
}

BoundaryTag TruncatedDomain::classify(const Vec& x, double tol) const {
  bool artificial = false;
  if (parent.kind() == DomainKind::ExteriorBall) {
    artificial = std::abs((x - parent.center()).norm() - R) <= tol;
  } else {
    for (int k = 0; k < parent.dim(); ++k) {
      const bool physical_face = parent.kind() == DomainKind::HalfSpace && k == parent.dim() - 1;
      if (std::abs(x[k] - upper[k]) <= tol) artificial = true;
      if (!physical_face && std::abs(x[k] - lower[k]) <= tol) artificial = true;
    }
  }
  if (artificial) return BoundaryTag::Artificial;
  if (parent.has_boundary() && std::abs(parent.raw_distance(x)) <= tol) return BoundaryTag::Physical;
  return BoundaryTag::Interior;
}

TruncatedDomain truncate(const Domain& domain, double R) {
  if (!(R > 0.0)) throw Error(ErrorKind::Domain, "truncation radius must be positive");
  TruncatedDomain td{domain, R, {0.0, 0.0}, {0.0, 0.0}};
  switch (domain.kind()) {
    case DomainKind::WholeSpace:
      for (int k = 0; k < domain.dim(); ++k) {
        td.lower[k] = -R;
        td.upper[k] = R;
      }
      break;
    case DomainKind::HalfSpace:
      for (int k = 0; k < domain.dim(); ++k) {
        td.lower[k] = -R;
        td.upper[k] = R;
      }
      td.lower[domain.dim() - 1] = 0.0;
      break;
    case DomainKind::ExteriorBall:
      if (R <= domain.radius()) throw Error(ErrorKind::Domain, "truncation radius must exceed the ball radius");
      td.lower = {domain.radius(), 0.0};
      td.upper = {R, 2.0 * std::numbers::pi};
      break;
  }
  return td;
}

// ---------------------------------------------------------------------------
// Charts

namespace {

double wrap_angle(double a) {
  a = std::fmod(a + std::numbers::pi, 2.0 * std::numbers::pi);
  if (a < 0.0) a += 2.0 * std::numbers::pi;
  return a - std::numbers::pi;
}

}  // namespace

Chart::Chart(Domain domain, Vec x0, double r0, BoundaryVector beta)
    : domain_(std::move(domain)), x0_(std::move(x0)), r0_(r0), beta_(std::move(beta)) {
  if (domain_.kind() == DomainKind::ExteriorBall) {
    const Vec rel = x0_ - domain_.center();
    theta0_ = std::atan2(rel[1], rel[0]);
  }
}

Vec Chart::psi(const Vec& x) const {
  switch (domain_.kind()) {
    case DomainKind::HalfSpace:
      if (domain_.dim() == 1) return x;
      return Vec(x[0] - x0_[0], x[1]);
    case DomainKind::ExteriorBall: {
      const Vec rel = x - domain_.center();
      const double rho0 = domain_.radius();
      return Vec(rho0 * wrap_angle(std::atan2(rel[1], rel[0]) - theta0_), rel.norm() - rho0);
    }
    default:
      throw Error(ErrorKind::Capability, "charts require a boundary");
  }
}

Vec Chart::psi_inverse(const Vec& y) const {
  switch (domain_.kind()) {
    case DomainKind::HalfSpace:
      if (domain_.dim() == 1) return y;
      return Vec(y[0] + x0_[0], y[1]);
    case DomainKind::ExteriorBall: {
      const double rho0 = domain_.radius();
      const double a = theta0_ + y[0] / rho0;
      return domain_.center() + (rho0 + y[1]) * Vec(std::cos(a), std::sin(a));
    }
    default:
      throw Error(ErrorKind::Capability, "charts require a boundary");
  }
}

Mat Chart::psi_jacobian(const Vec& x) const {
  Mat j = Mat::Zero();
  switch (domain_.kind()) {
    case DomainKind::HalfSpace:
      j(0, 0) = 1.0;
      if (domain_.dim() == 2) j(1, 1) = 1.0;
      return j;
    case DomainKind::ExteriorBall: {
      const Vec rel = x - domain_.center();
      const double r2 = rel.squaredNorm();
      const double r = std::sqrt(r2);
      const double rho0 = domain_.radius();
      j(0, 0) = -rho0 * rel[1] / r2;
      j(0, 1) = rho0 * rel[0] / r2;
      j(1, 0) = rel[0] / r;
      j(1, 1) = rel[1] / r;
      return j;
    }
    default:
      throw Error(ErrorKind::Capability, "charts require a boundary");
  }
}

double Chart::shear(double s) const {
  if (domain_.dim() == 1) return 0.0;
  const Vec p = psi_inverse(Vec(s, 0.0));
  const Vec upsilon = psi_jacobian(p) * beta_(p);
  return upsilon[0] / upsilon[1];
}

double Chart::shear_slope(double s) const {
  if (domain_.dim() == 1) return 0.0;
  const double step = 1e-5;
  return (shear(s + step) - shear(s - step)) / (2.0 * step);
}

Vec Chart::forward(const Vec& x) const {
  const Vec p = psi(x);
  if (domain_.dim() == 1) return p;
  return Vec(p[0] - shear(p[0]) * p[1], p[1]);
}

Vec Chart::inverse(const Vec& y) const {
  if (domain_.dim() == 1) return psi_inverse(y);
  // Solve s - a(s) y_d = y_1 for the tangential coordinate s.
  double s = y[0];
  for (int it = 0; it < 50; ++it) {
    const double residual = s - shear(s) * y[1] - y[0];
    const double slope = 1.0 - shear_slope(s) * y[1];
    const double delta = residual / slope;
    s -= delta;
    if (std::abs(delta) < 1e-15 * std::max(1.0, std::abs(s))) break;
  }
  return psi_inverse(Vec(s, y[1]));
}

Mat Chart::jacobian(const Vec& x) const {
  const Mat jp = psi_jacobian(x);
  if (domain_.dim() == 1) return jp;
  const Vec p = psi(x);
  const double a = shear(p[0]);
  const double da = shear_slope(p[0]);
  Mat j = jp;
  j.row(0) = jp.row(0) - da * p[1] * jp.row(0) - a * jp.row(1);
  return j;
}

double Chart::rho(const Vec& x) const {
  const Mat jp = psi_jacobian(x);
  const Vec grad_d = jp.row(domain_.dim() - 1).transpose();
  return -norm(grad_d, domain_.dim()) * beta_(x).dot(domain_.normal_at_projection(x));
}

bool Chart::covers(const Vec& x) const { return (x - x0_).norm() < r0_ && domain_.contains(x, 1e-12); }

Chart build_chart(const Domain& domain, const Vec& x0, BoundaryVector beta, double beta_min) {
  if (!domain.has_boundary()) throw Error(ErrorKind::Capability, "whole space has no boundary to flatten");
  if (std::abs(domain.raw_distance(x0)) > 1e-10)
    throw Error(ErrorKind::Precondition, "chart base point must lie on the boundary");
  const double r0 = domain.kind() == DomainKind::ExteriorBall ? 0.5 * domain.radius() : 1.0;
  for (const Vec& p : boundary_samples(domain, x0, r0, 64)) {
    const double proj = beta(p).dot(domain.normal_at_projection(p));
    if (std::abs(proj) < beta_min)
      throw Error(ErrorKind::Precondition, "boundary field is tangential near the chart base point");
  }
  return Chart(domain, x0, r0, std::move(beta));
}

// ---------------------------------------------------------------------------
// Cutoffs

namespace {

double kernel_raw(double s) {
  if (std::abs(s) >= 1.0) return 0.0;
  return std::exp(-1.0 / (1.0 - s * s));
}

struct MollifierTable {
  static constexpr int kCells = 2048;
  double norm = 0.0;
  std::vector<double> cdf;

  MollifierTable() {
    // 8-point Gauss-Legendre per cell; the integrand is flat at both ends.
    static constexpr double nodes[8] = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                                        -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                                        0.7966664774136267,  0.9602898564975363};
    static constexpr double weights[8] = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                                          0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                                          0.2223810344533745, 0.1012285362903763};
    cdf.assign(kCells + 1, 0.0);
    const double h = 2.0 / kCells;
    for (int i = 0; i < kCells; ++i) {
      const double a = -1.0 + i * h;
      double acc = 0.0;
      for (int q = 0; q < 8; ++q) acc += weights[q] * kernel_raw(a + 0.5 * h * (nodes[q] + 1.0));
      cdf[i + 1] = cdf[i] + 0.5 * h * acc;
    }
    norm = cdf[kCells];
    for (double& v : cdf) v /= norm;
  }
};

const MollifierTable& table() {
  static const MollifierTable t;
  return t;
}

}  // namespace

double mollifier_cdf(double s, int k) {
  const auto& t = table();
  if (s <= -1.0) return 0.0;
  if (s >= 1.0) return k == 0 ? 1.0 : 0.0;
  const double w = 1.0 - s * s;
  const double kv = kernel_raw(s) / t.norm;
  switch (k) {
    case 0: {
      // Cubic Hermite interpolation using the exact derivative.
      const double h = 2.0 / MollifierTable::kCells;
      const double pos = (s + 1.0) / h;
      const int i = std::min(static_cast<int>(pos), MollifierTable::kCells - 1);
      const double a = -1.0 + i * h;
      const double u = (s - a) / h;
      const double m0 = kernel_raw(a) / t.norm * h;
      const double m1 = kernel_raw(a + h) / t.norm * h;
      const double h00 = 2 * u * u * u - 3 * u * u + 1, h10 = u * u * u - 2 * u * u + u;
      const double h01 = -2 * u * u * u + 3 * u * u, h11 = u * u * u - u * u;
      return h00 * t.cdf[i] + h10 * m0 + h01 * t.cdf[i + 1] + h11 * m1;
    }
    case 1:
      return kv;
    case 2:
      return kv * (-2.0 * s / (w * w));
    case 3:
      return kv * (4.0 * s * s / (w * w * w * w) - 2.0 / (w * w) - 8.0 * s * s / (w * w * w));
    default:
      throw Error(ErrorKind::Precondition, "mollifier derivatives available up to order 3");
  }
}

Cutoff::Cutoff(double r1, double r2, bool halfspace, const Vec& center, int dim)
    : r1_(r1), r2_(r2), eps_((r2 - r1) / 6.0), halfspace_(halfspace), center_(center), dim_(dim) {}

double Cutoff::profile(double r, int k) const {
  // P(r) = M((r1 + eps - r) / eps); each r-derivative brings a factor -1/eps.
  const double s = (r1_ + eps_ - r) / eps_;
  const double sign = (k % 2 == 0) ? 1.0 : -1.0;
  return sign * std::pow(eps_, -k) * mollifier_cdf(s, k);
}

double Cutoff::value(const Vec& x) const {
  Vec rel = x - center_;
  if (halfspace_) rel[dim_ - 1] = std::abs(rel[dim_ - 1]);
  return profile(norm(rel, dim_));
}

Jet Cutoff::eval(const Vec& x) const {
  Jet j;
  const Vec rel = x - center_;
  const double r = norm(rel, dim_);
  j.value = profile(r);
  if (r < r1_ || r > r1_ + 2.0 * eps_) return j;  // flat regions
  const double p1 = profile(r, 1), p2 = profile(r, 2);
  if (dim_ == 1) {
    const double sgn = rel[0] >= 0.0 ? 1.0 : -1.0;
    j.grad[0] = p1 * sgn;
    j.hess(0, 0) = p2;
    return j;
  }
  const Vec e = rel / r;
  j.grad = p1 * e;
  j.hess = p2 * e * e.transpose() + (p1 / r) * (Mat::Identity() - e * e.transpose());
  return j;
}

Cutoff build_cutoff(double r1, double r2, bool halfspace_flag, const Vec& center, int dim) {
  if (!(r1 > 0.0) || !(r2 > r1)) throw Error(ErrorKind::Precondition, "cutoff radii must satisfy 0 < r1 < r2");
  if (dim != 1 && dim != 2) throw Error(ErrorKind::Config, "dimension must be 1 or 2");
  if (halfspace_flag && std::abs(center[dim - 1]) > 0.0)
    throw Error(ErrorKind::Precondition, "half-space cutoffs are centered on {x_d = 0}");
  return Cutoff(r1, r2, halfspace_flag, center, dim);
}

}  // namespace parevo
