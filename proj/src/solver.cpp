#include "parevo/solver.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

namespace parevo {

bool Window::contains(const Vec& native, double tol) const {
  for (int k = 0; k < 2; ++k)
    if (native[k] < lower[k] - tol || native[k] > upper[k] + tol) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Grid

std::shared_ptr<const Grid> Grid::build(const TruncatedDomain& td, double h, double h_theta) {
  if (!(h > 0.0)) throw Error(ErrorKind::Config, "grid spacing must be positive");
  std::shared_ptr<Grid> g(new Grid());
  g->td_ = td;
  g->dim_ = td.parent.dim();
  const bool polar = td.parent.kind() == DomainKind::ExteriorBall;
  g->kind_ = polar ? GridKind::Polar : GridKind::Cartesian;

  for (int a = 0; a < g->dim_; ++a) {
    const double len = td.upper[a] - td.lower[a];
    if (polar && a == 1) {
      const double ht = h_theta > 0.0 ? h_theta : 2.0 * std::numbers::pi / 128.0;
      g->n_[1] = std::max(8, static_cast<int>(std::lround(len / ht)));
      g->h_[1] = len / g->n_[1];
    } else {
      const int cells = std::max(2, static_cast<int>(std::lround(len / h)));
      g->n_[a] = cells + 1;
      g->h_[a] = len / cells;
    }
    g->lo_[a] = td.lower[a];
  }
  if (g->dim_ == 1) g->n_[1] = 1;

  const int total = g->n_[0] * g->n_[1];
  g->nodes_.resize(total);
  g->tags_.resize(total);
  g->weights_.resize(total);
  for (int j = 0; j < g->n_[1]; ++j) {
    for (int i = 0; i < g->n_[0]; ++i) {
      const int k = g->index(i, j);
      const double u = g->lo_[0] + i * g->h_[0];
      const double v = g->dim_ == 2 ? g->lo_[1] + j * g->h_[1] : 0.0;
      const bool end0 = i == 0 || i == g->n_[0] - 1;
      double w0 = g->h_[0] * (end0 ? 0.5 : 1.0);
      if (polar) {
        g->nodes_[k] = td.parent.center() + u * Vec(std::cos(v), std::sin(v));
        g->weights_[k] = w0 * u * g->h_[1];
        g->tags_[k] = i == 0 ? BoundaryTag::Physical
                             : (i == g->n_[0] - 1 ? BoundaryTag::Artificial : BoundaryTag::Interior);
        continue;
      }
      g->nodes_[k] = Vec(u, v);
      double w = w0;
      bool face = end0;
      if (g->dim_ == 2) {
        const bool end1 = j == 0 || j == g->n_[1] - 1;
        w *= g->h_[1] * (end1 ? 0.5 : 1.0);
        face = face || end1;
      }
      g->weights_[k] = w;
      if (!face) {
        g->tags_[k] = BoundaryTag::Interior;
        continue;
      }
      // Faces: the lower x_d face of a half-space is physical, corners excepted.
      const int d = g->dim_ - 1;
      const int along = d == 0 ? i : j;
      bool physical = td.parent.kind() == DomainKind::HalfSpace && along == 0;
      if (physical && g->dim_ == 2 && (i == 0 || i == g->n_[0] - 1)) physical = false;
      g->tags_[k] = physical ? BoundaryTag::Physical : BoundaryTag::Artificial;
    }
  }
  return g;
}

Vec Grid::native(int k) const {
  const int i = axis_index(k, 0), j = axis_index(k, 1);
  return Vec(lo_[0] + i * h_[0], dim_ == 2 ? lo_[1] + j * h_[1] : 0.0);
}

Vec Grid::to_native(const Vec& x) const {
  if (kind_ == GridKind::Cartesian) return dim_ == 1 ? Vec(x[0], 0.0) : x;
  const Vec rel = x - td_.parent.center();
  double th = std::atan2(rel[1], rel[0]);
  if (th < 0.0) th += 2.0 * std::numbers::pi;
  return Vec(rel.norm(), th);
}

Mat Grid::frame(int k) const {
  if (kind_ == GridKind::Cartesian) return Mat::Identity();
  const double th = native(k)[1];
  Mat R;
  R << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
  return R;
}

std::vector<int> Grid::window_nodes(const Window& K, bool include_physical) const {
  std::vector<int> out;
  for (int k = 0; k < size(); ++k) {
    if (tags_[k] == BoundaryTag::Artificial) continue;
    if (!include_physical && tags_[k] == BoundaryTag::Physical) continue;
    if (K.contains(native(k), 1e-9)) out.push_back(k);
  }
  return out;
}

std::string Grid::describe() const {
  std::ostringstream os;
  os << (kind_ == GridKind::Polar ? "polar " : "cartesian ") << n_[0];
  if (dim_ == 2) os << "x" << n_[1];
  os << " nodes, h=" << h_[0];
  if (dim_ == 2) os << "/" << h_[1];
  os << ", R=" << td_.R;
  return os.str();
}

// ---------------------------------------------------------------------------
// DiscreteField

DiscreteField DiscreteField::sample(GridPtr grid, const InitialData& f, double t) {
  DiscreteField u{grid, Eigen::VectorXd(grid->size()), t};
  for (int k = 0; k < grid->size(); ++k) u.values[k] = f(grid->node(k));
  return u;
}

namespace {

// Four-point Lagrange weights at fractional index s; the stencil is shifted to
// stay inside [0, n) unless the axis is periodic.
int lagrange4(double s, int n, bool periodic, double w[4]) {
  int i0 = static_cast<int>(std::floor(s)) - 1;
  if (!periodic) i0 = std::clamp(i0, 0, std::max(0, n - 4));
  const int m = std::min(4, n);
  for (int a = 0; a < 4; ++a) {
    if (a >= m) {
      w[a] = 0.0;
      continue;
    }
    double v = 1.0;
    for (int b = 0; b < m; ++b)
      if (b != a) v *= (s - (i0 + b)) / static_cast<double>(a - b);
    w[a] = v;
  }
  return i0;
}

int wrap(int i, int n) { return ((i % n) + n) % n; }

}  // namespace

double DiscreteField::interpolate(const Vec& x) const {
  const Grid& g = *grid;
  const Vec p = g.to_native(x);
  double w0[4], w1[4] = {1.0, 0.0, 0.0, 0.0};
  const int i0 = lagrange4((p[0] - g.origin(0)) / g.step(0), g.count(0), false, w0);
  int j0 = 0;
  if (g.dim() == 2) j0 = lagrange4((p[1] - g.origin(1)) / g.step(1), g.count(1), g.periodic(1), w1);
  double sum = 0.0;
  const int m0 = std::min(4, g.count(0));
  const int m1 = g.dim() == 2 ? std::min(4, g.count(1)) : 1;
  for (int b = 0; b < m1; ++b) {
    const int j = g.dim() == 2 ? (g.periodic(1) ? wrap(j0 + b, g.count(1)) : j0 + b) : 0;
    for (int a = 0; a < m0; ++a) sum += w0[a] * w1[b] * values[g.index(i0 + a, j)];
  }
  return sum;
}

Vec DiscreteField::gradient(int k) const {
  const Grid& g = *grid;
  Vec d = Vec::Zero();
  const int idx[2] = {g.axis_index(k, 0), g.axis_index(k, 1)};
  for (int a = 0; a < g.dim(); ++a) {
    const int n = g.count(a);
    const double h = g.step(a);
    auto at = [&](int off) {
      int ii[2] = {idx[0], idx[1]};
      ii[a] = g.periodic(a) ? wrap(ii[a] + off, n) : ii[a] + off;
      return values[g.index(ii[0], ii[1])];
    };
    if (g.periodic(a) || (idx[a] > 0 && idx[a] < n - 1))
      d[a] = (at(1) - at(-1)) / (2.0 * h);
    else if (idx[a] == 0)
      d[a] = (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h);
    else
      d[a] = (3.0 * at(0) - 4.0 * at(-1) + at(-2)) / (2.0 * h);
  }
  if (g.kind() == GridKind::Cartesian) return d;
  const double r = g.native(k)[0];
  const Mat R = g.frame(k);
  return R.col(0) * d[0] + R.col(1) * (d[1] / r);
}

double DiscreteField::sup(const std::vector<int>& nodes) const {
  double m = 0.0;
  for (int k : nodes) m = std::max(m, std::abs(values[k]));
  return m;
}

void DiscreteField::check_finite() const {
  if (!values.allFinite()) throw Error(ErrorKind::Numerical, "non-finite values in discrete field");
}

void SchemeConfig::validate() const {
  if (!(dt > 0.0)) throw Error(ErrorKind::Config, "time step must be positive");
  if (!(theta >= 0.0 && theta <= 1.0)) throw Error(ErrorKind::Config, "theta must lie in [0, 1]");
  if (rannacher < 0 || rannacher % 2) throw Error(ErrorKind::Config, "rannacher substeps must be even and >= 0");
}

// ---------------------------------------------------------------------------
// Assembly

namespace {

struct Lin {
  std::vector<std::pair<int, double>> terms;
  void add(int j, double c) { terms.emplace_back(j, c); }
  void add(const Lin& o, double s) {
    for (const auto& [j, c] : o.terms) terms.emplace_back(j, c * s);
  }
};

struct Stencils {
  const Grid& g;

  int nb(int k, int axis, int off) const {
    int ii[2] = {g.axis_index(k, 0), g.axis_index(k, 1)};
    ii[axis] = g.periodic(axis) ? wrap(ii[axis] + off, g.count(axis)) : ii[axis] + off;
    return g.index(ii[0], ii[1]);
  }
  Lin central(int k, int a) const {
    Lin l;
    const double h = g.step(a);
    l.add(nb(k, a, 1), 0.5 / h);
    l.add(nb(k, a, -1), -0.5 / h);
    return l;
  }
  Lin onesided(int k, int a, int dir) const {
    Lin l;
    const double h = g.step(a);
    l.add(nb(k, a, dir), dir / h);
    l.add(k, -dir / h);
    return l;
  }
  Lin second(int k, int a) const {
    Lin l;
    const double h2 = g.step(a) * g.step(a);
    l.add(nb(k, a, 1), 1.0 / h2);
    l.add(k, -2.0 / h2);
    l.add(nb(k, a, -1), 1.0 / h2);
    return l;
  }
  Lin cross(int k) const {
    Lin l;
    const double s = 0.25 / (g.step(0) * g.step(1));
    for (int a : {-1, 1})
      for (int b : {-1, 1}) l.add(nb(nb(k, 0, a), 1, b), a * b * s);
    return l;
  }
};

}  // namespace

AssembledOperator assemble(const CoefficientSet& coeffs, const BoundaryCondition& bc, const Grid& grid, double t,
                           const SchemeConfig& scheme, double t_boundary) {
  const int n = grid.size();
  const int d = grid.dim();
  const bool polar = grid.kind() == GridKind::Polar;
  AssembledOperator op;
  op.constrained.assign(n, 0);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<size_t>(n) * (d == 1 ? 4 : 12));
  Stencils st{grid};

  for (int k = 0; k < n; ++k) {
    const BoundaryTag tag = grid.tag(k);
    if (tag == BoundaryTag::Artificial || (tag == BoundaryTag::Physical && bc.dirichlet())) {
      op.constrained[k] = 1;
      continue;
    }
    const bool boundary = tag == BoundaryTag::Physical;
    const double tr = boundary ? t_boundary : t;
    const Vec& x = grid.node(k);
    const Mat R = grid.frame(k);
    const Mat Qf = R.transpose() * coeffs.Q(tr, x) * R;
    const Vec bf = R.transpose() * coeffs.b(tr, x);
    const double c = coeffs.c(tr, x);
    const double r = polar ? grid.native(k)[0] : 1.0;
    // Conversion from native to frame first derivatives (1/r on the angle).
    const double scale[2] = {1.0, polar ? 1.0 / r : 1.0};

    Lin N[2], NN[2], N01;
    const int m = polar ? 0 : d - 1;  // native (and frame) normal axis on the physical boundary
    for (int a = 0; a < d; ++a) {
      if (boundary && a == m) continue;
      N[a] = st.central(k, a);
      NN[a] = st.second(k, a);
    }
    Lin F;  // frame normal derivative from the boundary condition
    if (boundary) {
      const Vec bfb = R.transpose() * bc.beta(tr, x);
      if (std::abs(bfb[m]) < scheme.beta_min)
        throw Error(ErrorKind::Precondition, "boundary field is tangential at a boundary node (non-tangentiality)");
      F.add(k, -bc.gamma(tr, x) / bfb[m]);
      for (int a = 0; a < d; ++a)
        if (a != m) F.add(N[a], -bfb[a] * scale[a] / bfb[m]);
      // Ghost value u_{-1} = u_{+1} - 2 h F.
      const double h = grid.step(m);
      N[m] = F;
      NN[m].add(st.nb(k, m, 1), 2.0 / (h * h));
      NN[m].add(k, -2.0 / (h * h));
      NN[m].add(F, -2.0 / h);
      if (d == 2) {
        const int a = 1 - m;
        const int k1 = st.nb(k, m, 1), k2 = st.nb(k, m, 2);
        // One-sided normal derivative of the central tangential derivative.
        N01.add(st.central(k, a), -1.5 / h);
        N01.add(st.central(k1, a), 2.0 / h);
        N01.add(st.central(k2, a), -0.5 / h);
      }
    } else if (d == 2) {
      N01 = st.cross(k);
    }

    // Frame Hessian.
    Lin H[2], H01;
    if (!polar) {
      H[0] = NN[0];
      if (d == 2) {
        H[1] = NN[1];
        H01 = N01;
      }
    } else {
      H[0] = NN[0];
      H[1].add(N[0], 1.0 / r);
      H[1].add(NN[1], 1.0 / (r * r));
      H01.add(N01, 1.0 / r);
      H01.add(N[1], -1.0 / (r * r));
    }

    Lin row;
    for (int a = 0; a < d; ++a) row.add(H[a], Qf(a, a));
    if (d == 2) row.add(H01, 2.0 * Qf(0, 1));
    bool upwinded = false;
    for (int a = 0; a < d; ++a) {
      if (bf[a] == 0.0) continue;
      if (boundary && a == m) {
        row.add(F, bf[a]);
        continue;
      }
      const double heff = grid.step(a) / scale[a];
      const double peclet = std::abs(bf[a]) * heff / (2.0 * Qf(a, a));
      if (scheme.drift == DriftScheme::Upwind && peclet > 2.0) {
        row.add(st.onesided(k, a, bf[a] > 0.0 ? 1 : -1), bf[a] * scale[a]);
        upwinded = true;
      } else {
        row.add(N[a], bf[a] * scale[a]);
      }
    }
    row.add(k, -c);
    if (upwinded) ++op.upwind_rows;
    for (const auto& [j, v] : row.terms) trip.emplace_back(k, j, v);
  }
  op.A.resize(n, n);
  op.A.setFromTriplets(trip.begin(), trip.end());
  op.A.makeCompressed();
  return op;
}

// ---------------------------------------------------------------------------
// Time stepping

struct Propagator::Factor {
  Eigen::SparseMatrix<double> M, E;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  std::vector<char> constrained;
};

Propagator::Propagator(CoefficientSet coeffs, BoundaryCondition bc, GridPtr grid, SchemeConfig scheme)
    : coeffs_(std::move(coeffs)), bc_(std::move(bc)), grid_(std::move(grid)), scheme_(scheme) {
  scheme_.validate();
  autonomous_ = !coeffs_.time_dependent && (bc_.dirichlet() || !bc_.time_dependent);
}

int Propagator::steps(double s, double t) const {
  if (!(t > s)) return 0;
  return std::max(1, static_cast<int>(std::ceil((t - s) / scheme_.dt - 1e-9)));
}

int Propagator::upwind_rows() const {
  if (!frozen_) frozen_ = std::make_shared<AssembledOperator>(assemble(coeffs_, bc_, *grid_, 0.0, scheme_));
  return frozen_->upwind_rows;
}

namespace {

std::shared_ptr<Eigen::SparseMatrix<double>> identity(int n) {
  auto I = std::make_shared<Eigen::SparseMatrix<double>>(n, n);
  I->setIdentity();
  return I;
}

}  // namespace

const Propagator::Factor& Propagator::factor(double t, double dt, double theta) const {
  // Caller guarantees autonomy; the cache key is (dt, theta).
  (void)t;
  auto key = std::make_pair(dt, theta);
  auto it = cache_.find(key);
  if (it != cache_.end()) return *it->second;
  if (!frozen_) frozen_ = std::make_shared<AssembledOperator>(assemble(coeffs_, bc_, *grid_, 0.0, scheme_));
  auto f = std::make_shared<Factor>();
  const auto I = identity(grid_->size());
  f->M = *I - theta * dt * frozen_->A;
  f->E = *I + (1.0 - theta) * dt * frozen_->A;
  f->constrained = frozen_->constrained;
  f->lu.compute(f->M);
  if (f->lu.info() != Eigen::Success)
    throw Error(ErrorKind::Numerical, "sparse LU factorization failed: " + f->lu.lastErrorMessage());
  cache_[key] = f;
  return *f;
}

Eigen::MatrixXd Propagator::step(const Eigen::MatrixXd& U, double t, double dt, double theta) const {
  std::shared_ptr<Factor> local;
  const Factor* f = nullptr;
  if (autonomous_) {
    f = &factor(t, dt, theta);
  } else {
    local = std::make_shared<Factor>();
    const auto I = identity(grid_->size());
    const AssembledOperator imp = assemble(coeffs_, bc_, *grid_, t + dt, scheme_, t + dt);
    local->M = *I - theta * dt * imp.A;
    if (theta < 1.0) {
      const AssembledOperator exp = assemble(coeffs_, bc_, *grid_, t, scheme_, t + dt);
      local->E = *I + (1.0 - theta) * dt * exp.A;
    } else {
      local->E = *I;
    }
    local->constrained = imp.constrained;
    local->lu.compute(local->M);
    if (local->lu.info() != Eigen::Success)
      throw Error(ErrorKind::Numerical, "sparse LU factorization failed: " + local->lu.lastErrorMessage());
    f = local.get();
  }
  Eigen::MatrixXd rhs = f->E * U;
  for (int k = 0; k < rhs.rows(); ++k)
    if (f->constrained[k]) rhs.row(k).setZero();
  Eigen::MatrixXd X = f->lu.solve(rhs);
  const double scale = std::max(rhs.norm(), std::numeric_limits<double>::min());
  Eigen::MatrixXd res = rhs - f->M * X;
  if (res.norm() > 1e-10 * scale) {
    X += f->lu.solve(res);
    res = rhs - f->M * X;
    if (res.norm() > 1e-10 * scale) {
      std::ostringstream os;
      os << "linear solve residual " << res.norm() / scale << " exceeds 1e-10 at t=" << t << " (dt=" << dt
         << ", " << grid_->describe() << ")";
      throw Error(ErrorKind::Numerical, os.str());
    }
  }
  return X;
}

Eigen::MatrixXd Propagator::run(Eigen::MatrixXd U, double s, double t, const Callback& cb) const {
  if (t < s) throw Error(ErrorKind::Precondition, "evolution requires t >= s");
  for (int k = 0; k < grid_->size(); ++k) {
    const BoundaryTag tag = grid_->tag(k);
    if (tag == BoundaryTag::Artificial || (tag == BoundaryTag::Physical && bc_.dirichlet())) U.row(k).setZero();
  }
  const int n = steps(s, t);
  if (n == 0) return U;
  const double dt = (t - s) / n;
  const double ref = U.cwiseAbs().maxCoeff();
  const int startup = scheme_.theta < 1.0 ? std::min(n, scheme_.rannacher / 2) : 0;
  for (int i = 0; i < n; ++i) {
    const double ti = s + i * dt;
    if (i < startup) {
      U = step(U, ti, 0.5 * dt, 1.0);
      U = step(U, ti + 0.5 * dt, 0.5 * dt, 1.0);
    } else {
      U = step(U, ti, dt, scheme_.theta);
    }
    const double now = (i + 1 == n) ? t : s + (i + 1) * dt;
    const double mx = U.cwiseAbs().maxCoeff();
    if (!std::isfinite(mx) || (ref > 0.0 && mx > scheme_.blowup * ref)) {
      std::ostringstream os;
      os << "unstable growth: |u| = " << mx << " exceeds " << scheme_.blowup << " |f| at t=" << now
         << "; try upwind drift or a smaller time step";
      throw Error(ErrorKind::Numerical, os.str());
    }
    if (cb) cb(now, U);
  }
  return U;
}

DiscreteField step(const DiscreteField& state, const CoefficientSet& coeffs, const BoundaryCondition& bc,
                   const SchemeConfig& scheme, double t, double dt) {
  Propagator p(coeffs, bc, state.grid, scheme);
  DiscreteField out{state.grid, p.step(state.values, t, dt, scheme.theta), t + dt};
  return out;
}

DiscreteField solve_cauchy(const SolveRequest& req, const FieldCallback& cb) {
  if (!(req.t >= req.s)) throw Error(ErrorKind::Precondition, "solve requires t >= s");
  if (!req.f) throw Error(ErrorKind::Config, "initial datum missing");
  const BoundaryCondition bc = normalize_orientation(req.bc, req.domain, req.scheme.beta_min, {req.s, req.t});
  GridPtr grid = Grid::build(truncate(req.domain, req.R), req.h, req.h_theta);
  Propagator prop(req.coeffs, bc, grid, req.scheme);
  DiscreteField u = DiscreteField::sample(grid, req.f, req.s);
  Propagator::Callback inner;
  if (cb) inner = [&](double t, const Eigen::MatrixXd& U) { cb(DiscreteField{grid, U.col(0), t}); };
  u.values = prop.run(u.values, req.s, req.t, inner).col(0);
  u.t = req.t;
  u.check_finite();
  return u;
}

double window_difference(const DiscreteField& coarse, const DiscreteField& fine, const Window& K) {
  double diff = 0.0;
  for (int k : coarse.grid->window_nodes(K)) {
    const double v = fine.interpolate(coarse.grid->node(k));
    diff = std::max(diff, std::abs(v - coarse.values[k]));
  }
  return diff;
}

Refinement refine_until(const SolveRequest& req, const Window& K, double tol, int max_refinements,
                        bool throw_on_failure) {
  Refinement out;
  SolveRequest cur = req;
  out.field = solve_cauchy(cur);
  out.log.push_back({cur.R, cur.h, cur.scheme.dt, std::numeric_limits<double>::quiet_NaN()});
  if (max_refinements == 0) {
    out.converged = true;
    return out;
  }
  for (int level = 1; level <= max_refinements; ++level) {
    if (level % 2 == 1) {
      cur.R *= 2.0;
    } else {
      cur.h *= 0.5;
      cur.h_theta *= 0.5;
      cur.scheme.dt *= 0.5;
    }
    DiscreteField next = solve_cauchy(cur);
    const double diff = window_difference(out.field, next, K);
    out.log.push_back({cur.R, cur.h, cur.scheme.dt, diff});
    out.field = std::move(next);
    if (diff <= tol) {
      out.converged = true;
      return out;
    }
  }
  if (throw_on_failure) {
    std::ostringstream os;
    os << "exhaustion failure: no convergence on K after " << max_refinements << " refinements; differences";
    for (size_t i = 1; i < out.log.size(); ++i) os << " " << out.log[i].difference;
    throw Error(ErrorKind::Numerical, os.str());
  }
  return out;
}

void write_trajectory_csv(const std::string& path, const std::vector<DiscreteField>& snapshots,
                          const std::string& provenance) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::Config, "cannot write " + path);
  if (!provenance.empty()) os << "# " << provenance << "\n";
  const int dim = snapshots.empty() ? 1 : snapshots.front().grid->dim();
  os << (dim == 1 ? "t,x,value\n" : "t,x,y,value\n");
  os.precision(17);
  for (const auto& u : snapshots) {
    for (int k = 0; k < u.grid->size(); ++k) {
      const Vec& x = u.grid->node(k);
      os << u.t << "," << x[0];
      if (dim == 2) os << "," << x[1];
      os << "," << u.values[k] << "\n";
    }
  }
}

}  // namespace parevo
