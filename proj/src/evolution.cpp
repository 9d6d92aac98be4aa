#include "parevo/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

namespace parevo {

namespace {

Window default_window(const Domain& domain, double R) {
  Window K;
  const int d = domain.dim();
  if (domain.kind() == DomainKind::ExteriorBall) {
    K.lower = Vec(domain.radius(), 0.0);
    K.upper = Vec(std::max(domain.radius(), 0.5 * R), 2.0 * std::numbers::pi);
    return K;
  }
  for (int k = 0; k < d; ++k) {
    K.lower[k] = -0.5 * R;
    K.upper[k] = 0.5 * R;
  }
  if (domain.kind() == DomainKind::HalfSpace) K.lower[d - 1] = 0.0;
  return K;
}

bool window_unset(const Window& K) { return K.lower == K.upper; }

bool gamma_nonnegative(const BoundaryCondition& bc, const Domain& domain) {
  if (bc.dirichlet() || !domain.has_boundary()) return true;
  for (double t : {0.0, 1.0})
    for (const Vec& x : boundary_audit_points(domain))
      if (bc.gamma(t, x) < 0.0) return false;
  return true;
}

std::vector<double> simpson_weights(int nodes, double a, double b) {
  if (nodes < 3 || nodes % 2 == 0) throw Error(ErrorKind::Config, "Simpson quadrature needs an odd node count >= 3");
  const double h = (b - a) / (nodes - 1);
  std::vector<double> w(nodes);
  for (int i = 0; i < nodes; ++i) w[i] = h / 3.0 * ((i == 0 || i == nodes - 1) ? 1.0 : (i % 2 ? 4.0 : 2.0));
  return w;
}

double window_sup(const EvolutionOperator& G, const Eigen::VectorXd& v) {
  double m = 0.0;
  for (int k : G.window_nodes()) m = std::max(m, std::abs(v[k]));
  return m;
}

}  // namespace

EvolutionOperator::EvolutionOperator(CoefficientSet coeffs, BoundaryCondition bc, Domain domain, SchemeConfig scheme,
                                     RefinementPolicy policy)
    : coeffs_(std::move(coeffs)),
      bc_(std::move(bc)),
      domain_(std::move(domain)),
      scheme_(scheme),
      policy_(policy) {
  if (coeffs_.dim != domain_.dim()) throw Error(ErrorKind::Config, "coefficient and domain dimensions differ");
  if (!bc_.dirichlet() && !domain_.has_boundary()) bc_ = BoundaryCondition::make_dirichlet();
  bc_ = normalize_orientation(bc_, domain_, scheme_.beta_min, {0.0, 1.0});
  if (window_unset(policy_.window)) policy_.window = default_window(domain_, policy_.R);
  GridPtr grid = Grid::build(truncate(domain_, policy_.R), policy_.h, policy_.h_theta);
  prop_ = std::make_shared<Propagator>(coeffs_, bc_, grid, scheme_);
}

EvolutionOperator EvolutionOperator::refined(int levels) const {
  RefinementPolicy p = policy_;
  SchemeConfig s = scheme_;
  for (int i = 0; i < levels; ++i) {
    p.h *= 0.5;
    p.h_theta *= 0.5;
    s.dt *= 0.5;
  }
  EvolutionOperator out(coeffs_, bc_, domain_, s, p);
  out.prerequisites = prerequisites;
  return out;
}

int EvolutionOperator::nearest_node(const Vec& x) const {
  const Grid& g = *grid();
  int best = -1;
  double bd = std::numeric_limits<double>::infinity();
  for (int k = 0; k < g.size(); ++k) {
    if (g.tag(k) == BoundaryTag::Artificial) continue;
    const double d = (g.node(k) - x).squaredNorm();
    if (d < bd) {
      bd = d;
      best = k;
    }
  }
  return best;
}

DiscreteField EvolutionOperator::apply(double t, double s, const InitialData& f) const {
  if (t < s) throw Error(ErrorKind::Precondition, "G(t, s) needs t >= s");
  if (t == s) return DiscreteField::sample(grid(), f, t);
  if (policy_.max_refinements > 0) {
    SolveRequest req{coeffs_, bc_, domain_, scheme_, s, t, f, policy_.R, policy_.h, policy_.h_theta};
    return refine_until(req, policy_.window, policy_.tol, policy_.max_refinements).field;
  }
  DiscreteField u = DiscreteField::sample(grid(), f, s);
  u.values = prop_->run(u.values, s, t).col(0);
  u.t = t;
  u.check_finite();
  return u;
}

DiscreteField EvolutionOperator::apply(double t, double s, const DiscreteField& f) const {
  if (f.grid == grid() && policy_.max_refinements == 0) {
    if (t < s) throw Error(ErrorKind::Precondition, "G(t, s) needs t >= s");
    DiscreteField u{grid(), t == s ? f.values : Eigen::VectorXd(prop_->run(f.values, s, t).col(0)), t};
    u.check_finite();
    return u;
  }
  return apply(t, s, [f](const Vec& x) { return f.interpolate(x); });
}

Eigen::MatrixXd EvolutionOperator::apply_columns(double t, double s, const Eigen::MatrixXd& F) const {
  if (t < s) throw Error(ErrorKind::Precondition, "G(t, s) needs t >= s");
  if (t == s) return F;
  return prop_->run(F, s, t);
}

double evolution_law_residual(const EvolutionOperator& G, double s, double r, double t, const InitialData& f) {
  if (!(s <= r && r <= t)) throw Error(ErrorKind::Precondition, "evolution law needs s <= r <= t");
  if (r == s || r == t) return 0.0;
  const DiscreteField direct = G.apply(t, s, f);
  const DiscreteField mid = G.apply(r, s, f);
  const DiscreteField two = G.apply(t, r, mid);
  double m = 0.0;
  for (int k : direct.grid->window_nodes(G.policy().window))
    m = std::max(m, std::abs(direct.values[k] - (two.grid == direct.grid ? two.values[k]
                                                                             : two.interpolate(direct.grid->node(k)))));
  return m;
}

// ---------------------------------------------------------------------------
// Kernels

double KernelEstimate::value(int row, int node) const {
  auto it = std::find(columns.begin(), columns.end(), node);
  if (it == columns.end()) return 0.0;
  return g(row, static_cast<int>(it - columns.begin()));
}

double KernelEstimate::tail(int row, double n) const {
  double sum = 0.0;
  for (size_t j = 0; j < columns.size(); ++j) {
    const Vec& y = grid->node(columns[j]);
    if (norm(y, grid->dim()) > n + 1e-12) sum += grid->weight(columns[j]) * g(row, static_cast<int>(j));
  }
  return sum;
}

KernelEstimate estimate_kernel(const EvolutionOperator& G, double t, double s, const std::vector<Vec>& probes,
                               std::vector<int> columns) {
  if (!(t > s)) throw Error(ErrorKind::Precondition, "kernel estimation needs t > s");
  const Grid& grid = *G.grid();
  const bool dirichlet = G.boundary().dirichlet();
  if (columns.empty()) {
    for (int k = 0; k < grid.size(); ++k) {
      const BoundaryTag tag = grid.tag(k);
      if (tag == BoundaryTag::Artificial || (tag == BoundaryTag::Physical && dirichlet)) continue;
      columns.push_back(k);
    }
  }
  KernelEstimate K;
  K.t = t;
  K.s = s;
  K.grid = G.grid();
  K.columns = columns;
  for (const Vec& x : probes) K.rows.push_back(G.nearest_node(x));
  K.g.resize(static_cast<int>(K.rows.size()), static_cast<int>(columns.size()));

  const int block = 512;
  for (size_t c0 = 0; c0 < columns.size(); c0 += block) {
    const int m = static_cast<int>(std::min(columns.size() - c0, static_cast<size_t>(block)));
    Eigen::MatrixXd F = Eigen::MatrixXd::Zero(grid.size(), m);
    for (int j = 0; j < m; ++j) F(columns[c0 + j], j) = 1.0 / grid.weight(columns[c0 + j]);
    const Eigen::MatrixXd U = G.apply_columns(t, s, F);
    for (size_t i = 0; i < K.rows.size(); ++i)
      for (int j = 0; j < m; ++j) K.g(static_cast<int>(i), static_cast<int>(c0) + j) = U(K.rows[i], j);
  }

  K.mass.resize(static_cast<int>(K.rows.size()));
  for (size_t i = 0; i < K.rows.size(); ++i) {
    double sum = 0.0;
    for (size_t j = 0; j < columns.size(); ++j) sum += grid.weight(columns[j]) * K.g(static_cast<int>(i), static_cast<int>(j));
    K.mass[static_cast<int>(i)] = sum;
  }
  K.mass_bound = std::exp(-G.coefficients().c0 * (t - s));
  K.min_value = K.g.size() ? K.g.minCoeff() : 0.0;

  const Window& W = G.policy().window;
  K.positive_on_window = (t - s) >= 0.1;
  for (size_t i = 0; i < K.rows.size() && K.positive_on_window; ++i) {
    if (!W.contains(grid.native(K.rows[i]), 1e-9)) continue;
    for (size_t j = 0; j < columns.size(); ++j)
      if (W.contains(grid.native(columns[j]), 1e-9) && !(K.g(static_cast<int>(i), static_cast<int>(j)) > 0.0)) {
        K.positive_on_window = false;
        break;
      }
  }
  if (gamma_nonnegative(G.boundary(), G.domain()) && K.mass.size() && K.mass.maxCoeff() > K.mass_bound + 2e-3)
    throw Error(ErrorKind::Numerical, "kernel mass " + std::to_string(K.mass.maxCoeff()) +
                                          " exceeds the contraction bound " + std::to_string(K.mass_bound));
  return K;
}

std::vector<TightnessRow> tightness_profile(const KernelEstimate& kernel, const std::vector<double>& radii) {
  std::vector<TightnessRow> out;
  for (double n : radii) {
    double sup = 0.0;
    for (size_t i = 0; i < kernel.rows.size(); ++i) sup = std::max(sup, kernel.tail(static_cast<int>(i), n));
    out.push_back({n, sup});
  }
  return out;
}

std::vector<TightnessRow> tightness_profile(const EvolutionOperator& G, double t, double s,
                                            const std::vector<Vec>& probes, const std::vector<double>& radii) {
  return tightness_profile(estimate_kernel(G, t, s, probes), radii);
}

// ---------------------------------------------------------------------------

double comparison_ode(double y0, double tau, double c1, double c2, double eps, int steps) {
  auto rhs = [&](double y) { return -c1 * std::pow(std::max(y, 0.0), 1.0 + eps) + c2; };
  double y = y0, done = 0.0;
  const double base = tau / std::max(steps, 1);
  while (done < tau) {
    const double stiff = (1.0 + eps) * c1 * std::pow(std::max(std::abs(y), 1.0), eps);
    const double h = std::min({base, 0.25 / stiff, tau - done});
    const double k1 = rhs(y), k2 = rhs(y + 0.5 * h * k1), k3 = rhs(y + 0.5 * h * k2), k4 = rhs(y + h * k3);
    y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    done += h;
  }
  return y;
}

MomentReport lyapunov_moment(const EvolutionOperator& G, double t, double s, const ScalarField& psi, double c1,
                             double c2, double eps, const CompactnessCertificate& cert,
                             const std::vector<Vec>& probes) {
  if (!cert.pass) throw Error(ErrorKind::Precondition, "Lyapunov moment needs a passing compactness certificate");
  MomentReport r;
  r.probes = probes;
  r.worst_excess = -std::numeric_limits<double>::infinity();
  r.holder_ok = true;
  const KernelEstimate K = estimate_kernel(G, t, s, probes);
  const Grid& grid = *K.grid;
  Eigen::VectorXd wpsi(static_cast<int>(K.columns.size())), wpsi1(static_cast<int>(K.columns.size()));
  for (size_t j = 0; j < K.columns.size(); ++j) {
    const double v = psi(s, grid.node(K.columns[j])).value;
    wpsi[static_cast<int>(j)] = grid.weight(K.columns[j]) * v;
    wpsi1[static_cast<int>(j)] = grid.weight(K.columns[j]) * std::pow(v, 1.0 + eps);
  }
  for (size_t i = 0; i < probes.size(); ++i) {
    const double m = K.g.row(static_cast<int>(i)).dot(wpsi);
    const double m1 = K.g.row(static_cast<int>(i)).dot(wpsi1);
    const double y = comparison_ode(psi(s, grid.node(K.rows[i])).value, t - s, c1, c2, eps);
    r.moment.push_back(m);
    r.ode_bound.push_back(y);
    r.holder_lhs.push_back(std::pow(std::max(m, 0.0), 1.0 + eps));
    r.holder_rhs.push_back(m1);
    r.sup_moment = std::max(r.sup_moment, m);
    r.worst_excess = std::max(r.worst_excess, m - y);
    if (r.holder_lhs.back() > m1 * (1.0 + 1e-9) + 1e-12) r.holder_ok = false;
  }
  return r;
}

double integral_identity_residual(const EvolutionOperator& G, double t, double s1, double s2, const TestFunction& f,
                                  int nodes) {
  f.check_support(G.domain());
  if (!(s1 <= t && s2 <= t)) throw Error(ErrorKind::Precondition, "integral identity needs s1, s2 <= t");
  if (s1 == s2) return 0.0;
  const DiscreteField a = G.apply(t, s2, [&](const Vec& x) { return f(x); });
  const DiscreteField b = G.apply(t, s1, [&](const Vec& x) { return f(x); });
  Eigen::VectorXd sum = a.values - b.values;
  const std::vector<double> w = simpson_weights(nodes, s1, s2);
  for (int i = 0; i < nodes; ++i) {
    const double r = s1 + (s2 - s1) * i / (nodes - 1);
    const DiscreteField term =
        G.apply(t, r, [&](const Vec& x) { return differential_action(G.coefficients(), r, f.eval(x), x); });
    sum += w[i] * term.values;
  }
  return window_sup(G, sum);
}

double interchange_discrepancy(const EvolutionOperator& G, double t, double s,
                               const std::function<double(double, const Vec&)>& family, double r0, double r1,
                               int nodes) {
  const Grid& grid = *G.grid();
  const std::vector<double> w = simpson_weights(nodes, r0, r1);
  Eigen::MatrixXd F(grid.size(), nodes);
  Eigen::VectorXd wv(nodes);
  for (int i = 0; i < nodes; ++i) {
    const double r = r0 + (r1 - r0) * i / (nodes - 1);
    for (int k = 0; k < grid.size(); ++k) F(k, i) = family(r, grid.node(k));
    wv[i] = w[i];
  }
  const Eigen::VectorXd quad_then_apply = G.apply_columns(t, s, F * wv).col(0);
  const Eigen::VectorXd apply_then_quad = G.apply_columns(t, s, F) * wv;
  return window_sup(G, quad_then_apply - apply_then_quad);
}

DiscreteField apply_via_gauge(const EvolutionOperator& G, double t, double s, const InitialData& f,
                              const ScalarField& phi, double H, const GaugeCertificate& cert) {
  if (!cert.pass) throw Error(ErrorKind::Precondition, "gauge application needs a passing gauge certificate");
  auto [coeffs, bc] = gauge_transform(G.coefficients(), G.boundary(), phi, H, G.domain());
  const EvolutionOperator Gt(coeffs, bc, G.domain(), G.scheme(), G.policy());
  DiscreteField v = Gt.apply(t, s, [&](const Vec& x) { return f(x) / phi(s, x).value; });
  const double growth = std::exp(H * (t - s));
  for (int k = 0; k < v.grid->size(); ++k) v.values[k] *= growth * phi(t, v.grid->node(k)).value;
  return v;
}

DiscreteField apply_robin_via_neumann(const EvolutionOperator& G, double t, double s, const InitialData& f,
                                      const RobinGauge& gauge) {
  if (G.domain().kind() != DomainKind::HalfSpace)
    throw Error(ErrorKind::Capability, "Robin-via-Neumann needs the half-space");
  if (!gauge.pass) throw Error(ErrorKind::Precondition, "Robin gauge certificate failed");
  const EvolutionOperator GN(robin_to_neumann(G.coefficients(), gauge, G.domain()),
                             BoundaryCondition::make_neumann(G.domain()), G.domain(), G.scheme(), G.policy());
  DiscreteField v = GN.apply(t, s, [&](const Vec& x) { return std::exp(gauge.eval(x).value) * f(x); });
  for (int k = 0; k < v.grid->size(); ++k) v.values[k] *= std::exp(-gauge.eval(v.grid->node(k)).value);
  return v;
}

// ---------------------------------------------------------------------------
// Output

namespace {

std::ofstream open_csv(const std::string& path, const std::string& provenance) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::Config, "cannot write " + path);
  if (!provenance.empty()) os << "# " << provenance << "\n";
  os.precision(17);
  return os;
}

void write_point(std::ostream& os, const Vec& x, int dim) {
  os << x[0];
  if (dim == 2) os << " " << x[1];
}

}  // namespace

void write_kernel_csv(const std::string& path, const KernelEstimate& k, const std::string& provenance) {
  auto os = open_csv(path, provenance);
  os << "t,s,x,y,g\n";
  const int dim = k.grid->dim();
  for (size_t i = 0; i < k.rows.size(); ++i)
    for (size_t j = 0; j < k.columns.size(); ++j) {
      os << k.t << "," << k.s << ",";
      write_point(os, k.grid->node(k.rows[i]), dim);
      os << ",";
      write_point(os, k.grid->node(k.columns[j]), dim);
      os << "," << k.g(static_cast<int>(i), static_cast<int>(j)) << "\n";
    }
}

void write_kernel_summary(const std::string& path, const KernelEstimate& k, const std::vector<double>& radii,
                          const std::string& provenance) {
  auto os = open_csv(path, provenance);
  os << "x,mass,mass_bound";
  for (double n : radii) os << ",tail_" << n;
  os << "\n";
  for (size_t i = 0; i < k.rows.size(); ++i) {
    write_point(os, k.grid->node(k.rows[i]), k.grid->dim());
    os << "," << k.mass[static_cast<int>(i)] << "," << k.mass_bound;
    for (double n : radii) os << "," << k.tail(static_cast<int>(i), n);
    os << "\n";
  }
}

void write_tightness_csv(const std::string& path, const std::vector<TightnessRow>& rows,
                         const std::string& provenance) {
  auto os = open_csv(path, provenance);
  os << "n,sup_tail\n";
  for (const auto& r : rows) os << r.n << "," << r.sup_tail << "\n";
}

}  // namespace parevo
