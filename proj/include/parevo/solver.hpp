#pragma once

#include "parevo/core.hpp"
#include "parevo/fields.hpp"
#include "parevo/geometry.hpp"

#include <Eigen/Sparse>

#include <map>
#include <memory>
#include <string>
#include <vector>

namespace parevo {

enum class GridKind { Cartesian, Polar };

/// Box in native grid coordinates: Cartesian coordinates, or (r, theta) on
/// polar grids. Used as the retained compact window K.
struct Window {
  Vec lower = Vec::Zero();
  Vec upper = Vec::Zero();

  bool contains(const Vec& native, double tol = 1e-12) const;
};

/// Tensor grid on a truncated domain.
///
/// Cartesian grids cover the truncation box with spacing h per axis. Polar
/// grids (exterior ball) use nodes r_i = rho0 + i h_r, theta_j = j h_theta with
/// periodic theta, so that the physical boundary is the grid line i = 0.
class Grid {
 public:
  static std::shared_ptr<const Grid> build(const TruncatedDomain& td, double h, double h_theta = 0.0);

  GridKind kind() const { return kind_; }
  int dim() const { return dim_; }
  const TruncatedDomain& truncation() const { return td_; }
  const Domain& domain() const { return td_.parent; }
  int size() const { return static_cast<int>(nodes_.size()); }
  int count(int axis) const { return n_[axis]; }
  double step(int axis) const { return h_[axis]; }
  double origin(int axis) const { return lo_[axis]; }
  bool periodic(int axis) const { return kind_ == GridKind::Polar && axis == 1; }

  int index(int i, int j = 0) const { return i + n_[0] * j; }
  int axis_index(int node, int axis) const { return axis == 0 ? node % n_[0] : node / n_[0]; }

  const Vec& node(int k) const { return nodes_[k]; }
  /// Native coordinates (x or (r, theta)) of node k.
  Vec native(int k) const;
  Vec to_native(const Vec& x) const;
  BoundaryTag tag(int k) const { return tags_[k]; }
  double weight(int k) const { return weights_[k]; }
  const Eigen::VectorXd& weights() const { return weights_; }
  double measure() const { return weights_.sum(); }

  /// Orthonormal frame at node k: columns (e_r, e_theta) on polar grids, identity otherwise.
  Mat frame(int k) const;

  std::vector<int> window_nodes(const Window& K, bool include_physical = true) const;
  std::string describe() const;

 private:
  Grid() = default;

  GridKind kind_ = GridKind::Cartesian;
  int dim_ = 1;
  TruncatedDomain td_{Domain::whole_space(1)};
  int n_[2] = {1, 1};
  double h_[2] = {1.0, 1.0};
  double lo_[2] = {0.0, 0.0};
  std::vector<Vec> nodes_;
  std::vector<BoundaryTag> tags_;
  Eigen::VectorXd weights_;
};

using GridPtr = std::shared_ptr<const Grid>;

/// Node values on a grid at time t.
struct DiscreteField {
  GridPtr grid;
  Eigen::VectorXd values;
  double t = 0.0;

  static DiscreteField sample(GridPtr grid, const InitialData& f, double t = 0.0);

  double operator[](int k) const { return values[k]; }
  /// Piecewise-cubic interpolation at a Cartesian point inside the truncation.
  double interpolate(const Vec& x) const;
  /// Cartesian gradient at a node: central differences inside, second-order
  /// one-sided stencils on the truncated boundary.
  Vec gradient(int k) const;
  double sup(const std::vector<int>& nodes) const;
  double sup() const { return values.size() ? values.cwiseAbs().maxCoeff() : 0.0; }
  double integral() const { return grid->weights().dot(values); }
  void check_finite() const;
};

enum class DriftScheme { Central, Upwind };

struct SchemeConfig {
  double theta = 0.5;
  double dt = 1e-3;
  int rannacher = 2;  // implicit Euler half-steps replacing the first theta-steps
  DriftScheme drift = DriftScheme::Upwind;  // upwind only where the cell Peclet number exceeds 2
  double beta_min = 1e-3;
  double blowup = 1e6;

  void validate() const;
};

/// Spatial operator on a grid. Rows of constrained nodes (Dirichlet physical
/// boundary and artificial boundary) are zero; the time stepper turns them
/// into u = 0.
struct AssembledOperator {
  Eigen::SparseMatrix<double> A;
  std::vector<char> constrained;
  int upwind_rows = 0;
};

/// Interior rows at time t, physical-boundary rows at time t_boundary.
AssembledOperator assemble(const CoefficientSet& coeffs, const BoundaryCondition& bc, const Grid& grid, double t,
                           const SchemeConfig& scheme, double t_boundary);
inline AssembledOperator assemble(const CoefficientSet& coeffs, const BoundaryCondition& bc, const Grid& grid,
                                  double t, const SchemeConfig& scheme = {}) {
  return assemble(coeffs, bc, grid, t, scheme, t);
}

/// Time stepper for one operator on one grid, advancing any number of columns
/// at once. Factorizations are cached when the operator does not depend on t.
class Propagator {
 public:
  using Callback = std::function<void(double t, const Eigen::MatrixXd& U)>;

  Propagator(CoefficientSet coeffs, BoundaryCondition bc, GridPtr grid, SchemeConfig scheme);

  const Grid& grid() const { return *grid_; }
  GridPtr grid_ptr() const { return grid_; }
  const SchemeConfig& scheme() const { return scheme_; }
  const CoefficientSet& coefficients() const { return coeffs_; }
  const BoundaryCondition& boundary() const { return bc_; }

  /// Number of theta-steps used on [s, t] and their length.
  int steps(double s, double t) const;

  /// Advances the columns of U from s to t. Constrained rows are zeroed first.
  Eigen::MatrixXd run(Eigen::MatrixXd U, double s, double t, const Callback& cb = {}) const;

  /// One step (I - theta dt A(t+dt)) u+ = (I + (1-theta) dt A(t)) u.
  Eigen::MatrixXd step(const Eigen::MatrixXd& U, double t, double dt, double theta) const;

  int upwind_rows() const;

 private:
  struct Factor;
  const Factor& factor(double t, double dt, double theta) const;

  CoefficientSet coeffs_;
  BoundaryCondition bc_;
  GridPtr grid_;
  SchemeConfig scheme_;
  bool autonomous_;
  mutable std::map<std::pair<double, double>, std::shared_ptr<Factor>> cache_;
  mutable std::shared_ptr<AssembledOperator> frozen_;
};

DiscreteField step(const DiscreteField& state, const CoefficientSet& coeffs, const BoundaryCondition& bc,
                   const SchemeConfig& scheme, double t, double dt);

struct SolveRequest {
  CoefficientSet coeffs;
  BoundaryCondition bc;
  Domain domain = Domain::whole_space(1);
  SchemeConfig scheme;
  double s = 0.0;
  double t = 1.0;
  InitialData f;
  double R = 8.0;
  double h = 1.0 / 64.0;
  double h_theta = 0.0;
};

using FieldCallback = std::function<void(const DiscreteField&)>;

/// Cauchy problem on Omega cap B_R with homogeneous Dirichlet data on the
/// artificial boundary. The boundary condition is orientation-normalized first.
DiscreteField solve_cauchy(const SolveRequest& req, const FieldCallback& cb = {});

struct RefinementStep {
  double R, h, dt;
  double difference;  // sup over K against the previous level; NaN on the first
};

struct Refinement {
  DiscreteField field;
  std::vector<RefinementStep> log;
  bool converged = false;
};

/// Alternately doubles R and halves (h, dt) until successive solutions differ
/// on K by at most tol. max_refinements = 0 performs a single solve.
Refinement refine_until(const SolveRequest& req, const Window& K, double tol, int max_refinements = 6,
                        bool throw_on_failure = true);

/// Sup over the nodes of `coarse` inside K of |coarse - fine|, with fine interpolated.
double window_difference(const DiscreteField& coarse, const DiscreteField& fine, const Window& K);

/// CSV rows (t, x[, y], value) for a list of snapshots.
void write_trajectory_csv(const std::string& path, const std::vector<DiscreteField>& snapshots,
                          const std::string& provenance = "");

}  // namespace parevo
