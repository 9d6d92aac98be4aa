#pragma once

#include "parevo/certificates.hpp"
#include "parevo/solver.hpp"

#include <map>
#include <memory>
#include <string>
#include <vector>

namespace parevo {

/// Resolution and exhaustion settings. max_refinements = 0 means a single
/// solve at (R, h, dt); larger values run refine_until on the window.
struct RefinementPolicy {
  double R = 8.0;
  double h = 1.0 / 64.0;
  double h_theta = 0.0;
  double tol = 1e-3;
  int max_refinements = 0;
  Window window;
};

/// Discretized G(t, s) for one operator (A(t), B(t)) on one domain.
class EvolutionOperator {
 public:
  EvolutionOperator(CoefficientSet coeffs, BoundaryCondition bc, Domain domain, SchemeConfig scheme,
                    RefinementPolicy policy);

  const CoefficientSet& coefficients() const { return coeffs_; }
  const BoundaryCondition& boundary() const { return bc_; }
  const Domain& domain() const { return domain_; }
  const SchemeConfig& scheme() const { return scheme_; }
  const RefinementPolicy& policy() const { return policy_; }
  GridPtr grid() const { return prop_->grid_ptr(); }
  const Propagator& propagator() const { return *prop_; }

  /// Which hypotheses were certified for this operator (name -> passed).
  std::map<std::string, bool> prerequisites;
  void record(const std::string& name, bool passed) { prerequisites[name] = passed; }

  /// Same operator with h and dt halved `levels` times.
  EvolutionOperator refined(int levels = 1) const;

  /// G(t, s) f. At t = s the sampled datum is returned unchanged.
  DiscreteField apply(double t, double s, const InitialData& f) const;
  /// G(t, s) applied to node values (interpolated when the grids differ).
  DiscreteField apply(double t, double s, const DiscreteField& f) const;
  /// Batched application to the columns of F (node values on grid()).
  Eigen::MatrixXd apply_columns(double t, double s, const Eigen::MatrixXd& F) const;

  /// Nodes of the retained window (physical boundary included).
  std::vector<int> window_nodes() const { return grid()->window_nodes(policy_.window); }
  int nearest_node(const Vec& x) const;

 private:
  CoefficientSet coeffs_;
  BoundaryCondition bc_;
  Domain domain_;
  SchemeConfig scheme_;
  RefinementPolicy policy_;
  std::shared_ptr<Propagator> prop_;
};

/// sup over the window of |G(t,s) f - G(t,r) G(r,s) f|.
double evolution_law_residual(const EvolutionOperator& G, double s, double r, double t, const InitialData& f);

struct KernelEstimate {
  double t = 0.0, s = 0.0;
  GridPtr grid;
  std::vector<int> rows;     // probe nodes x
  std::vector<int> columns;  // nodes y
  Eigen::MatrixXd g;         // g(t, s, x_i, y_j)
  Eigen::VectorXd mass;      // sum_j w_j g(x_i, y_j)
  double mass_bound = 0.0;   // e^{-c0 (t - s)}
  double min_value = 0.0;
  bool positive_on_window = false;

  double value(int row, int node) const;
  /// sum over columns with |y| > n of w_y g(x_i, y).
  double tail(int row, double n) const;
};

/// Forward hat-column estimate of the Green kernel: the column at y starts
/// from the nodal delta e_y / w_y. `columns` empty means every free node.
/// Throws Numerical when a row mass exceeds the contraction bound by > 2e-3
/// (checked when gamma >= 0).
KernelEstimate estimate_kernel(const EvolutionOperator& G, double t, double s, const std::vector<Vec>& probes,
                               std::vector<int> columns = {});

struct TightnessRow {
  double n;
  double sup_tail;
};

std::vector<TightnessRow> tightness_profile(const KernelEstimate& kernel, const std::vector<double>& radii);
std::vector<TightnessRow> tightness_profile(const EvolutionOperator& G, double t, double s,
                                            const std::vector<Vec>& probes, const std::vector<double>& radii);

/// Solution of y' = -c1 y^(1+eps) + c2, y(0) = y0, at time tau (RK4).
double comparison_ode(double y0, double tau, double c1, double c2, double eps, int steps = 2000);

struct MomentReport {
  std::vector<Vec> probes;
  std::vector<double> moment;      // (G psi)(x)
  std::vector<double> ode_bound;   // y(t - s; psi(x))
  std::vector<double> holder_lhs;  // (G psi)^(1+eps)
  std::vector<double> holder_rhs;  // G(psi^(1+eps))
  double sup_moment = 0.0;
  double worst_excess = 0.0;  // max of moment - ode_bound
  bool holder_ok = false;
};

/// Kernel quadrature of psi and psi^(1+eps) at the probes, compared with the
/// comparison ODE. Requires a passing compactness certificate.
MomentReport lyapunov_moment(const EvolutionOperator& G, double t, double s, const ScalarField& psi, double c1,
                             double c2, double eps, const CompactnessCertificate& cert, const std::vector<Vec>& probes);

/// sup over the window of |G(t,s2) f - G(t,s1) f + int_{s1}^{s2} G(t,r) A(r) f dr|
/// with composite Simpson quadrature on `nodes` (odd) points.
double integral_identity_residual(const EvolutionOperator& G, double t, double s1, double s2, const TestFunction& f,
                                  int nodes = 9);

/// sup over the window of |G(t,s) (sum_i w_i h(r_i)) - sum_i w_i G(t,s) h(r_i)|
/// for a parameter family h(r, x) integrated by Simpson's rule on [r0, r1].
double interchange_discrepancy(const EvolutionOperator& G, double t, double s,
                               const std::function<double(double, const Vec&)>& family, double r0, double r1,
                               int nodes = 9);

/// phi e^{H (t-s)} G~(t,s)(f/phi) with G~ from gauge_transform.
DiscreteField apply_via_gauge(const EvolutionOperator& G, double t, double s, const InitialData& f,
                              const ScalarField& phi, double H, const GaugeCertificate& cert);

/// e^{-Gamma} G_N(t,s)(e^Gamma f) with G_N the Neumann operator of robin_to_neumann.
DiscreteField apply_robin_via_neumann(const EvolutionOperator& G, double t, double s, const InitialData& f,
                                      const RobinGauge& gauge);

void write_kernel_csv(const std::string& path, const KernelEstimate& k, const std::string& provenance = "");
void write_kernel_summary(const std::string& path, const KernelEstimate& k, const std::vector<double>& radii,
                          const std::string& provenance = "");
void write_tightness_csv(const std::string& path, const std::vector<TightnessRow>& rows,
                         const std::string& provenance = "");

}  // namespace parevo
