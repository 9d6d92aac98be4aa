#pragma once

#include "parevo/certificates.hpp"
#include "parevo/evolution.hpp"

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace parevo {

/// kappa(t) = sqrt(t - s) ||grad u(t)||_inf / ||f||_inf on a log-spaced grid.
struct GradEstReport {
  double s = 0.0, T = 0.0;
  std::vector<double> times;  // t - s
  std::vector<double> kappa;  // max over the batch
  double C = 0.0;             // max kappa
  int batch = 0;
  bool waived = false;
  std::string warning;

  double median() const;
  double max_to_median() const { return C / median(); }
};

/// Requires `hypotheses` to pass unless `waive` is set (negative controls).
GradEstReport gradient_constant(const EvolutionOperator& G, double s, double T, const std::vector<InitialData>& batch,
                                const GradientHypothesesReport* hypotheses = nullptr, bool waive = false,
                                int points = 24);

struct DecayReport {
  double rate = 0.0;
  double c0 = 0.0;
  std::vector<double> times;   // t - s
  std::vector<double> values;  // sqrt(t - s) ||grad u||_inf
  bool early_underflow = false;
  bool pass = false;
};

/// Least-squares fit of log(sqrt(t-s) ||grad u||) ~ a - rate (t-s) on [1, horizon].
DecayReport long_time_decay(const EvolutionOperator& G, double s, const InitialData& f, double horizon,
                            int points = 64);

struct BernsteinMonitor {
  double a = 0.0;
  std::vector<double> times;  // t - s
  std::vector<double> max_z;
  double min_z = 0.0;
  double f_sup2 = 0.0;
  double tol = 1e-3;
  double implied_kappa = 0.0;  // 1/sqrt(a)
  bool pass = false;
};

/// Tracks max over the window of z = u^2 + a (t-s) |grad u|^2. Non-convex
/// domains need `waive_convexity`.
BernsteinMonitor bernstein_monitor(const EvolutionOperator& G, double s, double T, const InitialData& f, double a,
                                   bool waive_convexity = false, double tol = 1e-3);

struct FlattenReport {
  double residual = 0.0;  // max |D_d w + omega w| over the sampled boundary points
  double max_omega = 0.0;
  int samples = 0;
};

/// Pushes G(t,s) f through the chart and checks D_d w + omega w = 0 on the
/// flattened boundary with omega = gamma / rho.
FlattenReport flatten_boundary_check(const EvolutionOperator& G, const Chart& chart, double t, double s,
                                     const InitialData& f, int samples = 32);

/// Random bumps inside the window, away from the physical boundary.
std::vector<TestFunction> random_bumps(const EvolutionOperator& G, int count, std::uint64_t seed,
                                       bool nonnegative = true);

/// erf(x_1 / w), a smoothed sign in the first coordinate.
InitialData smoothed_sign(double width);

void write_series_csv(const std::string& path, const std::string& xname, const std::string& yname,
                      const std::vector<double>& xs, const std::vector<double>& ys, const std::string& provenance = "");

/// Minimal SVG line chart (log-scaled abscissa when requested).
void write_svg_plot(const std::string& path, const std::string& title, const std::vector<double>& xs,
                    const std::vector<double>& ys, bool logx = false, double reference = std::nan(""));

}  // namespace parevo
