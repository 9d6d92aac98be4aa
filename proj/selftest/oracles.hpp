#pragma once

#include <functional>

// Closed-form and quadrature references, written independently of the solver.
namespace parevo::oracle {

using Fn = std::function<double(double)>;

/// Heat kernel of a u'' on the line: (4 pi a tau)^(-1/2) exp(-z^2 / (4 a tau)).
double heat_kernel(double z, double a, double tau);

/// Whole-line solution of u_t = a u'' from f, by composite Simpson on [x - 12 sd, x + 12 sd].
double gaussian_convolution(const Fn& f, double a, double tau, double x);

/// Half-line solutions by the method of images (boundary x = 0, interior x > 0).
double images_dirichlet(const Fn& f, double a, double tau, double x);
double images_neumann(const Fn& f, double a, double tau, double x);

/// Dirichlet half-line heat with f = 1: erf(x / (2 sqrt(a tau))).
double erf_profile(double a, double tau, double x);

/// Ornstein-Uhlenbeck u_t = a u'' - k x u' - c u (Mehler formula), k > 0.
double mehler(const Fn& f, double a, double k, double c, double tau, double x);

/// y' = -c1 y^2 + c2 in closed form (coth / tanh branches).
double riccati(double y0, double tau, double c1, double c2);

}  // namespace parevo::oracle
