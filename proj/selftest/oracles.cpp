#include "oracles.hpp"

#include <cmath>

namespace parevo::oracle {

namespace {

const double kPi = 3.14159265358979323846;

double simpson(const Fn& g, double lo, double hi, int n = 4000) {
  const double h = (hi - lo) / n;
  double s = g(lo) + g(hi);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * g(lo + i * h);
  return s * h / 3.0;
}

double normal_expectation(const Fn& f, double mean, double var) {
  const double sd = std::sqrt(var);
  return simpson([&](double y) { return f(y) * std::exp(-0.5 * (y - mean) * (y - mean) / var); }, mean - 12.0 * sd,
                 mean + 12.0 * sd) /
         std::sqrt(2.0 * kPi * var);
}

}  // namespace

double heat_kernel(double z, double a, double tau) {
  return std::exp(-z * z / (4.0 * a * tau)) / std::sqrt(4.0 * kPi * a * tau);
}

double gaussian_convolution(const Fn& f, double a, double tau, double x) {
  return normal_expectation(f, x, 2.0 * a * tau);
}

double images_dirichlet(const Fn& f, double a, double tau, double x) {
  // odd extension
  return gaussian_convolution([&](double y) { return y > 0 ? f(y) : (y < 0 ? -f(-y) : 0.0); }, a, tau, x);
}

double images_neumann(const Fn& f, double a, double tau, double x) {
  return gaussian_convolution([&](double y) { return f(std::abs(y)); }, a, tau, x);
}

double erf_profile(double a, double tau, double x) { return std::erf(x / (2.0 * std::sqrt(a * tau))); }

double mehler(const Fn& f, double a, double k, double c, double tau, double x) {
  const double e = std::exp(-k * tau);
  return std::exp(-c * tau) * normal_expectation(f, x * e, a / k * (1.0 - e * e));
}

double riccati(double y0, double tau, double c1, double c2) {
  const double ys = std::sqrt(c2 / c1), w = std::sqrt(c1 * c2);
  if (y0 == ys) return ys;
  if (y0 > ys) return ys / std::tanh(w * tau + std::atanh(ys / y0));
  return ys * std::tanh(w * tau + std::atanh(y0 / ys));
}

}  // namespace parevo::oracle
