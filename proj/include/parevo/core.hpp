#pragma once

#include <Eigen/Dense>

#include <functional>
#include <stdexcept>
#include <string>

namespace parevo {

// Points and vectors live in R^2; in one dimension the second component is
// identically zero and never read.
using Vec = Eigen::Vector2d;
using Mat = Eigen::Matrix2d;

enum class ErrorKind {
  Config,        // malformed scenario, bad parameters
  Domain,        // point outside the closure, empty truncation
  Precondition,  // operation called outside its contract
  Capability,    // missing derivative data or unsupported geometry
  Numerical,     // linear-solve failure, blowup, exhaustion failure
  Hypothesis,    // a certificate failed where a pass was required
};

/// Process exit code for an error class: 1 config, 2 numerical, 3 hypothesis.
int exit_code(ErrorKind kind);

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

/// Value, time derivative, gradient and Hessian of a scalar field at a point.
struct Jet {
  double value = 0.0;
  double dt = 0.0;
  Vec grad = Vec::Zero();
  Mat hess = Mat::Zero();
};

using ScalarField = std::function<Jet(double t, const Vec& x)>;
using MatrixField = std::function<Mat(double t, const Vec& x)>;
using VectorField = std::function<Vec(double t, const Vec& x)>;
using PotentialField = std::function<double(double t, const Vec& x)>;

/// Time-independent initial datum sampled at grid nodes.
using InitialData = std::function<double(const Vec& x)>;

inline Vec point(double x) { return Vec(x, 0.0); }
inline Vec point(double x, double y) { return Vec(x, y); }

/// Euclidean norm restricted to the first `dim` components.
inline double norm(const Vec& v, int dim) { return dim == 1 ? std::abs(v[0]) : v.norm(); }

}  // namespace parevo
