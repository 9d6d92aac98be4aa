#include "parevo/core.hpp"

namespace parevo {

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Numerical:
      return 2;
    case ErrorKind::Hypothesis:
      return 3;
    default:
      return 1;
  }
}

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config:
      return "config";
    case ErrorKind::Domain:
      return "domain";
    case ErrorKind::Precondition:
      return "precondition";
    case ErrorKind::Capability:
      return "capability";
    case ErrorKind::Numerical:
      return "numerical";
    case ErrorKind::Hypothesis:
      return "hypothesis";
  }
  return "unknown";
}

}  // namespace parevo
