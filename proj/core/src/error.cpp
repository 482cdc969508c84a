#include "raylap/error.hpp"

namespace raylap {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_parameter: return "invalid-parameter";
    case ErrorKind::numeric_input: return "numeric-input";
    case ErrorKind::not_positive_definite: return "not-positive-definite";
    case ErrorKind::degenerate_problem: return "degenerate-problem";
    case ErrorKind::center_evaluation: return "center-evaluation";
    case ErrorKind::no_modes_found: return "no-modes-found";
    case ErrorKind::no_valid_maxima: return "no-valid-maxima";
    case ErrorKind::hessian_failed: return "hessian-failed";
    case ErrorKind::saddle_direction: return "saddle-direction";
    case ErrorKind::missing_curvature: return "missing-curvature";
    case ErrorKind::unsupported_dimension: return "unsupported-dimension";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& what, int pivot)
    : std::runtime_error(what), kind_(kind), pivot_(pivot) {}

Error Error::tagged(const std::string& stage) const {
  Error copy = *this;
  copy.stage_ = stage;
  return copy;
}

}  // namespace raylap
