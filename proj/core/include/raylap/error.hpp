#pragma once

#include <stdexcept>
#include <string>

namespace raylap {

enum class ErrorKind {
  invalid_parameter,
  numeric_input,
  not_positive_definite,
  degenerate_problem,
  center_evaluation,
  no_modes_found,
  no_valid_maxima,
  hessian_failed,
  saddle_direction,
  missing_curvature,
  unsupported_dimension,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, int pivot = -1);

  ErrorKind kind() const noexcept { return kind_; }
  // Index of the failing pivot for Cholesky breakdowns, -1 otherwise.
  int pivot() const noexcept { return pivot_; }
  const std::string& stage() const noexcept { return stage_; }

  // Copy of this error tagged with the pipeline stage it escaped from.
  Error tagged(const std::string& stage) const;

 private:
  ErrorKind kind_;
  int pivot_;
  std::string stage_;
};

}  // namespace raylap
