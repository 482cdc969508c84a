#pragma once

#include <vector>

#include "raylap/problem.hpp"

namespace raylap {

struct PrecheckOptions {
  double eps_flat = 1e-6;
  double eps_soft = 1e-3;
  // Credit flat coordinates with log of the half-width instead of the width.
  bool half_width_flat = false;
};

struct PrecheckReport {
  Vec sensitivities;
  std::vector<Index> flat_dims;
  std::vector<Index> soft_dims;
  std::vector<Index> active_dims;
  double log_z_marginal = 0.0;
  double center_logl = 0.0;
};

// Probes the box center and both face midpoints of every axis in one batch
// (2d+1 evaluations) and splits coordinates into flat, soft and active sets.
PrecheckReport run_precheck(const Problem& problem, const PrecheckOptions& options = {});

}  // namespace raylap
