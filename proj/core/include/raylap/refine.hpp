#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "raylap/discovery.hpp"
#include "raylap/lbfgs.hpp"
#include "raylap/problem.hpp"

namespace raylap {

enum class SeedMode { axis_ring, fast };

// Axis ring: 2d seeds at location +- 0.9 w e_i. Fast: 20 seeds uniform in the
// L-inf ball of radius 0.9 w. Seeds are clipped into the box. The caller floors
// the width beforehand.
Points seed_peak(const CoarsePeak& coarse, SeedMode mode, std::uint64_t seed, const BoundsBox& bounds);

// Three-point second differences along each axis, one batch of 2d+1 rows.
// Entries whose stencil hit a non-finite value come back NaN and are marked
// in `unreliable` when given.
Vec diag_hessian(const Problem& problem, const Vec& center, const Vec& step,
                 std::vector<std::uint8_t>* unreliable = nullptr);

// Stencil step max(1e-2 w_i, 1e-6 (1 + |x_i|)). Smaller relative steps lose
// digits to cancellation when the log-likelihood carries a large offset.
Vec hessian_step(const Vec& center, const Vec& widths);

struct Peak {
  Vec location;
  double logl = 0.0;
  Vec diag_hessian;  // second derivatives of l, all negative
  double grad_linf = 0.0;
  Vec width;         // 1 / sqrt(-diag_hessian)
  int source = -1;   // index of the coarse peak whose seed won
  double coarse_logl = 0.0;
  bool width_floored = false;
  // Ring estimate of the diagonal at the coarse location (axis-ring mode
  // only); kept as a cross-check, never used for evidence.
  Vec ring_hessian;
  std::vector<std::size_t> members;  // trajectories that converged here
};

struct Rejection {
  Vec location;
  double logl = 0.0;
  std::string reason;  // "gradient", "saddle" or "hessian-unreliable"
  int source = -1;
};

struct RefineConfig {
  SeedMode mode = SeedMode::axis_ring;
  int iterations = 0;          // <= 0 picks refine_iterations(d)
  double tolerance = 1e-10;    // L-BFGS stopping gradient
  double grad_rel = 1e-6;      // stationarity filter scale
  double dedup_radius = 0.0;   // <= 0 picks 1e-3 * mean bound width
  double fine_scale = 0.0;     // floor for degenerate widths, <= 0 uses 1e-3 * mean width
  std::size_t memory = 10;
  std::uint64_t seed = 0;
};

struct RefineResult {
  std::vector<Peak> peaks;
  std::vector<Rejection> rejections;
  TrajectoryBank trajectories;
  int iterations = 0;
};

// max(10, ceil(3 log2 d)).
int refine_iterations(Index dim);

// Optimizes the seeds of every coarse peak in one batch, filters
// non-stationary candidates, deduplicates, then computes diagonal Hessians at
// the survivors and drops saddles. Throws no-valid-maxima listing the
// rejection reasons when nothing survives.
RefineResult refine(const Problem& problem, const std::vector<CoarsePeak>& coarse, const RefineConfig& config);

}  // namespace raylap
