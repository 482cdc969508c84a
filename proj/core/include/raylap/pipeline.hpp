#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "raylap/discovery.hpp"
#include "raylap/laplace.hpp"
#include "raylap/precheck.hpp"
#include "raylap/problem.hpp"
#include "raylap/reduction.hpp"

namespace raylap {

struct PipelineConfig {
  std::string preset = "fast";
  int n_oscillations = 1;
  bool fast_refine = true;
  std::uint64_t seed = 0;

  double stick_grad = 1e-6;
  double refine_grad = 1e-6;  // relative to max(1, |l|)
  double eps_flat = 1e-6;
  double eps_soft = 1e-3;
  double eps_rot = 0.05;
  double dedup_radius = 0.0;  // <= 0 picks 1e-3 * mean bound width

  int n_coarse = 64;
  double ray_delta = 20.0;
  int n_converge = 15;
  int n_anticonverge = 10;
  int n_cloud = 5;
  int k_smooth = 8;
  std::size_t lbfgs_memory = 10;

  bool reduce = false;
  bool half_width_flat = false;
  int workers = 0;              // <= 0 leaves the pool alone unless RAYLAP_WORKERS is set
  std::string raybank_path;     // sidecar output when non-empty

  // fast: one oscillation with 20-seed refinement; slow: one oscillation with
  // the axis ring; conservative: three oscillations with the axis ring.
  static PipelineConfig from_preset(const std::string& name);
  // Throws invalid-parameter on a non-positive tolerance or budget.
  void validate() const;
};

struct ModeReport {
  ModeEvidence evidence;
  Vec location;  // in the full coordinate space
  std::optional<ReductionReport> reduction;
};

struct PipelineResult {
  EvidenceResult evidence;
  std::vector<ModeReport> modes;
  std::vector<Index> active_dims;
  ScaleEstimate scales;
  OscillationStats oscillation;
  std::size_t ray_count = 0;
  std::size_t ray_samples = 0;
  std::size_t coarse_peaks = 0;
  std::vector<Rejection> rejections;
  std::vector<std::string> rejected_modes;  // modes dropped after refinement, with reason
  std::uint64_t total_evals = 0;
  PipelineConfig config;
};

// precheck -> ray discovery -> refinement -> Laplace evidence (-> reduction)
// on the active subproblem. Stage errors are rethrown tagged with the stage.
PipelineResult run_pipeline(const Problem& problem, const PipelineConfig& config);

// JSON document; the timestamp and timing fields are the only parts that vary
// between identical runs.
std::string to_json(const PipelineResult& result, bool pretty = true);

// Same document with "timestamp" and "timing_ms" removed.
std::string to_json_deterministic(const PipelineResult& result);

}  // namespace raylap
