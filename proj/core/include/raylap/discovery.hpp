#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "raylap/lbfgs.hpp"
#include "raylap/problem.hpp"
#include "raylap/rng.hpp"

namespace raylap {

enum class RayKind : std::uint8_t { vertex_to_vertex = 0, vertex_to_edge = 1, wall_to_wall = 2, sunburst = 3 };

const char* to_string(RayKind kind);

struct Ray {
  Vec start;
  Vec end;
  RayKind kind = RayKind::vertex_to_vertex;

  Vec at(double t) const { return start + t * (end - start); }
};

struct RaySamples {
  std::vector<double> t;
  std::vector<double> logl;
  std::vector<std::uint8_t> refined;  // 0 for the uniform pass, 1 for the refinement pass
  bool dead = false;
};

struct RayBank {
  Index dim = 0;
  std::vector<Ray> rays;
  std::vector<RaySamples> samples;

  std::size_t sample_count() const;
  std::size_t dead_count() const;
  // Best finite sample, or -inf when every ray is dead.
  double max_logl() const;
  Vec argmax() const;
};

// Rays per kind: ceil(10 + log2 d).
int rays_per_kind(Index dim);

// 4 * rays_per_kind(d) rays. For d = 1 the vertex-to-edge share goes to sunburst.
std::vector<Ray> generate_rays(const BoundsBox& bounds, std::uint64_t seed);

// Uniform pass of n_coarse points (end points included), then n_coarse more
// drawn by inverse CDF from exp(l - l_max) over the cells of coarse samples
// within `delta` of the ray maximum.
RaySamples two_pass_sample(const Problem& problem, const Ray& ray, int n_coarse, double delta, std::uint64_t seed);

// Same procedure for many rays; each pass is a single batch across all rays.
RayBank sample_rays(const Problem& problem, const std::vector<Ray>& rays, int n_coarse, double delta, std::uint64_t seed);

// Little-endian sidecar: "RLRAYBNK", u32 version, u32 dim, u64 ray count, then
// per ray u32 kind, u32 dead, start and end as f64, u64 sample count, and per
// sample f64 t, f64 logl, u8 refined.
void write_raybank(const RayBank& bank, const std::string& path);
RayBank read_raybank(const std::string& path);

struct ScaleEstimate {
  double fine = 0.0;
  double mid = 0.0;
  double coarse = 0.0;
  int transitions = 0;
  bool fallback = false;
};

// Multi-scale curvature kappa(h) = max |second difference| / h^2 over stored
// samples at log-spaced skips h, with nearest-sample matching. The scales are
// the skips at the steepest drops of log kappa against log h.
ScaleEstimate singlewhip_scales(const RayBank& bank, const BoundsBox& bounds);

// Top-q samples by l after L-inf thinning at `radius`.
Points select_seeds(const RayBank& bank, std::size_t q, double radius);

// max(32, 4 * rays_per_kind(d)).
std::size_t default_seed_count(Index dim);

struct CoarsePeak {
  Vec location;
  double logl = 0.0;
  double width = 0.0;
  int stuck_at_oscillation = 0;
};

struct OscillationConfig {
  int n_oscillations = 3;
  int n_converge = 15;
  int n_anticonverge = 10;
  int n_cloud = 5;
  int k_smooth = 8;
  std::size_t memory = 10;
  double stick_grad = 1e-6;
  double stick_ratio = 0.1;
  double momentum = 0.9;
  double dedup_radius = 0.0;  // <= 0 picks 1e-3 * mean bound width
  std::uint64_t seed = 0;
};

struct OscillationStats {
  std::vector<int> peaks_per_oscillation;
  int repulse_rounds = 0;
  int rooster_rounds = 0;
  bool rooster_disabled = false;
  double final_max_logl = 0.0;
  Vec best_location;
};

struct OscillationResult {
  std::vector<CoarsePeak> peaks;
  OscillationStats stats;
};

// Smoothed gradient (1/K) sum_k grad l(x + sigma z_k) for every row of
// `points`, with z drawn from rng. All probes share one batch.
Points smoothed_gradient(const Problem& problem, const Points& points, const Vec& sigma, int k, Rng& rng);
// Variant with explicit offsets: draws[k] holds one z row per point.
Points smoothed_gradient(const Problem& problem, const Points& points, const Vec& sigma, const std::vector<Points>& draws);

// Momentum descent v <- mu v - alpha grad l, x <- clip(x + v), for n steps on
// every row; returns the final positions.
Points anticonverge(const Problem& problem, const Points& points, double alpha, double mu, int n_steps);

// Oscillating converge / stick / dedup / reseed / smooth / anticonverge loop.
// `initial_max` seeds the running maximum used by the stick rule. Throws
// no-modes-found when nothing is stuck after the last oscillation.
OscillationResult oscillate(const Problem& problem, const Points& seeds, const ScaleEstimate& scales, double initial_max,
                         const OscillationConfig& config);

}  // namespace raylap
