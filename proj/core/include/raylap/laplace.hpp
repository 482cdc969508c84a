#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "raylap/lbfgs.hpp"
#include "raylap/precheck.hpp"
#include "raylap/problem.hpp"
#include "raylap/refine.hpp"

namespace raylap {

enum class RotationDecision { axis_aligned, rotated, inconclusive };
enum class HessianKind { diagonal, full };

const char* to_string(RotationDecision decision);
const char* to_string(HessianKind kind);

// |s - (s.u) u| / |s| with u the unit direction; 0 for a zero step.
double perp_fraction(const Vec& step, const Vec& direction);

struct PerpStats {
  double mean = 0.0;
  double max = 0.0;
  int used = 0;
  bool conclusive() const { return used >= 2; }
};

// Each accepted step s and its gradient change y are whitened with the
// diagonal curvature D = -diag_hessian (s' = D^{1/2} s, y' = D^{-1/2} y) and
// scored by perp_fraction(s', y'). For a separable quadratic y' = s' and the
// fraction vanishes; cross-coupling turns y' away from s'. Steps shorter than
// 1e-7 in whitened units are skipped.
PerpStats perpendicular_fraction(const Trajectory& trajectory, const Vec& diag_hessian);
PerpStats perpendicular_fraction(const std::vector<const Trajectory*>& trajectories, const Vec& diag_hessian);

// Mean off-diagonal curvature from the second difference along the all-ones
// direction: b = (v^T H v - a) / (d - 1), a = mean diagonal. Two evaluations.
// Returns NaN when a probe value is non-finite.
double probe_offdiag(const Problem& problem, const Peak& peak);

// Largest |v^T H v + 1| over random unit directions in whitened coordinates,
// where a diagonal Hessian predicts exactly -1. Two evaluations per direction;
// NaN on a non-finite probe.
double probe_random_directions(const Problem& problem, const Peak& peak, int count, std::uint64_t seed);

// Off-diagonals by the four-point stencil in one batch of 2d(d-1) rows,
// diagonal copied from the peak. Throws hessian-failed on a non-finite entry.
SymMatrix full_hessian(const Problem& problem, const Peak& peak);

struct RotationVerdict {
  RotationDecision decision = RotationDecision::inconclusive;
  RotationDecision trajectory_decision = RotationDecision::inconclusive;
  PerpStats perp;
  std::optional<double> probe_b;
  std::optional<double> probe_random;
  bool probe_failed = false;
};

// Departure from Gaussian shape along each axis at +-2 widths, where a
// Gaussian drops by exactly 2 nats.
struct GaussianityCheck {
  double tail_ratio = 1.0;  // mean observed drop / 2
  double asymmetry = 0.0;   // max |drop+ - drop-| / (drop+ + drop-)
  int axes_used = 0;
};

GaussianityCheck gaussianity(const Problem& problem, const Peak& peak);

struct LaplaceConfig {
  double eps_rot = 0.05;
  double eps_aligned = 0.02;
  double probe_ratio = 0.05;
  int random_probes = 3;
  double random_probe_tol = 0.05;
  bool force_full = false;
  bool check_gaussianity = true;
  std::uint64_t seed = 0;
};

struct ModeEvidence {
  Peak peak;
  double log_z = 0.0;
  HessianKind hessian_kind = HessianKind::diagonal;
  double log_det_neg_h = 0.0;
  double condition_number = 1.0;
  RotationVerdict rotation;
  std::optional<GaussianityCheck> shape;
  SymMatrix hessian;  // full matrix, diagonal when the diagonal path was used
};

RotationVerdict detect_rotation(const Problem& problem, const Peak& peak, const TrajectoryBank& bank,
                                const LaplaceConfig& config);

// Laplace evidence of one mode. The full path throws not-positive-definite
// when -H has a non-positive eigenvalue.
ModeEvidence mode_evidence(const Problem& problem, const Peak& peak, const TrajectoryBank& bank,
                           const LaplaceConfig& config);

struct EvidenceResult {
  double log_z = 0.0;           // log of the integral of the likelihood
  double log_z_vs_prior = 0.0;  // log_z minus the log prior volume
  std::vector<ModeEvidence> modes;
  PrecheckReport precheck;
  std::map<std::string, std::uint64_t> eval_counts;
  std::map<std::string, double> timing_ms;
  std::vector<std::string> warnings;
  bool reliable = true;
};

// Combines mode evidences with logsumexp in index order and adds the precheck
// marginal; `bounds` is the full original box.
EvidenceResult combine(const std::vector<ModeEvidence>& modes, const PrecheckReport& precheck, const BoundsBox& bounds);

}  // namespace raylap
