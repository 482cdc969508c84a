#pragma once

#include <optional>
#include <vector>

#include "raylap/problem.hpp"

namespace raylap {

struct ReductionReport {
  Mat rotation;      // eigenvectors of -H as columns, paired with `eigenvalues`
  Vec eigenvalues;   // of -H, ascending
  std::vector<Index> informative;
  std::vector<Index> nuisance;
  std::vector<Index> degenerate;
  Index d_eff = 0;
  double log_z_nuisance = 0.0;  // sum over nuisance of 0.5 log(2 pi / lambda)
  double log_z_degen = 0.0;     // sum over degenerate of log(chord length)
  Vec center;
  double eps_inform = 0.0;
  double eps_nuisance = 0.0;
  // Chord extent along each informative direction through the center.
  Vec reduced_lower;
  Vec reduced_upper;
};

struct Reduction {
  ReductionReport report;
  // l(center + V_info phi); absent when no direction is informative.
  std::optional<Problem> reduced;
};

// Thresholds default to 1e-6 and 1e-12 of the largest eigenvalue.
struct ReductionThresholds {
  double eps_inform = 0.0;    // <= 0 picks the relative default
  double eps_nuisance = 0.0;  // <= 0 picks the relative default
};

// Interval [t_lo, t_hi] with center + t * direction inside the box.
std::pair<double, double> chord(const BoundsBox& bounds, const Vec& center, const Vec& direction);

// Eigendecomposition of -hessian, classified as informative (lambda >
// eps_inform), nuisance (eps_nuisance < lambda <= eps_inform) or degenerate
// (|lambda| <= eps_nuisance). Throws saddle-direction on lambda < -eps_nuisance.
Reduction reduce(const Problem& problem, const Vec& center, const SymMatrix& hessian,
                 const ReductionThresholds& thresholds = {});

}  // namespace raylap
