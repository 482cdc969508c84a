#pragma once

#include <span>
#include <vector>

#include "raylap/types.hpp"

namespace raylap {

struct EigenResult {
  Vec values;   // ascending
  Mat vectors;  // orthonormal columns, column k pairs with values[k]
  int sweeps = 0;
};

// Cyclic Jacobi with a fixed (p, q) sweep order. Stops once the off-diagonal
// Frobenius norm drops below 1e-12 of the full norm, or after 100 sweeps.
EigenResult eig_symmetric(const SymMatrix& a);

// Lower Cholesky factor; throws not-positive-definite with the failing pivot.
Mat cholesky_lower(const SymMatrix& a);

// Sum of log eigenvalues computed through the Cholesky factor.
double log_det_pd(const SymMatrix& a);

// 0.5 * (a + a^T).
SymMatrix symmetrize(const Mat& a);

double logsumexp(std::span<const double> xs);
double logsumexp(const Vec& xs);

struct DedupResult {
  std::vector<Index> kept;      // ascending point indices
  std::vector<Index> survivor;  // survivor[i] is the kept index absorbing point i
};

// Greedy L-inf clustering: points are visited by descending score (ties go to
// the lower index) and dropped when within `radius` of an already kept point.
// A non-empty `scale` divides coordinate differences before measuring.
DedupResult dedup_linf(const Points& points, const Vec& scores, double radius, const Vec& scale = Vec());

}  // namespace raylap
