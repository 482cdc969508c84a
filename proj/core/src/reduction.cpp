#include "raylap/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "raylap/error.hpp"
#include "raylap/linalg.hpp"

namespace raylap {

std::pair<double, double> chord(const BoundsBox& bounds, const Vec& center, const Vec& direction) {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < center.size(); ++i) {
    const double v = direction[i];
    if (v == 0.0) continue;
    const double a = (bounds.lower()[i] - center[i]) / v;
    const double b = (bounds.upper()[i] - center[i]) / v;
    lo = std::max(lo, std::min(a, b));
    hi = std::min(hi, std::max(a, b));
  }
  if (!(hi >= lo)) return {0.0, 0.0};
  return {lo, hi};
}

Reduction reduce(const Problem& problem, const Vec& center, const SymMatrix& hessian,
                 const ReductionThresholds& thresholds) {
  const Index d = problem.dim();
  if (center.size() != d || hessian.rows() != d || hessian.cols() != d) {
    throw Error(ErrorKind::invalid_parameter, "reduction inputs do not match the problem dimension");
  }
  if (!hessian.allFinite()) throw Error(ErrorKind::numeric_input, "Hessian has non-finite entries");
  const EigenResult eig = eig_symmetric(symmetrize(-hessian));
  const double lambda_max = std::max(std::abs(eig.values[d - 1]), std::abs(eig.values[0]));
  const double eps_inform = thresholds.eps_inform > 0.0 ? thresholds.eps_inform : 1e-6 * lambda_max;
  const double eps_nuisance = thresholds.eps_nuisance > 0.0 ? thresholds.eps_nuisance : 1e-12 * lambda_max;
  if (!(eps_nuisance < eps_inform)) {
    throw Error(ErrorKind::invalid_parameter, "eps_nuisance must be smaller than eps_inform");
  }

  Reduction out;
  ReductionReport& rep = out.report;
  rep.rotation = eig.vectors;
  rep.eigenvalues = eig.values;
  rep.center = center;
  rep.eps_inform = eps_inform;
  rep.eps_nuisance = eps_nuisance;
  for (Index k = 0; k < d; ++k) {
    const double lambda = eig.values[k];
    if (lambda < -eps_nuisance) {
      throw Error(ErrorKind::saddle_direction,
                  "negative Hessian has eigenvalue " + std::to_string(lambda) + " below -eps_nuisance");
    }
    if (lambda > eps_inform) {
      rep.informative.push_back(k);
    } else if (lambda > eps_nuisance) {
      rep.nuisance.push_back(k);
      rep.log_z_nuisance += 0.5 * std::log(2.0 * std::numbers::pi / lambda);
    } else {
      rep.degenerate.push_back(k);
      const auto [lo, hi] = chord(problem.bounds(), center, eig.vectors.col(k));
      rep.log_z_degen += std::log(hi - lo);
    }
  }
  rep.d_eff = static_cast<Index>(rep.informative.size());
  if (rep.d_eff == 0) return out;

  Mat basis(d, rep.d_eff);
  rep.reduced_lower.resize(rep.d_eff);
  rep.reduced_upper.resize(rep.d_eff);
  for (Index k = 0; k < rep.d_eff; ++k) {
    basis.col(k) = eig.vectors.col(rep.informative[static_cast<std::size_t>(k)]);
    const auto [lo, hi] = chord(problem.bounds(), center, basis.col(k));
    rep.reduced_lower[k] = lo;
    rep.reduced_upper[k] = hi;
  }
  if (!((rep.reduced_upper - rep.reduced_lower).array() > 0.0).all()) {
    // Center on the boundary: no admissible reduced box.
    return out;
  }
  BatchLogDensity mapped = [problem, basis, center](const Points& phi, Eigen::Ref<Vec> values) {
    Points full(phi.rows(), center.size());
    for (Index r = 0; r < phi.rows(); ++r) {
      full.row(r) = (center + basis * phi.row(r).transpose()).transpose();
    }
    values = problem.evaluate(full);
  };
  out.reduced.emplace(BoundsBox(rep.reduced_lower, rep.reduced_upper), std::move(mapped));
  return out;
}

}  // namespace raylap
