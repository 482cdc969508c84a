#pragma once

// Reference values and brute-force checkers that share no code with the
// library. High-precision constants come from mpmath (30 digits) runs of the
// integrals named next to each value.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

inline const double kLog2Pi = std::log(2.0 * std::numbers::pi);

// log of the integral of (1 + x^2/3)^-2 over R.
inline constexpr double kStudentT3PerDim = 1.00088884962351;
// log of the integral of exp(-r0) with the twisted 2-D integrand, rho = 0.8.
inline constexpr double kTwisted2D = 1.98244803662821280928;
// Ring radius 3, width 0.3.
inline constexpr double kRing2D = 2.65145508395619190561;
inline constexpr double kRing3D = 4.45316488403741498890;
inline constexpr double kRing8D = 11.0849056417509224077;
// (2 + cos(x/2) cos(y/2))^5 integrated over [0, 4 pi]^2.
inline constexpr double kEggbox = 240.91798882619272261;

inline double gaussian_log_z(const Eigen::VectorXd& variances) {
  double s = 0.5 * static_cast<double>(variances.size()) * kLog2Pi;
  for (Eigen::Index i = 0; i < variances.size(); ++i) s += 0.5 * std::log(variances[i]);
  return s;
}

// log det through Eigen's own symmetric solver.
inline double log_det(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  return es.eigenvalues().array().log().sum();
}

inline Eigen::MatrixXd random_pd(int d, std::mt19937_64& rng, double floor = 0.1) {
  std::normal_distribution<double> n01;
  Eigen::MatrixXd g(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = n01(rng);
  Eigen::MatrixXd a = g * g.transpose() / d;
  a.diagonal().array() += floor;
  return 0.5 * (a + a.transpose());
}

// Direct O(N^2) statement of the greedy rule: visit by descending score
// (lower index first on ties), keep a point unless a kept point is within
// radius.
inline std::vector<long> greedy_survivors(const Eigen::MatrixXd& pts, const Eigen::VectorXd& scores, double radius) {
  const long n = pts.rows();
  std::vector<long> order(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](long a, long b) { return scores[a] > scores[b]; });
  std::vector<long> kept;
  for (long i : order) {
    bool near = false;
    for (long k : kept) near = near || (pts.row(i) - pts.row(k)).cwiseAbs().maxCoeff() <= radius;
    if (!near) kept.push_back(i);
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

}  // namespace oracle
