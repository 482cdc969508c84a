#include "raylap/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "raylap/error.hpp"

namespace raylap {

namespace {

void require_finite(const Mat& a) {
  if (!a.allFinite()) throw Error(ErrorKind::numeric_input, "matrix has non-finite entries");
}

void require_square(const Mat& a) {
  if (a.rows() != a.cols()) throw Error(ErrorKind::invalid_parameter, "matrix must be square");
}

double off_diagonal_norm(const Mat& a) {
  double acc = 0.0;
  for (Index j = 0; j < a.cols(); ++j) {
    for (Index i = 0; i < a.rows(); ++i) {
      if (i != j) acc += a(i, j) * a(i, j);
    }
  }
  return std::sqrt(acc);
}

}  // namespace

EigenResult eig_symmetric(const SymMatrix& input) {
  require_square(input);
  require_finite(input);
  const Index n = input.rows();
  Mat a = symmetrize(input);
  Mat v = Mat::Identity(n, n);
  const double total = a.norm();
  const double target = 1e-12 * total;

  int sweep = 0;
  for (; sweep < 100; ++sweep) {
    if (off_diagonal_norm(a) <= target) break;
    for (Index p = 0; p + 1 < n; ++p) {
      for (Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double app = a(p, p);
        const double aqq = a(q, q);
        // Rotation angle from the classical stable formulation.
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (Index k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index x, Index y) { return a(x, x) < a(y, y); });

  EigenResult out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Index k = 0; k < n; ++k) {
    out.values[k] = a(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(k)]);
    out.vectors.col(k) = v.col(order[static_cast<std::size_t>(k)]);
  }
  out.sweeps = sweep;
  return out;
}

Mat cholesky_lower(const SymMatrix& a) {
  require_square(a);
  require_finite(a);
  const Index n = a.rows();
  Mat l = Mat::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    double diag = a(j, j);
    for (Index k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
    if (!(diag > 0.0)) {
      throw Error(ErrorKind::not_positive_definite,
                  "Cholesky breakdown at pivot " + std::to_string(j), static_cast<int>(j));
    }
    const double ljj = std::sqrt(diag);
    l(j, j) = ljj;
    for (Index i = j + 1; i < n; ++i) {
      double acc = a(i, j);
      for (Index k = 0; k < j; ++k) acc -= l(i, k) * l(j, k);
      l(i, j) = acc / ljj;
    }
  }
  return l;
}

double log_det_pd(const SymMatrix& a) {
  const Mat l = cholesky_lower(a);
  double acc = 0.0;
  for (Index i = 0; i < l.rows(); ++i) acc += std::log(l(i, i));
  return 2.0 * acc;
}

SymMatrix symmetrize(const Mat& a) {
  require_square(a);
  return 0.5 * (a + a.transpose());
}

double logsumexp(std::span<const double> xs) {
  if (xs.empty()) throw Error(ErrorKind::invalid_parameter, "logsumexp of an empty vector");
  const double top = *std::max_element(xs.begin(), xs.end());
  if (top == -std::numeric_limits<double>::infinity()) return top;
  if (!std::isfinite(top)) return top;
  double acc = 0.0;
  for (double x : xs) acc += std::exp(x - top);
  return top + std::log(acc);
}

double logsumexp(const Vec& xs) { return logsumexp(std::span<const double>(xs.data(), static_cast<std::size_t>(xs.size()))); }

DedupResult dedup_linf(const Points& points, const Vec& scores, double radius, const Vec& scale) {
  if (!(radius > 0.0)) throw Error(ErrorKind::invalid_parameter, "dedup radius must be positive");
  const Index n = points.rows();
  if (scores.size() != n) throw Error(ErrorKind::invalid_parameter, "one score per point is required");
  const bool scaled = scale.size() > 0;
  if (scaled && scale.size() != points.cols()) throw Error(ErrorKind::invalid_parameter, "scale length must match dimension");

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  // NaN scores rank last.
  auto key = [&](Index i) { return std::isnan(scores[i]) ? -std::numeric_limits<double>::infinity() : scores[i]; };
  std::stable_sort(order.begin(), order.end(), [&](Index x, Index y) { return key(x) > key(y); });

  DedupResult out;
  out.survivor.assign(static_cast<std::size_t>(n), -1);
  std::vector<Index> kept;
  for (Index i : order) {
    Index absorbed_by = -1;
    for (Index k : kept) {
      double dist = 0.0;
      for (Index c = 0; c < points.cols(); ++c) {
        double delta = std::abs(points(i, c) - points(k, c));
        if (scaled) delta /= scale[c];
        dist = std::max(dist, delta);
        if (dist > radius) break;
      }
      if (dist <= radius) {
        absorbed_by = k;
        break;
      }
    }
    if (absorbed_by < 0) {
      kept.push_back(i);
      out.survivor[static_cast<std::size_t>(i)] = i;
    } else {
      out.survivor[static_cast<std::size_t>(i)] = absorbed_by;
    }
  }
  std::sort(kept.begin(), kept.end());
  out.kept = std::move(kept);
  return out;
}

}  // namespace raylap
