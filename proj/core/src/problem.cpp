#include "raylap/problem.hpp"

#include <cmath>
#include <limits>

#include <tbb/blocked_range.h>
#include <tbb/parallel_for.h>

#include "raylap/error.hpp"

namespace raylap {

BoundsBox::BoundsBox(Vec lower, Vec upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() != upper_.size() || lower_.size() == 0) {
    throw Error(ErrorKind::invalid_parameter, "bounds must be non-empty and of equal length");
  }
  for (Index i = 0; i < lower_.size(); ++i) {
    if (!(upper_[i] > lower_[i]) || !std::isfinite(lower_[i]) || !std::isfinite(upper_[i])) {
      throw Error(ErrorKind::invalid_parameter, "bounds require finite lower < upper in every coordinate");
    }
  }
}

BoundsBox BoundsBox::cube(Index dim, double lo, double hi) {
  return BoundsBox(Vec::Constant(dim, lo), Vec::Constant(dim, hi));
}

double BoundsBox::log_volume() const {
  double acc = 0.0;
  for (Index i = 0; i < dim(); ++i) acc += std::log(upper_[i] - lower_[i]);
  return acc;
}

bool BoundsBox::contains(const Eigen::Ref<const Vec>& x) const {
  for (Index i = 0; i < dim(); ++i) {
    if (!(x[i] >= lower_[i] && x[i] <= upper_[i])) return false;
  }
  return true;
}

Vec BoundsBox::clip(const Eigen::Ref<const Vec>& x) const { return x.cwiseMax(lower_).cwiseMin(upper_); }

BoundsBox BoundsBox::subset(const std::vector<Index>& dims) const {
  Vec lo(static_cast<Index>(dims.size()));
  Vec hi(static_cast<Index>(dims.size()));
  for (std::size_t k = 0; k < dims.size(); ++k) {
    lo[static_cast<Index>(k)] = lower_[dims[k]];
    hi[static_cast<Index>(k)] = upper_[dims[k]];
  }
  return BoundsBox(lo, hi);
}

Problem::Problem(BoundsBox bounds, BatchLogDensity density)
    : Problem(std::move(bounds), std::move(density), std::make_shared<std::atomic<std::uint64_t>>(0)) {}

Problem::Problem(BoundsBox bounds, BatchLogDensity density, std::shared_ptr<std::atomic<std::uint64_t>> counter)
    : bounds_(std::move(bounds)), density_(std::move(density)), counter_(std::move(counter)) {
  if (!density_) throw Error(ErrorKind::invalid_parameter, "problem requires a density");
}

Problem Problem::pointwise(BoundsBox bounds, PointLogDensity density) {
  auto batch_fn = [fn = std::move(density)](const Points& batch, Eigen::Ref<Vec> out) {
    const Index n = batch.rows();
    const auto d = static_cast<std::size_t>(batch.cols());
    tbb::parallel_for(tbb::blocked_range<Index>(0, n, 16), [&](const tbb::blocked_range<Index>& r) {
      for (Index i = r.begin(); i != r.end(); ++i) {
        out[i] = fn(std::span<const double>(batch.row(i).data(), d));
      }
    });
  };
  return Problem(std::move(bounds), std::move(batch_fn));
}

Vec Problem::evaluate(const Points& batch) const {
  if (batch.cols() != dim()) throw Error(ErrorKind::invalid_parameter, "batch width does not match problem dimension");
  Vec out(batch.rows());
  if (batch.rows() == 0) return out;
  density_(batch, out);
  counter_->fetch_add(static_cast<std::uint64_t>(batch.rows()));
  return out;
}

double Problem::evaluate_one(const Eigen::Ref<const Vec>& x) const {
  Points batch(1, dim());
  batch.row(0) = x.transpose();
  return evaluate(batch)[0];
}

Problem Problem::restrict(const std::vector<Index>& active, const Vec& pinned) const {
  if (pinned.size() != dim()) throw Error(ErrorKind::invalid_parameter, "pinned vector must be full-length");
  auto parent = density_;
  const Index full = dim();
  auto fn = [parent, active, pinned, full](const Points& batch, Eigen::Ref<Vec> out) {
    Points lifted(batch.rows(), full);
    for (Index r = 0; r < batch.rows(); ++r) {
      lifted.row(r) = pinned.transpose();
      for (std::size_t k = 0; k < active.size(); ++k) lifted(r, active[k]) = batch(r, static_cast<Index>(k));
    }
    parent(lifted, out);
  };
  return Problem(bounds_.subset(active), std::move(fn), counter_);
}

Vec evaluate_finite(const Problem& problem, const Points& batch) {
  Vec v = problem.evaluate(batch);
  for (Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) v[i] = -std::numeric_limits<double>::infinity();
  }
  return v;
}

}  // namespace raylap
