#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "raylap/types.hpp"

namespace raylap {

class BoundsBox {
 public:
  BoundsBox() = default;
  BoundsBox(Vec lower, Vec upper);

  static BoundsBox cube(Index dim, double lo, double hi);

  Index dim() const { return lower_.size(); }
  const Vec& lower() const { return lower_; }
  const Vec& upper() const { return upper_; }
  Vec width() const { return upper_ - lower_; }
  Vec center() const { return 0.5 * (lower_ + upper_); }
  Vec half_width() const { return 0.5 * (upper_ - lower_); }
  double mean_width() const { return width().mean(); }
  double log_volume() const;

  bool contains(const Eigen::Ref<const Vec>& x) const;
  Vec clip(const Eigen::Ref<const Vec>& x) const;
  BoundsBox subset(const std::vector<Index>& dims) const;

 private:
  Vec lower_;
  Vec upper_;
};

// Writes one log-density per row of the batch into out (already sized).
using BatchLogDensity = std::function<void(const Points& batch, Eigen::Ref<Vec> out)>;
using PointLogDensity = std::function<double(std::span<const double> x)>;

// Bounded uniform prior plus a batched log-likelihood with call accounting.
// Copies share the evaluation counter.
class Problem {
 public:
  Problem(BoundsBox bounds, BatchLogDensity density);

  // Wraps a per-point density; batches fan out over the worker pool and each
  // row writes only its own slot, so results do not depend on scheduling.
  static Problem pointwise(BoundsBox bounds, PointLogDensity density);

  Index dim() const { return bounds_.dim(); }
  const BoundsBox& bounds() const { return bounds_; }

  // Raw values; non-finite outputs pass through.
  Vec evaluate(const Points& batch) const;
  double evaluate_one(const Eigen::Ref<const Vec>& x) const;

  std::uint64_t eval_count() const { return counter_->load(); }

  // Subproblem over `active` coordinates with every other coordinate pinned to
  // `pinned` (full-length). Shares this problem's counter.
  Problem restrict(const std::vector<Index>& active, const Vec& pinned) const;

 private:
  Problem(BoundsBox bounds, BatchLogDensity density, std::shared_ptr<std::atomic<std::uint64_t>> counter);

  BoundsBox bounds_;
  BatchLogDensity density_;
  std::shared_ptr<std::atomic<std::uint64_t>> counter_;
};

// Evaluates and maps every non-finite value to -inf.
Vec evaluate_finite(const Problem& problem, const Points& batch);

}  // namespace raylap
