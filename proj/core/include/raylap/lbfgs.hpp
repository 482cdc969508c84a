#pragma once

#include <cstdint>
#include <deque>
#include <vector>

#include "raylap/problem.hpp"

namespace raylap {

// Curvature pairs for minimizing f = -l: s = x_{k+1} - x_k and
// y = grad f_{k+1} - grad f_k.
class History {
 public:
  explicit History(std::size_t capacity = 10) : capacity_(capacity) {}

  // Stores the pair unless s^T y <= 1e-12 |s| |y|. Returns whether it was kept.
  bool push(const Vec& s, const Vec& y);
  void clear() { pairs_.clear(); }

  std::size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }
  std::size_t capacity() const { return capacity_; }

  struct Pair {
    Vec s;
    Vec y;
    double rho;  // 1 / s^T y
  };
  // Oldest first.
  const std::deque<Pair>& pairs() const { return pairs_; }

 private:
  std::size_t capacity_;
  std::deque<Pair> pairs_;
};

// Central differences; every probe of every point goes out in one batch of
// 2*N*d rows. Entries with a non-finite probe are zeroed and, when `flagged`
// is given, marked there.
Points fd_gradient(const Problem& problem, const Points& points, const Points& steps,
                   std::vector<std::uint8_t>* flagged = nullptr);
Points fd_gradient(const Problem& problem, const Points& points, const Vec& step,
                   std::vector<std::uint8_t>* flagged = nullptr);

// Per-coordinate step max(sqrt(eps) (1 + |x_i|), 1e-3 width); width <= 0 means
// no estimate.
Points fd_steps(const Points& points, const Vec& widths);

// Quasi-Newton direction -H^{-1} grad for the minimized function f; the
// initial scaling uses the newest pair. Empty history gives -grad.
Vec two_loop_direction(const Vec& grad, const History& history);

// gamma = s^T y / y^T y of the newest pair; throws missing-curvature when empty.
double width_estimate(const History& history);

struct Trajectory {
  std::vector<Vec> positions;  // visit order, starting point included
  std::vector<double> logls;
  std::vector<Vec> grads;      // gradient of l at each visited position
  int origin = -1;             // producing peak or seed group, -1 if none
};

struct TrajectoryBank {
  std::vector<Trajectory> items;
};

struct BatchState {
  Points positions;
  Points grads;  // gradient of l
  Vec logls;
  std::vector<History> history;
  std::vector<std::uint8_t> frozen;
  std::vector<std::uint8_t> failed;  // -inf at start, or a flagged gradient
  Vec widths;                        // finite-difference width hint, <= 0 if unknown
  std::size_t size() const { return static_cast<std::size_t>(positions.rows()); }
};

struct StepOptions {
  std::size_t memory = 10;
  double armijo = 1e-4;
  double shrink = 0.5;
  int max_backtracks = 20;
  // L-inf length cap for the first step taken without curvature history.
  double first_step = 1.0;
};

// Evaluates l and gradients for the starting points (two batches). Samples
// with non-finite l are frozen and marked failed.
BatchState init_state(const Problem& problem, const Points& positions, const Vec& widths, std::size_t memory);

// Re-initializes the listed rows at new positions, clearing their history.
void reset_rows(BatchState& state, const Problem& problem, const std::vector<Index>& rows, const Points& positions);

// Batched ascent on l. A sample halts once |grad|_inf < tolerance_linf; line
// search candidates of all active samples share one batch per backtracking
// round, and new gradients share one batch per iteration. Iterates leaving
// the box are rejected by the line search without being evaluated. Returns
// the accepted iterates of every sample, starting point first.
TrajectoryBank step_batch(BatchState& state, const Problem& problem, int n_iters, double tolerance_linf,
                          const StepOptions& options = {});

}  // namespace raylap
