#include "raylap/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "raylap/error.hpp"

namespace raylap {

namespace {

constexpr double kSqrtEps = 1.4901161193847656e-08;

double linf(const Eigen::Ref<const Vec>& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

}  // namespace

bool History::push(const Vec& s, const Vec& y) {
  const double sy = s.dot(y);
  if (!std::isfinite(sy) || sy <= 1e-12 * s.norm() * y.norm()) return false;
  pairs_.push_back(Pair{s, y, 1.0 / sy});
  while (pairs_.size() > capacity_) pairs_.pop_front();
  return true;
}

Points fd_steps(const Points& points, const Vec& widths) {
  Points steps(points.rows(), points.cols());
  for (Index r = 0; r < points.rows(); ++r) {
    const double w = widths.size() > 0 ? widths[r] : 0.0;
    for (Index c = 0; c < points.cols(); ++c) {
      double e = kSqrtEps * (1.0 + std::abs(points(r, c)));
      if (w > 0.0) e = std::max(e, 1e-3 * w);
      steps(r, c) = e;
    }
  }
  return steps;
}

Points fd_gradient(const Problem& problem, const Points& points, const Points& steps, std::vector<std::uint8_t>* flagged) {
  const Index n = points.rows();
  const Index d = points.cols();
  if (steps.rows() != n || steps.cols() != d) throw Error(ErrorKind::invalid_parameter, "one step per coordinate is required");
  if (!(steps.array() > 0.0).all()) throw Error(ErrorKind::invalid_parameter, "finite-difference steps must be positive");
  Points probes(2 * n * d, d);
  Points spans(n, d);
  for (Index p = 0; p < n; ++p) {
    for (Index i = 0; i < d; ++i) {
      const Index row = 2 * (p * d + i);
      probes.row(row) = points.row(p);
      probes.row(row + 1) = points.row(p);
      const double x = points(p, i);
      const double up = x + steps(p, i);
      const double down = x - steps(p, i);
      probes(row, i) = up;
      probes(row + 1, i) = down;
      // Exactly representable spacing.
      spans(p, i) = up - down;
    }
  }
  const Vec values = problem.evaluate(probes);
  Points grad(n, d);
  if (flagged) flagged->assign(static_cast<std::size_t>(n), 0);
  for (Index p = 0; p < n; ++p) {
    for (Index i = 0; i < d; ++i) {
      const Index row = 2 * (p * d + i);
      const double fp = values[row];
      const double fm = values[row + 1];
      if (std::isfinite(fp) && std::isfinite(fm)) {
        grad(p, i) = (fp - fm) / spans(p, i);
      } else {
        grad(p, i) = 0.0;
        if (flagged) (*flagged)[static_cast<std::size_t>(p)] = 1;
      }
    }
  }
  return grad;
}

Points fd_gradient(const Problem& problem, const Points& points, const Vec& step, std::vector<std::uint8_t>* flagged) {
  if (step.size() != points.cols()) throw Error(ErrorKind::invalid_parameter, "step length must match dimension");
  Points steps(points.rows(), points.cols());
  for (Index r = 0; r < points.rows(); ++r) steps.row(r) = step.transpose();
  return fd_gradient(problem, points, steps, flagged);
}

Vec two_loop_direction(const Vec& grad, const History& history) {
  if (history.empty()) return -grad;
  const auto& pairs = history.pairs();
  std::vector<double> alpha(pairs.size());
  Vec q = grad;
  for (std::size_t k = pairs.size(); k-- > 0;) {
    alpha[k] = pairs[k].rho * pairs[k].s.dot(q);
    q -= alpha[k] * pairs[k].y;
  }
  const auto& newest = pairs.back();
  const double gamma = newest.s.dot(newest.y) / newest.y.squaredNorm();
  Vec r = gamma * q;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const double beta = pairs[k].rho * pairs[k].y.dot(r);
    r += pairs[k].s * (alpha[k] - beta);
  }
  return -r;
}

double width_estimate(const History& history) {
  if (history.empty()) throw Error(ErrorKind::missing_curvature, "no curvature pair stored");
  const auto& newest = history.pairs().back();
  return newest.s.dot(newest.y) / newest.y.squaredNorm();
}

BatchState init_state(const Problem& problem, const Points& positions, const Vec& widths, std::size_t memory) {
  BatchState state;
  const Index n = positions.rows();
  state.positions = positions;
  state.grads = Points::Zero(n, positions.cols());
  state.logls = Vec::Constant(n, -std::numeric_limits<double>::infinity());
  state.history.assign(static_cast<std::size_t>(n), History(memory));
  state.frozen.assign(static_cast<std::size_t>(n), 0);
  state.failed.assign(static_cast<std::size_t>(n), 0);
  state.widths = widths.size() == n ? widths : Vec::Zero(n);
  std::vector<Index> rows(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) rows[static_cast<std::size_t>(i)] = i;
  reset_rows(state, problem, rows, positions);
  return state;
}

void reset_rows(BatchState& state, const Problem& problem, const std::vector<Index>& rows, const Points& positions) {
  if (rows.empty()) return;
  const Index d = state.positions.cols();
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const Index r = rows[k];
    state.positions.row(r) = positions.row(static_cast<Index>(k));
    state.history[static_cast<std::size_t>(r)].clear();
    state.frozen[static_cast<std::size_t>(r)] = 0;
    state.failed[static_cast<std::size_t>(r)] = 0;
  }
  const Vec values = evaluate_finite(problem, positions);
  std::vector<Index> live;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const Index r = rows[k];
    state.logls[r] = values[static_cast<Index>(k)];
    state.grads.row(r).setZero();
    if (std::isfinite(values[static_cast<Index>(k)])) {
      live.push_back(static_cast<Index>(k));
    } else {
      state.frozen[static_cast<std::size_t>(r)] = 1;
      state.failed[static_cast<std::size_t>(r)] = 1;
    }
  }
  if (live.empty()) return;
  Points pts(static_cast<Index>(live.size()), d);
  Vec widths(static_cast<Index>(live.size()));
  for (std::size_t k = 0; k < live.size(); ++k) {
    pts.row(static_cast<Index>(k)) = positions.row(live[k]);
    widths[static_cast<Index>(k)] = state.widths[rows[static_cast<std::size_t>(live[k])]];
  }
  const Points grads = fd_gradient(problem, pts, fd_steps(pts, widths));
  for (std::size_t k = 0; k < live.size(); ++k) {
    state.grads.row(rows[static_cast<std::size_t>(live[k])]) = grads.row(static_cast<Index>(k));
  }
}

TrajectoryBank step_batch(BatchState& state, const Problem& problem, int n_iters, double tolerance_linf,
                          const StepOptions& options) {
  if (n_iters < 1) throw Error(ErrorKind::invalid_parameter, "step_batch needs at least one iteration");
  const Index n = state.positions.rows();
  const Index d = state.positions.cols();
  const BoundsBox& box = problem.bounds();

  TrajectoryBank bank;
  bank.items.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    auto& t = bank.items[static_cast<std::size_t>(i)];
    t.positions.push_back(state.positions.row(i).transpose());
    t.logls.push_back(state.logls[i]);
    t.grads.push_back(state.grads.row(i).transpose());
  }

  std::vector<std::uint8_t> stalled(static_cast<std::size_t>(n), 0);
  for (int iter = 0; iter < n_iters; ++iter) {
    std::vector<Index> active;
    for (Index i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      if (state.frozen[k] || state.failed[k] || stalled[k]) continue;
      if (linf(state.grads.row(i).transpose()) < tolerance_linf) continue;
      active.push_back(i);
    }
    if (active.empty()) break;

    const auto m = active.size();
    Points dir(static_cast<Index>(m), d);
    Vec slope(static_cast<Index>(m));
    Vec alpha(static_cast<Index>(m));
    for (std::size_t a = 0; a < m; ++a) {
      const Index i = active[a];
      History& hist = state.history[static_cast<std::size_t>(i)];
      const Vec g = state.grads.row(i).transpose();
      Vec p = two_loop_direction(-g, hist);
      double gp = g.dot(p);
      if (!(gp > 0.0) || !p.allFinite()) {
        hist.clear();
        p = g;
        gp = g.squaredNorm();
      }
      dir.row(static_cast<Index>(a)) = p.transpose();
      slope[static_cast<Index>(a)] = gp;
      alpha[static_cast<Index>(a)] = hist.empty() ? std::min(1.0, options.first_step / linf(p)) : 1.0;
    }

    std::vector<std::size_t> pending(m);
    for (std::size_t a = 0; a < m; ++a) pending[a] = a;
    std::vector<std::size_t> accepted;
    Points new_pos(static_cast<Index>(m), d);
    Vec new_logl(static_cast<Index>(m));
    for (int round = 0; round <= options.max_backtracks && !pending.empty(); ++round) {
      std::vector<std::size_t> inside;
      Points trial(static_cast<Index>(pending.size()), d);
      Index rows = 0;
      std::vector<std::size_t> retry;
      for (std::size_t a : pending) {
        const Index i = active[a];
        const Vec x = state.positions.row(i).transpose() + alpha[static_cast<Index>(a)] * dir.row(static_cast<Index>(a)).transpose();
        if (box.contains(x)) {
          trial.row(rows++) = x.transpose();
          inside.push_back(a);
        } else {
          retry.push_back(a);
        }
      }
      const Vec values = rows > 0 ? evaluate_finite(problem, trial.topRows(rows)) : Vec();
      for (std::size_t k = 0; k < inside.size(); ++k) {
        const std::size_t a = inside[k];
        const Index i = active[a];
        const double target = state.logls[i] + options.armijo * alpha[static_cast<Index>(a)] * slope[static_cast<Index>(a)];
        const double v = values[static_cast<Index>(k)];
        if (std::isfinite(v) && v >= target) {
          new_pos.row(static_cast<Index>(a)) = trial.row(static_cast<Index>(k));
          new_logl[static_cast<Index>(a)] = v;
          accepted.push_back(a);
        } else {
          retry.push_back(a);
        }
      }
      for (std::size_t a : retry) alpha[static_cast<Index>(a)] *= options.shrink;
      std::sort(retry.begin(), retry.end());
      pending = std::move(retry);
    }
    for (std::size_t a : pending) {
      const Index i = active[a];
      stalled[static_cast<std::size_t>(i)] = 1;
      state.history[static_cast<std::size_t>(i)].clear();
    }
    if (accepted.empty()) continue;
    std::sort(accepted.begin(), accepted.end());

    Points pts(static_cast<Index>(accepted.size()), d);
    Vec widths(static_cast<Index>(accepted.size()));
    for (std::size_t k = 0; k < accepted.size(); ++k) {
      pts.row(static_cast<Index>(k)) = new_pos.row(static_cast<Index>(accepted[k]));
      widths[static_cast<Index>(k)] = state.widths[active[accepted[k]]];
    }
    std::vector<std::uint8_t> flagged;
    const Points grads = fd_gradient(problem, pts, fd_steps(pts, widths), &flagged);
    for (std::size_t k = 0; k < accepted.size(); ++k) {
      const std::size_t a = accepted[k];
      const Index i = active[a];
      const Vec x_new = pts.row(static_cast<Index>(k)).transpose();
      const Vec g_new = grads.row(static_cast<Index>(k)).transpose();
      const Vec s = x_new - state.positions.row(i).transpose();
      const Vec y = state.grads.row(i).transpose() - g_new;
      state.history[static_cast<std::size_t>(i)].push(s, y);
      state.positions.row(i) = x_new.transpose();
      state.grads.row(i) = g_new.transpose();
      state.logls[i] = new_logl[static_cast<Index>(a)];
      if (flagged[k]) state.failed[static_cast<std::size_t>(i)] = 1;
      auto& t = bank.items[static_cast<std::size_t>(i)];
      t.positions.push_back(x_new);
      t.logls.push_back(state.logls[i]);
      t.grads.push_back(g_new);
    }
  }
  return bank;
}

}  // namespace raylap
