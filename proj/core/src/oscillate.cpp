#include <algorithm>
#include <cmath>
#include <limits>

#include "raylap/discovery.hpp"
#include "raylap/error.hpp"
#include "raylap/linalg.hpp"

namespace raylap {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Points gather(const Points& src, const std::vector<Index>& rows) {
  Points out(static_cast<Index>(rows.size()), src.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Index>(k)) = src.row(rows[k]);
  return out;
}

Vec random_unit(Index d, Rng& rng) {
  Vec u(d);
  double norm = 0.0;
  while (!(norm > 0.0)) {
    for (Index i = 0; i < d; ++i) u[i] = rng.normal();
    norm = u.norm();
  }
  return u / norm;
}

double max_finite(const Vec& v) {
  double best = kNegInf;
  for (Index i = 0; i < v.size(); ++i) {
    if (std::isfinite(v[i])) best = std::max(best, v[i]);
  }
  return best;
}

}  // namespace

Points smoothed_gradient(const Problem& problem, const Points& points, const Vec& sigma, const std::vector<Points>& draws) {
  const Index n = points.rows();
  const Index d = points.cols();
  if (draws.empty()) throw Error(ErrorKind::invalid_parameter, "smoothing needs at least one draw");
  Points shifted(static_cast<Index>(draws.size()) * n, d);
  for (std::size_t k = 0; k < draws.size(); ++k) {
    for (Index r = 0; r < n; ++r) {
      shifted.row(static_cast<Index>(k) * n + r) = points.row(r) + draws[k].row(r).cwiseProduct(sigma.transpose());
    }
  }
  const Points g = fd_gradient(problem, shifted, fd_steps(shifted, Vec()));
  Points mean = Points::Zero(n, d);
  for (std::size_t k = 0; k < draws.size(); ++k) mean += g.middleRows(static_cast<Index>(k) * n, n);
  return mean / static_cast<double>(draws.size());
}

Points smoothed_gradient(const Problem& problem, const Points& points, const Vec& sigma, int k, Rng& rng) {
  if (k < 1) throw Error(ErrorKind::invalid_parameter, "smoothing needs at least one draw");
  std::vector<Points> draws(static_cast<std::size_t>(k), Points(points.rows(), points.cols()));
  for (auto& z : draws) {
    for (Index r = 0; r < z.rows(); ++r) {
      for (Index c = 0; c < z.cols(); ++c) z(r, c) = rng.normal();
    }
  }
  return smoothed_gradient(problem, points, sigma, draws);
}

Points anticonverge(const Problem& problem, const Points& points, double alpha, double mu, int n_steps) {
  Points x = points;
  Points v = Points::Zero(points.rows(), points.cols());
  const BoundsBox& box = problem.bounds();
  for (int step = 0; step < n_steps; ++step) {
    const Points g = fd_gradient(problem, x, fd_steps(x, Vec()));
    v = mu * v - alpha * g;
    for (Index r = 0; r < x.rows(); ++r) {
      const Vec moved = x.row(r).transpose() + v.row(r).transpose();
      x.row(r) = box.clip(moved).transpose();
    }
  }
  return x;
}

OscillationResult oscillate(const Problem& problem, const Points& seeds, const ScaleEstimate& scales, double initial_max,
                         const OscillationConfig& config) {
  if (seeds.rows() < 1) throw Error(ErrorKind::invalid_parameter, "at least one seed is required");
  if (config.n_oscillations < 1) throw Error(ErrorKind::invalid_parameter, "at least one oscillation is required");
  const Index d = problem.dim();
  const Index n = seeds.rows();
  const BoundsBox& box = problem.bounds();
  const double radius = config.dedup_radius > 0.0 ? config.dedup_radius : 1e-3 * box.mean_width();
  const double log_ratio = std::log(config.stick_ratio);
  Rng rng(config.seed);

  BatchState state = init_state(problem, seeds, Vec(), config.memory);
  double lmax = std::max(initial_max, max_finite(state.logls));

  StepOptions step_options;
  step_options.memory = config.memory;
  step_options.first_step = 0.1 * box.mean_width();

  OscillationResult result;
  std::vector<int> stuck_since(static_cast<std::size_t>(n), -1);
  bool rooster_pending = false;
  int rooster_baseline = 0;
  std::vector<Index> kept;

  for (int osc = 0; osc < config.n_oscillations; ++osc) {
    for (Index i = 0; i < n; ++i) state.frozen[static_cast<std::size_t>(i)] = state.failed[static_cast<std::size_t>(i)];
    step_batch(state, problem, config.n_converge, config.stick_grad, step_options);
    lmax = std::max(lmax, max_finite(state.logls));

    std::vector<Index> stuck;
    for (Index i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      const bool flat = state.grads.row(i).cwiseAbs().maxCoeff() < config.stick_grad;
      if (!state.failed[k] && flat && state.logls[i] >= lmax + log_ratio) {
        stuck.push_back(i);
        if (stuck_since[k] < 0) stuck_since[k] = osc;
      } else {
        stuck_since[k] = -1;
      }
    }

    std::vector<Index> lost;
    kept.clear();
    if (!stuck.empty()) {
      const Points pts = gather(state.positions, stuck);
      Vec scores(static_cast<Index>(stuck.size()));
      for (std::size_t k = 0; k < stuck.size(); ++k) scores[static_cast<Index>(k)] = state.logls[stuck[k]];
      const DedupResult dd = dedup_linf(pts, scores, radius);
      for (std::size_t k = 0; k < stuck.size(); ++k) {
        if (dd.survivor[k] == static_cast<Index>(k)) kept.push_back(stuck[k]);
        else lost.push_back(stuck[k]);
      }
    }
    result.stats.peaks_per_oscillation.push_back(static_cast<int>(kept.size()));
    if (rooster_pending) {
      if (static_cast<int>(kept.size()) <= rooster_baseline) result.stats.rooster_disabled = true;
      rooster_pending = false;
    }
    if (osc + 1 == config.n_oscillations) break;

    std::vector<std::uint8_t> is_kept(static_cast<std::size_t>(n), 0);
    for (Index i : kept) is_kept[static_cast<std::size_t>(i)] = 1;
    std::vector<Index> slots = lost;
    std::vector<Index> unconverged;
    for (Index i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      if (state.failed[k]) slots.push_back(i);
      else if (stuck_since[k] < 0) unconverged.push_back(i);
    }
    std::sort(slots.begin(), slots.end());

    if (!slots.empty()) {
      Points fresh(static_cast<Index>(slots.size()), d);
      if (unconverged.size() >= 5) {
        ++result.stats.repulse_rounds;
        for (std::size_t k = 0; k < slots.size(); ++k) {
          const Index src = unconverged[rng.below(unconverged.size())];
          const Vec u = random_unit(d, rng);
          const double dist = rng.uniform(scales.mid, scales.coarse);
          fresh.row(static_cast<Index>(k)) = box.clip(state.positions.row(src).transpose() + dist * u).transpose();
        }
      } else if (!result.stats.rooster_disabled && !kept.empty()) {
        ++result.stats.rooster_rounds;
        const Index r = std::min<Index>(d, static_cast<Index>(slots.size()));
        Mat g(d, r);
        for (Index j = 0; j < r; ++j) {
          for (Index i = 0; i < d; ++i) g(i, j) = rng.normal();
        }
        Eigen::HouseholderQR<Mat> qr(g);
        const Mat q = qr.householderQ() * Mat::Identity(d, r);
        for (std::size_t k = 0; k < slots.size(); ++k) {
          const Index peak = kept[k % kept.size()];
          const Index col = static_cast<Index>(k) % r;
          const double sign = ((static_cast<Index>(k) / r) % 2 == 0) ? 1.0 : -1.0;
          const Vec x = state.positions.row(peak).transpose() + sign * scales.coarse * q.col(col);
          fresh.row(static_cast<Index>(k)) = box.clip(x).transpose();
        }
        rooster_pending = true;
        rooster_baseline = static_cast<int>(kept.size());
      } else {
        for (std::size_t k = 0; k < slots.size(); ++k) {
          for (Index i = 0; i < d; ++i) fresh(static_cast<Index>(k), i) = rng.uniform(box.lower()[i], box.upper()[i]);
        }
      }
      reset_rows(state, problem, slots, fresh);
      for (Index i : slots) stuck_since[static_cast<std::size_t>(i)] = -1;
    }

    std::vector<Index> movable;
    for (Index i = 0; i < n; ++i) {
      if (!is_kept[static_cast<std::size_t>(i)]) movable.push_back(i);
    }
    if (movable.empty()) continue;

    Points x = gather(state.positions, movable);
    Vec sigma = Vec::Constant(d, scales.fine);
    if (x.rows() >= 2) {
      const Eigen::RowVectorXd mean = x.colwise().mean();
      const Vec spread = ((x.rowwise() - mean).array().square().colwise().sum() / static_cast<double>(x.rows() - 1)).sqrt().transpose();
      sigma = spread.cwiseMax(1e-3 * scales.fine);
    }
    for (int step = 0; step < config.n_cloud; ++step) {
      const Points g = smoothed_gradient(problem, x, sigma, config.k_smooth, rng);
      for (Index r = 0; r < x.rows(); ++r) {
        const double norm = g.row(r).cwiseAbs().maxCoeff();
        if (!(norm > 0.0) || !std::isfinite(norm)) continue;
        const Vec moved = x.row(r).transpose() + (scales.fine / norm) * g.row(r).transpose();
        x.row(r) = box.clip(moved).transpose();
      }
    }
    x = anticonverge(problem, x, 0.5 * scales.fine, config.momentum, config.n_anticonverge);
    reset_rows(state, problem, movable, x);
    for (Index i : movable) stuck_since[static_cast<std::size_t>(i)] = -1;
  }

  result.stats.final_max_logl = lmax;
  Index best = 0;
  for (Index i = 1; i < n; ++i) {
    if (state.logls[i] > state.logls[best]) best = i;
  }
  result.stats.best_location = state.positions.row(best).transpose();

  for (Index i : kept) {
    if (state.logls[i] < lmax + log_ratio) continue;
    CoarsePeak peak;
    peak.location = state.positions.row(i).transpose();
    peak.logl = state.logls[i];
    const History& hist = state.history[static_cast<std::size_t>(i)];
    const double gamma = hist.empty() ? 0.0 : width_estimate(hist);
    peak.width = gamma > 0.0 ? std::sqrt(gamma) : scales.fine;
    peak.stuck_at_oscillation = stuck_since[static_cast<std::size_t>(i)];
    result.peaks.push_back(std::move(peak));
  }
  if (result.peaks.empty()) {
    std::string where;
    for (Index i = 0; i < d && i < 8; ++i) where += (i ? ", " : "") + std::to_string(result.stats.best_location[i]);
    if (d > 8) where += ", ...";
    throw Error(ErrorKind::no_modes_found, "no sample converged to an acceptable maximum; best l = " +
                                               std::to_string(state.logls[best]) + " at (" + where + ")");
  }
  return result;
}

}  // namespace raylap
