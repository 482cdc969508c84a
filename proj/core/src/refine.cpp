#include "raylap/refine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "raylap/error.hpp"
#include "raylap/linalg.hpp"
#include "raylap/rng.hpp"

namespace raylap {

namespace {

constexpr int kFastSeeds = 20;
constexpr double kRingFactor = 0.9;

// Second differences for many centers in one batch of 2 * n * d rows, reusing
// the known center values.
Points stencil_batch(const Problem& problem, const Points& centers, const Vec& center_logl, const Points& steps,
                     std::vector<std::uint8_t>& unreliable) {
  const Index n = centers.rows();
  const Index d = centers.cols();
  Points probes(2 * n * d, d);
  for (Index r = 0; r < n; ++r) {
    for (Index i = 0; i < d; ++i) {
      const Index base = 2 * (r * d + i);
      probes.row(base) = centers.row(r);
      probes.row(base + 1) = centers.row(r);
      probes(base, i) += steps(r, i);
      probes(base + 1, i) -= steps(r, i);
    }
  }
  const Vec values = problem.evaluate(probes);
  Points h(n, d);
  unreliable.assign(static_cast<std::size_t>(n * d), 0);
  for (Index r = 0; r < n; ++r) {
    for (Index i = 0; i < d; ++i) {
      const Index base = 2 * (r * d + i);
      const double plus = values[base];
      const double minus = values[base + 1];
      // Recompute the realized spacing so the divisor matches the stencil.
      const double hp = probes(base, i) - centers(r, i);
      const double hm = centers(r, i) - probes(base + 1, i);
      if (!std::isfinite(plus) || !std::isfinite(minus) || !std::isfinite(center_logl[r]) || !(hp > 0.0) ||
          !(hm > 0.0)) {
        h(r, i) = std::numeric_limits<double>::quiet_NaN();
        unreliable[static_cast<std::size_t>(r * d + i)] = 1;
        continue;
      }
      h(r, i) = 2.0 * (hm * plus + hp * minus - (hp + hm) * center_logl[r]) / (hp * hm * (hp + hm));
    }
  }
  return h;
}

}  // namespace

int refine_iterations(Index dim) {
  if (dim < 1) throw Error(ErrorKind::invalid_parameter, "dimension must be positive");
  const double scaled = 3.0 * std::log2(static_cast<double>(dim));
  return std::max(10, static_cast<int>(std::ceil(scaled - 1e-12)));
}

Points seed_peak(const CoarsePeak& coarse, SeedMode mode, std::uint64_t seed, const BoundsBox& bounds) {
  const Index d = coarse.location.size();
  if (d != bounds.dim()) throw Error(ErrorKind::invalid_parameter, "peak and bounds dimensions differ");
  if (!(coarse.width > 0.0)) throw Error(ErrorKind::invalid_parameter, "seeding width must be positive");
  const double reach = kRingFactor * coarse.width;
  Points seeds;
  if (mode == SeedMode::axis_ring) {
    seeds.resize(2 * d, d);
    for (Index i = 0; i < d; ++i) {
      Vec up = coarse.location;
      Vec down = coarse.location;
      up[i] += reach;
      down[i] -= reach;
      seeds.row(2 * i) = bounds.clip(up).transpose();
      seeds.row(2 * i + 1) = bounds.clip(down).transpose();
    }
  } else {
    Rng rng(seed);
    seeds.resize(kFastSeeds, d);
    for (Index k = 0; k < kFastSeeds; ++k) {
      Vec x = coarse.location;
      for (Index i = 0; i < d; ++i) x[i] += rng.uniform(-reach, reach);
      seeds.row(k) = bounds.clip(x).transpose();
    }
  }
  return seeds;
}

Vec hessian_step(const Vec& center, const Vec& widths) {
  Vec step(center.size());
  for (Index i = 0; i < center.size(); ++i) {
    step[i] = std::max(1e-2 * widths[i], 1e-6 * (1.0 + std::abs(center[i])));
  }
  return step;
}

Vec diag_hessian(const Problem& problem, const Vec& center, const Vec& step, std::vector<std::uint8_t>* unreliable) {
  const Index d = center.size();
  if (step.size() != d) throw Error(ErrorKind::invalid_parameter, "step length must match the dimension");
  if (!(step.array() > 0.0).all()) throw Error(ErrorKind::invalid_parameter, "stencil steps must be positive");
  Points batch(2 * d + 1, d);
  batch.row(0) = center.transpose();
  for (Index i = 0; i < d; ++i) {
    batch.row(1 + 2 * i) = center.transpose();
    batch.row(2 + 2 * i) = center.transpose();
    batch(1 + 2 * i, i) += step[i];
    batch(2 + 2 * i, i) -= step[i];
  }
  const Vec values = problem.evaluate(batch);
  Vec h(d);
  if (unreliable) unreliable->assign(static_cast<std::size_t>(d), 0);
  for (Index i = 0; i < d; ++i) {
    const double plus = values[1 + 2 * i];
    const double minus = values[2 + 2 * i];
    const double hp = batch(1 + 2 * i, i) - center[i];
    const double hm = center[i] - batch(2 + 2 * i, i);
    if (!std::isfinite(plus) || !std::isfinite(minus) || !std::isfinite(values[0])) {
      h[i] = std::numeric_limits<double>::quiet_NaN();
      if (unreliable) (*unreliable)[static_cast<std::size_t>(i)] = 1;
      continue;
    }
    h[i] = 2.0 * (hm * plus + hp * minus - (hp + hm) * values[0]) / (hp * hm * (hp + hm));
  }
  return h;
}

RefineResult refine(const Problem& problem, const std::vector<CoarsePeak>& coarse, const RefineConfig& config) {
  if (coarse.empty()) throw Error(ErrorKind::invalid_parameter, "refinement needs at least one coarse peak");
  const Index d = problem.dim();
  const BoundsBox& box = problem.bounds();
  const double mean_width = box.mean_width();
  const double floor_width = 1e-12 * mean_width;
  const double fine = config.fine_scale > 0.0 ? config.fine_scale : 1e-3 * mean_width;
  const double radius = config.dedup_radius > 0.0 ? config.dedup_radius : 1e-3 * mean_width;

  RefineResult result;
  result.iterations = config.iterations > 0 ? config.iterations : refine_iterations(d);

  // Coarse location first, then its ring, for every peak.
  std::vector<Points> blocks;
  std::vector<int> group;
  std::vector<double> seed_width;
  std::vector<std::uint8_t> floored(coarse.size(), 0);
  double max_width = 0.0;
  for (std::size_t k = 0; k < coarse.size(); ++k) {
    if (coarse[k].location.size() != d) throw Error(ErrorKind::invalid_parameter, "coarse peak dimension mismatch");
    CoarsePeak c = coarse[k];
    if (!(c.width >= floor_width) || !std::isfinite(c.width)) {
      c.width = fine;
      floored[k] = 1;
    }
    const Points ring = seed_peak(c, config.mode, derive_seed(config.seed, k), box);
    Points block(ring.rows() + 1, d);
    block.row(0) = box.clip(c.location).transpose();
    block.bottomRows(ring.rows()) = ring;
    for (Index r = 0; r < block.rows(); ++r) {
      group.push_back(static_cast<int>(k));
      seed_width.push_back(c.width);
    }
    blocks.push_back(std::move(block));
    max_width = std::max(max_width, c.width);
  }
  const Index n = static_cast<Index>(group.size());
  Points seeds(n, d);
  std::vector<Index> block_start;
  Index row = 0;
  for (const Points& b : blocks) {
    block_start.push_back(row);
    seeds.middleRows(row, b.rows()) = b;
    row += b.rows();
  }

  Vec widths(n);
  for (Index i = 0; i < n; ++i) widths[i] = seed_width[static_cast<std::size_t>(i)];
  BatchState state = init_state(problem, seeds, widths, config.memory);
  const Vec seed_logl = state.logls;

  StepOptions options;
  options.memory = config.memory;
  options.first_step = max_width;
  result.trajectories = step_batch(state, problem, result.iterations, config.tolerance, options);
  for (Index i = 0; i < n; ++i) result.trajectories.items[static_cast<std::size_t>(i)].origin = group[static_cast<std::size_t>(i)];

  // Stationarity filter on the optimizer's own gradients.
  std::vector<Index> candidates;
  for (Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const double g = state.grads.row(i).cwiseAbs().maxCoeff();
    const double limit = config.grad_rel * std::max(1.0, std::abs(state.logls[i]));
    if (!state.failed[k] && std::isfinite(state.logls[i]) && g < limit) {
      candidates.push_back(i);
    } else {
      result.rejections.push_back({state.positions.row(i).transpose(), state.logls[i], "gradient", group[k]});
    }
  }

  std::vector<Index> survivors;
  std::vector<std::vector<std::size_t>> members;
  if (!candidates.empty()) {
    Points pts(static_cast<Index>(candidates.size()), d);
    Vec scores(static_cast<Index>(candidates.size()));
    for (std::size_t k = 0; k < candidates.size(); ++k) {
      pts.row(static_cast<Index>(k)) = state.positions.row(candidates[k]);
      scores[static_cast<Index>(k)] = state.logls[candidates[k]];
    }
    const DedupResult dd = dedup_linf(pts, scores, radius);
    std::vector<Index> slot(candidates.size(), -1);
    for (Index kept : dd.kept) {
      slot[static_cast<std::size_t>(kept)] = static_cast<Index>(survivors.size());
      survivors.push_back(candidates[static_cast<std::size_t>(kept)]);
      members.emplace_back();
    }
    for (std::size_t k = 0; k < candidates.size(); ++k) {
      const Index s = slot[static_cast<std::size_t>(dd.survivor[k])];
      members[static_cast<std::size_t>(s)].push_back(static_cast<std::size_t>(candidates[k]));
    }
  }

  if (!survivors.empty()) {
    const Index m = static_cast<Index>(survivors.size());
    Points centers(m, d);
    Vec center_logl(m);
    Points steps(m, d);
    for (Index s = 0; s < m; ++s) {
      const Index i = survivors[static_cast<std::size_t>(s)];
      centers.row(s) = state.positions.row(i);
      center_logl[s] = state.logls[i];
      const double w = seed_width[static_cast<std::size_t>(i)];
      steps.row(s) = hessian_step(centers.row(s).transpose(), Vec::Constant(d, w)).transpose();
    }
    // Pilot pass at the scalar seed width, then a pass at per-axis widths.
    std::vector<std::uint8_t> pilot_bad;
    const Points pilot = stencil_batch(problem, centers, center_logl, steps, pilot_bad);
    for (Index s = 0; s < m; ++s) {
      const double w = seed_width[static_cast<std::size_t>(survivors[static_cast<std::size_t>(s)])];
      Vec axis_width(d);
      for (Index j = 0; j < d; ++j) {
        const double hjj = pilot(s, j);
        axis_width[j] = (std::isfinite(hjj) && hjj < 0.0) ? 1.0 / std::sqrt(-hjj) : w;
      }
      steps.row(s) = hessian_step(centers.row(s).transpose(), axis_width).transpose();
    }
    std::vector<std::uint8_t> bad;
    const Points hess = stencil_batch(problem, centers, center_logl, steps, bad);

    for (Index s = 0; s < m; ++s) {
      const Index i = survivors[static_cast<std::size_t>(s)];
      const int src = group[static_cast<std::size_t>(i)];
      const Vec h = hess.row(s).transpose();
      bool unreliable = false;
      for (Index j = 0; j < d; ++j) unreliable = unreliable || bad[static_cast<std::size_t>(s * d + j)];
      if (unreliable) {
        result.rejections.push_back({centers.row(s).transpose(), center_logl[s], "hessian-unreliable", src});
        continue;
      }
      if (!(h.array() < 0.0).all()) {
        result.rejections.push_back({centers.row(s).transpose(), center_logl[s], "saddle", src});
        continue;
      }
      Peak peak;
      peak.location = centers.row(s).transpose();
      peak.logl = center_logl[s];
      peak.diag_hessian = h;
      peak.grad_linf = state.grads.row(i).cwiseAbs().maxCoeff();
      peak.width = (-h).cwiseSqrt().cwiseInverse();
      peak.source = src;
      peak.coarse_logl = coarse[static_cast<std::size_t>(src)].logl;
      peak.width_floored = floored[static_cast<std::size_t>(src)] != 0;
      peak.members = members[static_cast<std::size_t>(s)];
      if (config.mode == SeedMode::axis_ring) {
        const Index start = block_start[static_cast<std::size_t>(src)];
        const double w = seed_width[static_cast<std::size_t>(start)];
        const double reach = kRingFactor * w;
        Vec ring(d);
        for (Index j = 0; j < d; ++j) {
          ring[j] = (seed_logl[start + 1 + 2 * j] + seed_logl[start + 2 + 2 * j] - 2.0 * seed_logl[start]) / (reach * reach);
        }
        peak.ring_hessian = ring;
      }
      result.peaks.push_back(std::move(peak));
    }
  }

  if (result.peaks.empty()) {
    std::string reasons;
    for (std::size_t k = 0; k < result.rejections.size(); ++k) {
      if (k) reasons += "; ";
      reasons += "candidate " + std::to_string(k) + " (peak " + std::to_string(result.rejections[k].source) +
                 "): " + result.rejections[k].reason;
    }
    throw Error(ErrorKind::no_valid_maxima, "every refined candidate was rejected: " + reasons);
  }
  return result;
}

}  // namespace raylap
