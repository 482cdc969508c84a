#include "raylap/laplace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "raylap/error.hpp"
#include "raylap/linalg.hpp"
#include "raylap/rng.hpp"

namespace raylap {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kMinWhitenedStep = 1e-7;
constexpr double kProbeStep = 1e-2;
const double kLog2Pi = std::log(2.0 * std::numbers::pi);

void check_peak(const Problem& problem, const Peak& peak) {
  const Index d = problem.dim();
  if (peak.location.size() != d || peak.diag_hessian.size() != d || peak.width.size() != d) {
    throw Error(ErrorKind::invalid_parameter, "peak dimension does not match the problem");
  }
}

double second_difference(double plus, double minus, double center, double h) {
  return (plus + minus - 2.0 * center) / (h * h);
}

}  // namespace

const char* to_string(RotationDecision decision) {
  switch (decision) {
    case RotationDecision::axis_aligned: return "axis_aligned";
    case RotationDecision::rotated: return "rotated";
    case RotationDecision::inconclusive: return "inconclusive";
  }
  return "unknown";
}

const char* to_string(HessianKind kind) { return kind == HessianKind::full ? "full" : "diagonal"; }

double perp_fraction(const Vec& step, const Vec& direction) {
  const double step_norm = step.norm();
  const double dir_norm = direction.norm();
  if (!(step_norm > 0.0)) return 0.0;
  if (!(dir_norm > 0.0)) return 1.0;
  const Vec u = direction / dir_norm;
  const Vec perp = step - step.dot(u) * u;
  return std::min(1.0, perp.norm() / step_norm);
}

PerpStats perpendicular_fraction(const std::vector<const Trajectory*>& trajectories, const Vec& diag_hessian) {
  const Vec root = (-diag_hessian).cwiseMax(0.0).cwiseSqrt();
  PerpStats stats;
  double sum = 0.0;
  for (const Trajectory* t : trajectories) {
    if (!t) continue;
    const std::size_t n = std::min(t->positions.size(), t->grads.size());
    for (std::size_t k = 0; k + 1 < n; ++k) {
      const Vec s = (t->positions[k + 1] - t->positions[k]).cwiseProduct(root);
      if (!(s.norm() >= kMinWhitenedStep)) continue;
      Vec y = t->grads[k] - t->grads[k + 1];
      for (Index i = 0; i < y.size(); ++i) y[i] = root[i] > 0.0 ? y[i] / root[i] : 0.0;
      if (!(y.norm() >= kMinWhitenedStep) || !y.allFinite()) continue;
      const double f = perp_fraction(s, y);
      sum += f;
      stats.max = std::max(stats.max, f);
      ++stats.used;
    }
  }
  if (stats.used > 0) stats.mean = sum / stats.used;
  return stats;
}

PerpStats perpendicular_fraction(const Trajectory& trajectory, const Vec& diag_hessian) {
  return perpendicular_fraction(std::vector<const Trajectory*>{&trajectory}, diag_hessian);
}

double probe_offdiag(const Problem& problem, const Peak& peak) {
  check_peak(problem, peak);
  const Index d = problem.dim();
  if (d < 2) throw Error(ErrorKind::invalid_parameter, "the off-diagonal probe needs d >= 2");
  const Vec v = Vec::Constant(d, 1.0 / std::sqrt(static_cast<double>(d)));
  const double h = kProbeStep * peak.width.minCoeff();
  Points batch(2, d);
  batch.row(0) = (peak.location + h * v).transpose();
  batch.row(1) = (peak.location - h * v).transpose();
  const Vec values = problem.evaluate(batch);
  if (!values.allFinite()) return kNaN;
  const double vhv = second_difference(values[0], values[1], peak.logl, h);
  const double a = peak.diag_hessian.mean();
  return (vhv - a) / static_cast<double>(d - 1);
}

double probe_random_directions(const Problem& problem, const Peak& peak, int count, std::uint64_t seed) {
  check_peak(problem, peak);
  const Index d = problem.dim();
  if (count <= 0) return 0.0;
  Rng rng(seed);
  Points batch(2 * count, d);
  for (int k = 0; k < count; ++k) {
    Vec u(d);
    double norm = 0.0;
    while (!(norm > 0.0)) {
      for (Index i = 0; i < d; ++i) u[i] = rng.normal();
      norm = u.norm();
    }
    const Vec p = (u / norm).cwiseProduct(peak.width);
    batch.row(2 * k) = (peak.location + kProbeStep * p).transpose();
    batch.row(2 * k + 1) = (peak.location - kProbeStep * p).transpose();
  }
  const Vec values = problem.evaluate(batch);
  if (!values.allFinite()) return kNaN;
  double worst = 0.0;
  for (int k = 0; k < count; ++k) {
    const double curv = second_difference(values[2 * k], values[2 * k + 1], peak.logl, kProbeStep);
    worst = std::max(worst, std::abs(curv + 1.0));
  }
  return worst;
}

SymMatrix full_hessian(const Problem& problem, const Peak& peak) {
  check_peak(problem, peak);
  const Index d = problem.dim();
  if (d < 2) throw Error(ErrorKind::invalid_parameter, "the full Hessian path needs d >= 2");
  const Vec eps = hessian_step(peak.location, peak.width);
  const Index pairs = d * (d - 1) / 2;
  Points batch(4 * pairs, d);
  Index row = 0;
  for (Index i = 0; i < d; ++i) {
    for (Index j = i + 1; j < d; ++j) {
      for (int corner = 0; corner < 4; ++corner) {
        const double si = (corner & 2) ? -1.0 : 1.0;
        const double sj = (corner & 1) ? -1.0 : 1.0;
        Vec x = peak.location;
        x[i] += si * eps[i];
        x[j] += sj * eps[j];
        batch.row(row++) = x.transpose();
      }
    }
  }
  const Vec values = problem.evaluate(batch);
  SymMatrix h = SymMatrix::Zero(d, d);
  row = 0;
  for (Index i = 0; i < d; ++i) {
    for (Index j = i + 1; j < d; ++j) {
      const double pp = values[row];
      const double pm = values[row + 1];
      const double mp = values[row + 2];
      const double mm = values[row + 3];
      row += 4;
      const double hij = (pp - pm - mp + mm) / (4.0 * eps[i] * eps[j]);
      if (!std::isfinite(hij)) {
        throw Error(ErrorKind::hessian_failed, "non-finite Hessian entry (" + std::to_string(i) + ", " +
                                                   std::to_string(j) + ")");
      }
      h(i, j) = hij;
      h(j, i) = hij;
    }
    h(i, i) = peak.diag_hessian[i];
  }
  if (!peak.diag_hessian.allFinite()) throw Error(ErrorKind::hessian_failed, "non-finite Hessian diagonal");
  return symmetrize(h);
}

GaussianityCheck gaussianity(const Problem& problem, const Peak& peak) {
  check_peak(problem, peak);
  const Index d = problem.dim();
  const BoundsBox& box = problem.bounds();
  Points batch(2 * d, d);
  std::vector<std::uint8_t> inside(static_cast<std::size_t>(2 * d), 0);
  for (Index i = 0; i < d; ++i) {
    for (int side = 0; side < 2; ++side) {
      Vec x = peak.location;
      x[i] += (side == 0 ? 2.0 : -2.0) * peak.width[i];
      batch.row(2 * i + side) = x.transpose();
      inside[static_cast<std::size_t>(2 * i + side)] = box.contains(x) ? 1 : 0;
    }
  }
  std::vector<Index> rows;
  for (Index r = 0; r < 2 * d; ++r) {
    if (inside[static_cast<std::size_t>(r)]) rows.push_back(r);
  }
  GaussianityCheck check;
  if (rows.empty()) return check;
  Points pts(static_cast<Index>(rows.size()), d);
  for (std::size_t k = 0; k < rows.size(); ++k) pts.row(static_cast<Index>(k)) = batch.row(rows[k]);
  const Vec values = evaluate_finite(problem, pts);
  Vec drop = Vec::Constant(2 * d, kNaN);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const double v = values[static_cast<Index>(k)];
    if (std::isfinite(v)) drop[rows[k]] = peak.logl - v;
  }
  double sum = 0.0;
  int count = 0;
  for (Index r = 0; r < 2 * d; ++r) {
    if (std::isfinite(drop[r])) {
      sum += drop[r];
      ++count;
    }
  }
  for (Index i = 0; i < d; ++i) {
    const double up = drop[2 * i];
    const double down = drop[2 * i + 1];
    if (!std::isfinite(up) || !std::isfinite(down)) continue;
    ++check.axes_used;
    const double total = up + down;
    if (total > 0.0) check.asymmetry = std::max(check.asymmetry, std::abs(up - down) / total);
  }
  if (count > 0) check.tail_ratio = sum / count / 2.0;
  return check;
}

RotationVerdict detect_rotation(const Problem& problem, const Peak& peak, const TrajectoryBank& bank,
                                const LaplaceConfig& config) {
  check_peak(problem, peak);
  RotationVerdict verdict;
  if (problem.dim() < 2) {
    verdict.decision = RotationDecision::axis_aligned;
    verdict.trajectory_decision = RotationDecision::axis_aligned;
    return verdict;
  }
  std::vector<const Trajectory*> members;
  for (std::size_t k : peak.members) {
    if (k < bank.items.size()) members.push_back(&bank.items[k]);
  }
  verdict.perp = perpendicular_fraction(members, peak.diag_hessian);
  if (verdict.perp.conclusive()) {
    if (verdict.perp.mean > config.eps_rot) verdict.trajectory_decision = RotationDecision::rotated;
    else if (verdict.perp.mean < config.eps_aligned) verdict.trajectory_decision = RotationDecision::axis_aligned;
  }
  if (verdict.trajectory_decision != RotationDecision::inconclusive) {
    verdict.decision = verdict.trajectory_decision;
    return verdict;
  }
  const double b = probe_offdiag(problem, peak);
  verdict.probe_b = b;
  bool rotated = false;
  if (!std::isfinite(b)) {
    verdict.probe_failed = true;
    rotated = true;
  } else if (std::abs(b) > config.probe_ratio * std::abs(peak.diag_hessian.mean())) {
    rotated = true;
  }
  if (!rotated && config.random_probes > 0) {
    const double worst = probe_random_directions(problem, peak, config.random_probes, config.seed);
    verdict.probe_random = worst;
    if (!std::isfinite(worst)) {
      verdict.probe_failed = true;
      rotated = true;
    } else if (worst > config.random_probe_tol) {
      rotated = true;
    }
  }
  verdict.decision = rotated ? RotationDecision::rotated : RotationDecision::axis_aligned;
  return verdict;
}

ModeEvidence mode_evidence(const Problem& problem, const Peak& peak, const TrajectoryBank& bank,
                           const LaplaceConfig& config) {
  check_peak(problem, peak);
  const Index d = problem.dim();
  if (!(peak.diag_hessian.array() < 0.0).all()) {
    throw Error(ErrorKind::not_positive_definite, "peak has a non-negative Hessian diagonal");
  }
  ModeEvidence ev;
  ev.peak = peak;
  if (config.force_full && d >= 2) {
    ev.rotation.decision = RotationDecision::rotated;
  } else {
    ev.rotation = detect_rotation(problem, peak, bank, config);
  }
  const Vec neg_diag = -peak.diag_hessian;
  if (ev.rotation.decision == RotationDecision::rotated && d >= 2) {
    ev.hessian = full_hessian(problem, peak);
    ev.hessian_kind = HessianKind::full;
    const EigenResult eig = eig_symmetric(-ev.hessian);
    if (!(eig.values[0] > 0.0)) {
      throw Error(ErrorKind::not_positive_definite,
                  "negative Hessian of the mode is not positive definite (smallest eigenvalue " +
                      std::to_string(eig.values[0]) + ")");
    }
    ev.log_det_neg_h = eig.values.array().log().sum();
    ev.condition_number = eig.values[d - 1] / eig.values[0];
  } else {
    ev.hessian = peak.diag_hessian.asDiagonal();
    ev.hessian_kind = HessianKind::diagonal;
    ev.log_det_neg_h = neg_diag.array().log().sum();
    ev.condition_number = neg_diag.maxCoeff() / neg_diag.minCoeff();
  }
  ev.log_z = peak.logl + 0.5 * static_cast<double>(d) * kLog2Pi - 0.5 * ev.log_det_neg_h;
  if (config.check_gaussianity) ev.shape = gaussianity(problem, peak);
  return ev;
}

EvidenceResult combine(const std::vector<ModeEvidence>& modes, const PrecheckReport& precheck, const BoundsBox& bounds) {
  if (modes.empty()) throw Error(ErrorKind::no_modes_found, "no mode evidence to combine");
  std::vector<double> values;
  values.reserve(modes.size());
  for (const auto& m : modes) values.push_back(m.log_z);
  EvidenceResult result;
  result.modes = modes;
  result.precheck = precheck;
  result.log_z = logsumexp(values) + precheck.log_z_marginal;
  result.log_z_vs_prior = result.log_z - bounds.log_volume();
  return result;
}

}  // namespace raylap
