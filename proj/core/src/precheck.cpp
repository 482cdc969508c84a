#include "raylap/precheck.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "raylap/error.hpp"

namespace raylap {

PrecheckReport run_precheck(const Problem& problem, const PrecheckOptions& options) {
  if (!(options.eps_flat > 0.0) || !(options.eps_flat < options.eps_soft)) {
    throw Error(ErrorKind::invalid_parameter, "precheck thresholds need 0 < eps_flat < eps_soft");
  }
  const Index d = problem.dim();
  const BoundsBox& box = problem.bounds();
  const Vec c = box.center();
  const Vec half = box.half_width();

  Points probes(2 * d + 1, d);
  probes.row(0) = c.transpose();
  for (Index i = 0; i < d; ++i) {
    probes.row(1 + 2 * i) = c.transpose();
    probes.row(2 + 2 * i) = c.transpose();
    probes(1 + 2 * i, i) = c[i] + half[i];
    probes(2 + 2 * i, i) = c[i] - half[i];
  }
  const Vec values = problem.evaluate(probes);
  const double l0 = values[0];
  if (!std::isfinite(l0)) throw Error(ErrorKind::center_evaluation, "log-likelihood at the box center is not finite");

  PrecheckReport report;
  report.center_logl = l0;
  report.sensitivities.resize(d);
  for (Index i = 0; i < d; ++i) {
    const double up = values[1 + 2 * i];
    const double down = values[2 + 2 * i];
    // A non-finite face value means the coordinate is anything but flat.
    const double s = std::abs(up - l0) + std::abs(down - l0);
    report.sensitivities[i] = std::isfinite(s) ? s : std::numeric_limits<double>::infinity();
  }

  const Vec& s = report.sensitivities;
  const double top = s.maxCoeff();
  if (!(top > 0.0)) throw Error(ErrorKind::degenerate_problem, "likelihood is constant along every axis probe");

  std::vector<double> sorted(s.data(), s.data() + d);
  std::sort(sorted.begin(), sorted.end());
  // Upper median for even d.
  const double median = sorted[static_cast<std::size_t>(d / 2)];
  const double flat_cut = options.eps_flat * median;
  const double soft_cut = options.eps_soft * top;

  for (Index i = 0; i < d; ++i) {
    if (s[i] == 0.0 || s[i] < flat_cut) {
      report.flat_dims.push_back(i);
      const double width = box.upper()[i] - box.lower()[i];
      report.log_z_marginal += std::log(options.half_width_flat ? 0.5 * width : width);
    } else if (s[i] < soft_cut) {
      report.soft_dims.push_back(i);
      report.log_z_marginal += 0.5 * std::log(2.0 * std::numbers::pi) + std::log(half[i] / std::sqrt(s[i]));
    } else {
      report.active_dims.push_back(i);
    }
  }
  return report;
}

}  // namespace raylap
