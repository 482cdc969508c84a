#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>
#include <numeric>
#include <string>

#include "raylap/discovery.hpp"

namespace raylap {

namespace {

struct Profile {
  std::vector<double> s;  // arc length from the ray start, ascending
  std::vector<double> l;
};

// Index of the sample closest to `target`, or npos when none lies within `tol`.
std::size_t nearest(const std::vector<double>& s, double target, double tol) {
  auto it = std::lower_bound(s.begin(), s.end(), target);
  std::size_t best = std::string::npos;
  double gap = tol;
  if (it != s.end() && std::abs(*it - target) <= gap) {
    best = static_cast<std::size_t>(it - s.begin());
    gap = std::abs(*it - target);
  }
  if (it != s.begin()) {
    auto prev = std::prev(it);
    if (std::abs(*prev - target) <= gap) best = static_cast<std::size_t>(prev - s.begin());
  }
  return best;
}

constexpr double kMatchTolerance = 0.25;
constexpr double kTransitionSlope = -0.5;

}  // namespace

ScaleEstimate singlewhip_scales(const RayBank& bank, const BoundsBox& bounds) {
  const double width = bounds.mean_width();
  ScaleEstimate fallback{1e-3 * width, 1e-2 * width, 1e-1 * width, 0, true};

  std::vector<Profile> profiles;
  double h_lo = std::numeric_limits<double>::infinity();
  double h_hi = 0.0;
  for (std::size_t r = 0; r < bank.rays.size(); ++r) {
    const RaySamples& rs = bank.samples[r];
    if (rs.dead) continue;
    const double length = (bank.rays[r].end - bank.rays[r].start).norm();
    if (!(length > 0.0)) continue;
    std::vector<std::size_t> order;
    std::size_t coarse = 0;
    for (std::size_t k = 0; k < rs.t.size(); ++k) {
      if (!std::isfinite(rs.logl[k])) continue;
      order.push_back(k);
      if (!rs.refined[k]) ++coarse;
    }
    if (coarse < 8) continue;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rs.t[a] < rs.t[b]; });
    Profile p;
    for (std::size_t k : order) {
      const double s = rs.t[k] * length;
      if (!p.s.empty() && s == p.s.back()) continue;
      p.s.push_back(s);
      p.l.push_back(rs.logl[k]);
    }
    h_lo = std::min(h_lo, length / static_cast<double>(coarse - 1));
    h_hi = std::max(h_hi, 0.25 * length);
    profiles.push_back(std::move(p));
  }
  if (profiles.empty() || !(h_hi > h_lo)) return fallback;

  std::vector<double> hs;
  for (double h = h_lo; h <= h_hi * (1.0 + 1e-12); h *= std::sqrt(2.0)) hs.push_back(h);

  std::vector<double> kappa(hs.size(), 0.0);
  for (std::size_t m = 0; m < hs.size(); ++m) {
    const double h = hs[m];
    for (const Profile& p : profiles) {
      for (std::size_t j = 0; j < p.s.size(); ++j) {
        const std::size_t a = nearest(p.s, p.s[j] - h, kMatchTolerance * h);
        const std::size_t b = nearest(p.s, p.s[j] + h, kMatchTolerance * h);
        if (a == std::string::npos || b == std::string::npos || a >= j || b <= j) continue;
        const double h1 = p.s[j] - p.s[a];
        const double h2 = p.s[b] - p.s[j];
        const double second = 2.0 * (h1 * p.l[b] - (h1 + h2) * p.l[j] + h2 * p.l[a]) / (h1 * h2 * (h1 + h2));
        if (std::isfinite(second)) kappa[m] = std::max(kappa[m], std::abs(second));
      }
    }
  }

  std::vector<std::size_t> valid;
  for (std::size_t m = 0; m < hs.size(); ++m) {
    if (kappa[m] > 0.0) valid.push_back(m);
  }
  if (valid.empty()) return fallback;

  struct Drop {
    double slope;
    double h;
  };
  std::vector<Drop> drops;
  for (std::size_t k = 0; k + 1 < valid.size(); ++k) {
    const std::size_t a = valid[k];
    const std::size_t b = valid[k + 1];
    const double slope = (std::log(kappa[b]) - std::log(kappa[a])) / (std::log(hs[b]) - std::log(hs[a]));
    if (slope < kTransitionSlope) drops.push_back({slope, std::sqrt(hs[a] * hs[b])});
  }
  std::stable_sort(drops.begin(), drops.end(), [](const Drop& x, const Drop& y) { return x.slope < y.slope; });

  ScaleEstimate est;
  est.transitions = static_cast<int>(drops.size());
  if (drops.empty()) {
    // Constant curvature: every scale is the length over which l drops by one nat.
    const double len = std::clamp(1.0 / std::sqrt(kappa[valid.front()]), 1e-3 * width, 0.25 * width);
    est.fine = est.mid = est.coarse = len;
    return est;
  }
  std::vector<double> picked;
  for (std::size_t k = 0; k < drops.size() && k < 3; ++k) picked.push_back(drops[k].h);
  std::sort(picked.begin(), picked.end());
  while (picked.size() < 3) picked.push_back(picked.back());
  est.fine = picked[0];
  est.mid = picked[1];
  est.coarse = picked[2];
  return est;
}

}  // namespace raylap
