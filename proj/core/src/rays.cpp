#include "raylap/discovery.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "raylap/error.hpp"
#include "raylap/rng.hpp"

namespace raylap {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Vec random_vertex(const BoundsBox& box, Rng& rng) {
  Vec v(box.dim());
  for (Index i = 0; i < box.dim(); ++i) v[i] = (rng.bits() >> 63) ? box.upper()[i] : box.lower()[i];
  return v;
}

Vec random_interior(const BoundsBox& box, Rng& rng) {
  Vec v(box.dim());
  for (Index i = 0; i < box.dim(); ++i) v[i] = rng.uniform(box.lower()[i], box.upper()[i]);
  return v;
}

// Distance from `origin` to the box boundary along unit direction `u`.
double exit_distance(const BoundsBox& box, const Vec& origin, const Vec& u) {
  double t = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < box.dim(); ++i) {
    if (u[i] > 0.0) t = std::min(t, (box.upper()[i] - origin[i]) / u[i]);
    if (u[i] < 0.0) t = std::min(t, (box.lower()[i] - origin[i]) / u[i]);
  }
  return t;
}

struct Cell {
  double lo;
  double hi;
  double weight;
};

}  // namespace

const char* to_string(RayKind kind) {
  switch (kind) {
    case RayKind::vertex_to_vertex: return "V2V";
    case RayKind::vertex_to_edge: return "V2E";
    case RayKind::wall_to_wall: return "W2W";
    case RayKind::sunburst: return "Sunburst";
  }
  return "unknown";
}

std::size_t RayBank::sample_count() const {
  std::size_t n = 0;
  for (const auto& s : samples) n += s.t.size();
  return n;
}

std::size_t RayBank::dead_count() const {
  return static_cast<std::size_t>(std::count_if(samples.begin(), samples.end(), [](const RaySamples& s) { return s.dead; }));
}

double RayBank::max_logl() const {
  double best = kNegInf;
  for (const auto& s : samples) {
    for (double v : s.logl) best = std::max(best, v);
  }
  return best;
}

Vec RayBank::argmax() const {
  double best = kNegInf;
  Vec where;
  for (std::size_t r = 0; r < samples.size(); ++r) {
    for (std::size_t k = 0; k < samples[r].t.size(); ++k) {
      if (samples[r].logl[k] > best) {
        best = samples[r].logl[k];
        where = rays[r].at(samples[r].t[k]);
      }
    }
  }
  return where;
}

int rays_per_kind(Index dim) {
  if (dim < 1) throw Error(ErrorKind::invalid_parameter, "dimension must be positive");
  return static_cast<int>(std::ceil(10.0 + std::log2(static_cast<double>(dim))));
}

std::size_t default_seed_count(Index dim) { return std::max<std::size_t>(32, 4 * static_cast<std::size_t>(rays_per_kind(dim))); }

std::vector<Ray> generate_rays(const BoundsBox& bounds, std::uint64_t seed) {
  const Index d = bounds.dim();
  const int n = rays_per_kind(d);
  Rng rng(seed);
  std::vector<Ray> rays;
  rays.reserve(static_cast<std::size_t>(4 * n));

  for (int k = 0; k < n; ++k) {
    Vec a = random_vertex(bounds, rng);
    Vec b = random_vertex(bounds, rng);
    if (a == b) {
      const auto i = static_cast<Index>(rng.below(static_cast<std::uint64_t>(d)));
      b[i] = (b[i] == bounds.upper()[i]) ? bounds.lower()[i] : bounds.upper()[i];
    }
    rays.push_back({a, b, RayKind::vertex_to_vertex});
  }

  const int n_edge = d == 1 ? 0 : n;
  for (int k = 0; k < n_edge; ++k) {
    Vec a = random_vertex(bounds, rng);
    Vec m = random_vertex(bounds, rng);
    const auto j = static_cast<Index>(rng.below(static_cast<std::uint64_t>(d)));
    m[j] = 0.5 * (bounds.lower()[j] + bounds.upper()[j]);
    rays.push_back({a, m, RayKind::vertex_to_edge});
  }

  for (int k = 0; k < n; ++k) {
    const auto j = static_cast<Index>(rng.below(static_cast<std::uint64_t>(d)));
    Vec a = random_interior(bounds, rng);
    Vec b = random_interior(bounds, rng);
    a[j] = bounds.lower()[j];
    b[j] = bounds.upper()[j];
    rays.push_back({a, b, RayKind::wall_to_wall});
  }

  const Vec c = bounds.center();
  const int n_sun = n + (n - n_edge);
  for (int k = 0; k < n_sun; ++k) {
    Vec u(d);
    double norm = 0.0;
    while (!(norm > 0.0)) {
      for (Index i = 0; i < d; ++i) u[i] = rng.normal();
      norm = u.norm();
    }
    u /= norm;
    rays.push_back({c, c + exit_distance(bounds, c, u) * u, RayKind::sunburst});
  }
  return rays;
}

RayBank sample_rays(const Problem& problem, const std::vector<Ray>& rays, int n_coarse, double delta, std::uint64_t seed) {
  if (n_coarse < 4) throw Error(ErrorKind::invalid_parameter, "n_coarse must be at least 4");
  if (!(delta > 0.0)) throw Error(ErrorKind::invalid_parameter, "delta must be positive");
  const Index d = problem.dim();
  const auto n_rays = rays.size();
  RayBank bank;
  bank.dim = d;
  bank.rays = rays;
  bank.samples.resize(n_rays);
  if (n_rays == 0) return bank;

  const double spacing = 1.0 / static_cast<double>(n_coarse - 1);
  Points coarse(static_cast<Index>(n_rays) * n_coarse, d);
  for (std::size_t r = 0; r < n_rays; ++r) {
    for (int j = 0; j < n_coarse; ++j) {
      const double t = j == n_coarse - 1 ? 1.0 : j * spacing;
      coarse.row(static_cast<Index>(r) * n_coarse + j) = rays[r].at(t).transpose();
      bank.samples[r].t.push_back(t);
      bank.samples[r].refined.push_back(0);
    }
  }
  const Vec coarse_values = evaluate_finite(problem, coarse);

  std::vector<std::vector<double>> refined_t(n_rays);
  for (std::size_t r = 0; r < n_rays; ++r) {
    auto& s = bank.samples[r];
    for (int j = 0; j < n_coarse; ++j) s.logl.push_back(coarse_values[static_cast<Index>(r) * n_coarse + j]);
    const double top = *std::max_element(s.logl.begin(), s.logl.end());
    if (top == kNegInf) {
      s.dead = true;
      continue;
    }
    std::vector<Cell> cells;
    double total = 0.0;
    for (int j = 0; j < n_coarse; ++j) {
      if (!(s.logl[static_cast<std::size_t>(j)] > top - delta)) continue;
      const double lo = std::max(0.0, s.t[static_cast<std::size_t>(j)] - 0.5 * spacing);
      const double hi = std::min(1.0, s.t[static_cast<std::size_t>(j)] + 0.5 * spacing);
      const double w = std::exp(s.logl[static_cast<std::size_t>(j)] - top) * (hi - lo);
      cells.push_back({lo, hi, w});
      total += w;
    }
    Rng rng(derive_seed(seed, r));
    for (int k = 0; k < n_coarse; ++k) {
      double target = rng.uniform() * total;
      std::size_t c = 0;
      while (c + 1 < cells.size() && target > cells[c].weight) {
        target -= cells[c].weight;
        ++c;
      }
      const double frac = cells[c].weight > 0.0 ? std::clamp(target / cells[c].weight, 0.0, 1.0) : 0.5;
      refined_t[r].push_back(cells[c].lo + frac * (cells[c].hi - cells[c].lo));
    }
  }

  Index rows = 0;
  for (const auto& v : refined_t) rows += static_cast<Index>(v.size());
  Points refined(rows, d);
  Index row = 0;
  for (std::size_t r = 0; r < n_rays; ++r) {
    for (double t : refined_t[r]) refined.row(row++) = rays[r].at(t).transpose();
  }
  const Vec refined_values = evaluate_finite(problem, refined);
  row = 0;
  for (std::size_t r = 0; r < n_rays; ++r) {
    for (double t : refined_t[r]) {
      bank.samples[r].t.push_back(t);
      bank.samples[r].logl.push_back(refined_values[row++]);
      bank.samples[r].refined.push_back(1);
    }
  }
  return bank;
}

RaySamples two_pass_sample(const Problem& problem, const Ray& ray, int n_coarse, double delta, std::uint64_t seed) {
  return sample_rays(problem, {ray}, n_coarse, delta, seed).samples.front();
}

Points select_seeds(const RayBank& bank, std::size_t q, double radius) {
  struct Entry {
    double logl;
    std::size_t ray;
    std::size_t k;
  };
  std::vector<Entry> entries;
  for (std::size_t r = 0; r < bank.samples.size(); ++r) {
    for (std::size_t k = 0; k < bank.samples[r].t.size(); ++k) {
      if (std::isfinite(bank.samples[r].logl[k])) entries.push_back({bank.samples[r].logl[k], r, k});
    }
  }
  std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) { return a.logl > b.logl; });
  std::vector<Vec> kept;
  for (const Entry& e : entries) {
    if (kept.size() >= q) break;
    const Vec x = bank.rays[e.ray].at(bank.samples[e.ray].t[e.k]);
    bool near = false;
    for (const Vec& other : kept) {
      if ((x - other).cwiseAbs().maxCoeff() <= radius) {
        near = true;
        break;
      }
    }
    if (!near) kept.push_back(x);
  }
  Points out(static_cast<Index>(kept.size()), bank.dim);
  for (std::size_t i = 0; i < kept.size(); ++i) out.row(static_cast<Index>(i)) = kept[i].transpose();
  return out;
}

}  // namespace raylap
