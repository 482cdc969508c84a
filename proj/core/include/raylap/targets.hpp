#pragma once

#include <set>
#include <string>
#include <vector>

#include "raylap/problem.hpp"
#include "raylap/types.hpp"

namespace raylap {

enum class TargetTag { gaussian, anisotropic, rotated, multimodal, heavy_tail, saddle, funnel };

const char* to_string(TargetTag tag);

// Reference data for a built-in density. `true_log_integral` is log of the
// integral of exp(l) over R^d, except for densities that are not integrable
// on R^d (egg-box, exactly flat coordinates), where the bounded coordinates
// are integrated over the box instead.
struct AnalyticTarget {
  std::string name;
  double true_log_integral = 0.0;
  std::vector<Vec> known_modes;
  std::set<TargetTag> tags;
};

struct TestCase {
  Problem problem;
  AnalyticTarget target;
};

struct MixtureComponent {
  double weight = 1.0;
  Vec mean;
  Vec variances;
};

// Default boxes extend 10 standard deviations (largest axis) around the mean.
TestCase make_gaussian(Index dim, const Vec& mean, const Vec& variances);
TestCase make_gaussian(const Vec& mean, const Vec& variances, const BoundsBox& bounds);

TestCase make_rotated_gaussian(Index dim, const SymMatrix& covariance);
TestCase make_rotated_gaussian(const SymMatrix& covariance, const BoundsBox& bounds);

TestCase make_mixture(Index dim, const std::vector<MixtureComponent>& components);
TestCase make_mixture(const std::vector<MixtureComponent>& components, const BoundsBox& bounds);

// Appends `n_flat` coordinates the density ignores, each with box [lo, hi].
TestCase embed_flat(const TestCase& base, Index n_flat, double lo, double hi);

// Covariance R diag(spectrum) R^T with a rotation drawn from `rotation_seed`.
SymMatrix random_rotation_covariance(const Vec& spectrum, std::uint64_t rotation_seed);

// Heavy-tail, curved and otherwise non-Gaussian targets. Egg-box is included
// only when dim == 2.
std::vector<TestCase> make_failure_suite(Index dim);

// Registry lookup by name. Unknown names raise invalid-parameter; egg-box at
// dim != 2 raises unsupported-dimension.
TestCase make_named(const std::string& name, Index dim);
const std::vector<std::string>& registry_names();

// Offset per coordinate of the four-mode mixture's component means.
double mixture4_offset(Index dim);

}  // namespace raylap
