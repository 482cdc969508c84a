#include "raylap/targets.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "quadrature.hpp"
#include "raylap/error.hpp"
#include "raylap/linalg.hpp"
#include "raylap/rng.hpp"

namespace raylap {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Fixed so that the rotated targets are identical across runs and seeds.
constexpr std::uint64_t kRotationSeed = 0x5EEDC16A2ULL;

double log_normal_cdf(double z) {
  if (z > -35.0) return std::log(0.5 * std::erfc(-z / std::numbers::sqrt2));
  // Asymptotic tail expansion; erfc underflows past this point.
  const double z2 = z * z;
  return -0.5 * z2 - std::log(-z) - 0.5 * kLog2Pi + std::log1p(-1.0 / z2 + 3.0 / (z2 * z2));
}

TestCase finish(std::string name, Problem problem, double log_integral, std::vector<Vec> modes, std::set<TargetTag> tags) {
  AnalyticTarget target{std::move(name), log_integral, std::move(modes), std::move(tags)};
  return TestCase{std::move(problem), std::move(target)};
}

void require_dim(Index dim, Index at_least) {
  if (dim < at_least) {
    throw Error(ErrorKind::invalid_parameter, "target needs dimension >= " + std::to_string(at_least));
  }
}

Vec cigar_spectrum(Index dim) {
  Vec v = Vec::Constant(dim, 1e-6);
  v[0] = 1.0;
  return v;
}

SymMatrix uniform_correlation(Index dim, double rho) {
  SymMatrix c = SymMatrix::Constant(dim, dim, rho);
  c.diagonal().setOnes();
  return c;
}

TestCase student_t(Index dim, double nu, const std::string& name) {
  const double coeff = 0.5 * (nu + 1.0);
  auto fn = [nu, coeff](std::span<const double> x) {
    double acc = 0.0;
    for (double xi : x) acc -= coeff * std::log1p(xi * xi / nu);
    return acc;
  };
  const double per_dim = 0.5 * std::log(nu * std::numbers::pi) + std::lgamma(0.5 * nu) - std::lgamma(0.5 * (nu + 1.0));
  return finish(name, Problem::pointwise(BoundsBox::cube(dim, -20.0, 20.0), fn), static_cast<double>(dim) * per_dim,
                {Vec::Zero(dim)}, {TargetTag::heavy_tail});
}

TestCase skew_normal(Index dim, double alpha) {
  auto fn = [alpha](std::span<const double> x) {
    double acc = 0.0;
    for (double xi : x) acc += -0.5 * xi * xi + log_normal_cdf(alpha * xi);
    return acc;
  };
  // 2 phi(x) Phi(alpha x) is a normalized density for every alpha.
  const double per_dim = 0.5 * kLog2Pi - std::numbers::ln2;
  return finish("skew-normal-5", Problem::pointwise(BoundsBox::cube(dim, -10.0, 10.0), fn),
                static_cast<double>(dim) * per_dim, {}, {});
}

TestCase exp_power(Index dim, double beta, const std::string& name) {
  auto fn = [beta](std::span<const double> x) {
    double acc = 0.0;
    for (double xi : x) acc -= std::pow(std::abs(xi), beta);
    return acc;
  };
  const double per_dim = std::log(2.0) + std::lgamma(1.0 + 1.0 / beta);
  return finish(name, Problem::pointwise(BoundsBox::cube(dim, -20.0, 20.0), fn), static_cast<double>(dim) * per_dim,
                {Vec::Zero(dim)}, {TargetTag::heavy_tail});
}

TestCase banana(Index dim, double bend, const std::string& name) {
  require_dim(dim, 2);
  constexpr double kS2 = 9.0;
  auto fn = [bend](std::span<const double> x) {
    const double u = x[1] + bend * (x[0] * x[0] - kS2);
    double acc = -0.5 * x[0] * x[0] / kS2 - 0.5 * u * u;
    for (std::size_t i = 2; i < x.size(); ++i) acc -= 0.5 * x[i] * x[i];
    return acc;
  };
  // Unit-Jacobian shear of N(0, diag(9, 1, ...)).
  const double log_z = 0.5 * static_cast<double>(dim) * kLog2Pi + 0.5 * std::log(kS2);
  Vec mode = Vec::Zero(dim);
  mode[1] = bend * kS2;
  return finish(name, Problem::pointwise(BoundsBox::cube(dim, -25.0, 25.0), fn), log_z, {mode}, {});
}

TestCase twisted(Index dim) {
  require_dim(dim, 2);
  constexpr double kRho = 0.8;
  auto fn = [](std::span<const double> x) {
    double acc = -0.5 * (x[0] * x[0] + x[1] * x[1]) + kRho * std::sin(x[0]) * x[1];
    for (std::size_t i = 2; i < x.size(); ++i) acc -= 0.5 * x[i] * x[i];
    return acc;
  };
  // The second coordinate integrates in closed form, leaving a 1D marginal.
  const double marginal = detail::integrate(
      [](double t) {
        const double s = std::sin(t);
        return std::exp(-0.5 * t * t + 0.5 * kRho * kRho * s * s);
      },
      {-kInf, -10.0, 0.0, 10.0, kInf});
  const double log_z = 0.5 * kLog2Pi + std::log(marginal) + 0.5 * static_cast<double>(dim - 2) * kLog2Pi;
  return finish("twisted", Problem::pointwise(BoundsBox::cube(dim, -10.0, 10.0), fn), log_z, {Vec::Zero(dim)},
                {TargetTag::rotated});
}

TestCase eggbox(Index dim) {
  if (dim != 2) throw Error(ErrorKind::unsupported_dimension, "eggbox is defined only for dim = 2");
  auto fn = [](std::span<const double> x) {
    const double c = 2.0 + std::cos(0.5 * x[0]) * std::cos(0.5 * x[1]);
    return c * c * c * c * c;
  };
  constexpr double kTop = 243.0;
  const double hi = 4.0 * std::numbers::pi;
  std::vector<double> breaks;
  for (int k = 0; k <= 8; ++k) breaks.push_back(hi * k / 8.0);
  auto inner = [&](double y) {
    const double cy = std::cos(0.5 * y);
    return detail::integrate(
        [cy](double x) {
          const double c = 2.0 + std::cos(0.5 * x) * cy;
          return std::exp(c * c * c * c * c - kTop);
        },
        breaks);
  };
  const double box_integral = detail::integrate(inner, breaks);
  std::vector<Vec> modes;
  for (double a : {0.0, hi}) {
    for (double b : {0.0, hi}) modes.push_back((Vec(2) << a, b).finished());
  }
  modes.push_back((Vec(2) << 0.5 * hi, 0.5 * hi).finished());
  return finish("eggbox", Problem::pointwise(BoundsBox::cube(2, 0.0, hi), fn), kTop + std::log(box_integral),
                std::move(modes), {TargetTag::multimodal});
}

TestCase funnel(Index dim) {
  require_dim(dim, 2);
  constexpr double kSigma2 = 9.0;
  auto fn = [](std::span<const double> x) {
    const double v = x[0];
    const double inv_scale = std::exp(-v);
    double acc = -0.5 * v * v / kSigma2;
    for (std::size_t i = 1; i < x.size(); ++i) acc -= 0.5 * (x[i] * x[i] * inv_scale + v);
    return acc;
  };
  const double log_z = 0.5 * std::log(kSigma2) + 0.5 * static_cast<double>(dim) * kLog2Pi;
  Vec mode = Vec::Zero(dim);
  mode[0] = -0.5 * kSigma2 * static_cast<double>(dim - 1);
  return finish("funnel-3", Problem::pointwise(BoundsBox::cube(dim, -10.0, 10.0), fn), log_z, {mode},
                {TargetTag::funnel});
}

TestCase ring(Index dim) {
  constexpr double kR = 3.0;
  constexpr double kW = 0.3;
  auto fn = [](std::span<const double> x) {
    double r2 = 0.0;
    for (double xi : x) r2 += xi * xi;
    const double gap = std::sqrt(r2) - kR;
    return -0.5 * gap * gap / (kW * kW);
  };
  const double n1 = static_cast<double>(dim - 1);
  // Radial integrand scaled by its peak value to stay finite in high dim.
  const double r_peak = 0.5 * (kR + std::sqrt(kR * kR + 4.0 * kW * kW * n1));
  auto log_radial = [n1](double r) { return n1 * std::log(r) - 0.5 * (r - kR) * (r - kR) / (kW * kW); };
  const double shift = log_radial(r_peak);
  const double radial = detail::integrate(
      [&](double r) { return r <= 0.0 ? (n1 == 0.0 ? std::exp(-shift - 0.5 * kR * kR / (kW * kW)) : 0.0) : std::exp(log_radial(r) - shift); },
      {0.0, std::max(0.0, r_peak - 10.0 * kW), r_peak, r_peak + 10.0 * kW, kInf});
  const double half_d = 0.5 * static_cast<double>(dim);
  const double log_sphere = std::log(2.0) + half_d * std::log(std::numbers::pi) - std::lgamma(half_d);
  return finish("ring", Problem::pointwise(BoundsBox::cube(dim, -10.0, 10.0), fn), log_sphere + shift + std::log(radial),
                {}, {TargetTag::saddle});
}

TestCase bimodal_asym(Index dim) {
  std::vector<MixtureComponent> comps = {
      {0.9, Vec::Constant(dim, -2.0), Vec::Ones(dim)},
      {0.1, Vec::Constant(dim, 2.0), Vec::Ones(dim)},
  };
  TestCase tc = make_mixture(comps, BoundsBox::cube(dim, -10.0, 10.0));
  tc.target.name = "bimodal-asym";
  return tc;
}

TestCase mixture4(Index dim) {
  const double c = mixture4_offset(dim);
  static constexpr int kSigns[4][2] = {{1, 1}, {1, -1}, {-1, 1}, {-1, -1}};
  std::vector<MixtureComponent> comps;
  for (const auto& s : kSigns) {
    Vec mean(dim);
    for (Index i = 0; i < dim; ++i) mean[i] = c * s[i % 2];
    comps.push_back({0.25, mean, Vec::Ones(dim)});
  }
  TestCase tc = make_mixture(comps, BoundsBox::cube(dim, -10.0, 10.0));
  tc.target.name = "mixture4";
  return tc;
}

}  // namespace

const char* to_string(TargetTag tag) {
  switch (tag) {
    case TargetTag::gaussian: return "gaussian";
    case TargetTag::anisotropic: return "anisotropic";
    case TargetTag::rotated: return "rotated";
    case TargetTag::multimodal: return "multimodal";
    case TargetTag::heavy_tail: return "heavy_tail";
    case TargetTag::saddle: return "saddle";
    case TargetTag::funnel: return "funnel";
  }
  return "unknown";
}

double mixture4_offset(Index dim) { return dim <= 2 ? 2.6 : 1.3; }

TestCase make_gaussian(Index dim, const Vec& mean, const Vec& variances) {
  if (mean.size() != dim || variances.size() != dim) {
    throw Error(ErrorKind::invalid_parameter, "mean and variances must have length dim");
  }
  if (!(variances.array() > 0.0).all()) throw Error(ErrorKind::invalid_parameter, "variances must be positive");
  const double half = 10.0 * std::sqrt(variances.maxCoeff());
  return make_gaussian(mean, variances, BoundsBox(mean.array() - half, mean.array() + half));
}

TestCase make_gaussian(const Vec& mean, const Vec& variances, const BoundsBox& bounds) {
  const Index dim = bounds.dim();
  if (mean.size() != dim || variances.size() != dim) {
    throw Error(ErrorKind::invalid_parameter, "mean and variances must match the bounds dimension");
  }
  if (!(variances.array() > 0.0).all()) throw Error(ErrorKind::invalid_parameter, "variances must be positive");
  const Vec precision = variances.cwiseInverse();
  auto fn = [mean, precision](std::span<const double> x) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double dx = x[i] - mean[static_cast<Index>(i)];
      acc += dx * dx * precision[static_cast<Index>(i)];
    }
    return -0.5 * acc;
  };
  double log_z = 0.5 * static_cast<double>(dim) * kLog2Pi;
  for (Index i = 0; i < dim; ++i) log_z += 0.5 * std::log(variances[i]);
  std::set<TargetTag> tags{TargetTag::gaussian};
  if (variances.maxCoeff() > 1.0001 * variances.minCoeff()) tags.insert(TargetTag::anisotropic);
  return finish("gaussian", Problem::pointwise(bounds, fn), log_z, {mean}, std::move(tags));
}

TestCase make_rotated_gaussian(Index dim, const SymMatrix& covariance) {
  if (covariance.rows() != dim || covariance.cols() != dim) {
    throw Error(ErrorKind::invalid_parameter, "covariance must be dim x dim");
  }
  Vec diag = covariance.diagonal();
  if (!(diag.array() > 0.0).all()) throw Error(ErrorKind::invalid_parameter, "covariance must be positive definite");
  const double half = 10.0 * std::sqrt(diag.maxCoeff());
  return make_rotated_gaussian(covariance, BoundsBox::cube(dim, -half, half));
}

TestCase make_rotated_gaussian(const SymMatrix& covariance, const BoundsBox& bounds) {
  const Index dim = bounds.dim();
  if (covariance.rows() != dim || covariance.cols() != dim) {
    throw Error(ErrorKind::invalid_parameter, "covariance must match the bounds dimension");
  }
  Mat chol;
  try {
    chol = cholesky_lower(symmetrize(covariance));
  } catch (const Error&) {
    throw Error(ErrorKind::invalid_parameter, "covariance must be positive definite");
  }
  Mat inv_chol = chol.triangularView<Eigen::Lower>().solve(Mat::Identity(dim, dim));
  const SymMatrix precision = symmetrize(inv_chol.transpose() * inv_chol);
  auto fn = [precision](std::span<const double> x) {
    Eigen::Map<const Vec> v(x.data(), static_cast<Index>(x.size()));
    return -0.5 * v.dot(precision * v);
  };
  double log_det = 0.0;
  for (Index i = 0; i < dim; ++i) log_det += 2.0 * std::log(chol(i, i));
  const double log_z = 0.5 * static_cast<double>(dim) * kLog2Pi + 0.5 * log_det;
  std::set<TargetTag> tags{TargetTag::gaussian};
  const Mat offdiag = covariance - Mat(covariance.diagonal().asDiagonal());
  if (offdiag.cwiseAbs().maxCoeff() > 0.0) tags.insert(TargetTag::rotated);
  return finish("gaussian", Problem::pointwise(bounds, fn), log_z, {Vec::Zero(dim)}, std::move(tags));
}

TestCase make_mixture(Index dim, const std::vector<MixtureComponent>& components) {
  if (components.empty()) throw Error(ErrorKind::invalid_parameter, "mixture needs at least one component");
  Vec lo = Vec::Constant(dim, kInf);
  Vec hi = Vec::Constant(dim, -kInf);
  for (const auto& c : components) {
    if (c.mean.size() != dim || c.variances.size() != dim) {
      throw Error(ErrorKind::invalid_parameter, "component mean and variances must have length dim");
    }
    const Vec sd = c.variances.cwiseMax(0.0).cwiseSqrt();
    lo = lo.cwiseMin(c.mean - 10.0 * sd);
    hi = hi.cwiseMax(c.mean + 10.0 * sd);
  }
  return make_mixture(components, BoundsBox(lo, hi));
}

TestCase make_mixture(const std::vector<MixtureComponent>& components, const BoundsBox& bounds) {
  if (components.empty()) throw Error(ErrorKind::invalid_parameter, "mixture needs at least one component");
  const Index dim = bounds.dim();
  std::vector<double> log_weights;
  std::vector<double> log_norms;
  std::vector<Vec> means;
  std::vector<Vec> precisions;
  for (const auto& c : components) {
    if (!(c.weight > 0.0)) throw Error(ErrorKind::invalid_parameter, "mixture weights must be positive");
    if (c.mean.size() != dim || c.variances.size() != dim) {
      throw Error(ErrorKind::invalid_parameter, "component mean and variances must match the bounds dimension");
    }
    if (!(c.variances.array() > 0.0).all()) throw Error(ErrorKind::invalid_parameter, "variances must be positive");
    log_weights.push_back(std::log(c.weight));
    log_norms.push_back(-0.5 * c.variances.array().log().sum());
    means.push_back(c.mean);
    precisions.push_back(c.variances.cwiseInverse());
  }
  auto fn = [log_weights, log_norms, means, precisions](std::span<const double> x) {
    std::vector<double> terms(log_weights.size());
    for (std::size_t k = 0; k < terms.size(); ++k) {
      double q = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - means[k][static_cast<Index>(i)];
        q += dx * dx * precisions[k][static_cast<Index>(i)];
      }
      terms[k] = log_weights[k] + log_norms[k] - 0.5 * q;
    }
    return logsumexp(std::span<const double>(terms));
  };
  const double log_z = logsumexp(std::span<const double>(log_weights)) + 0.5 * static_cast<double>(dim) * kLog2Pi;
  std::set<TargetTag> tags;
  if (components.size() > 1) tags.insert(TargetTag::multimodal);
  else tags.insert(TargetTag::gaussian);
  return finish("mixture", Problem::pointwise(bounds, fn), log_z, means, std::move(tags));
}

TestCase embed_flat(const TestCase& base, Index n_flat, double lo, double hi) {
  const Index d = base.problem.dim();
  Vec lower(d + n_flat);
  Vec upper(d + n_flat);
  lower << base.problem.bounds().lower(), Vec::Constant(n_flat, lo);
  upper << base.problem.bounds().upper(), Vec::Constant(n_flat, hi);
  BoundsBox bounds(lower, upper);
  Problem inner = base.problem;
  auto fn = [inner, d](const Points& batch, Eigen::Ref<Vec> out) { out = inner.evaluate(batch.leftCols(d)); };
  AnalyticTarget target = base.target;
  target.name += "+flat";
  target.true_log_integral += static_cast<double>(n_flat) * std::log(hi - lo);
  for (Vec& m : target.known_modes) {
    Vec ext(d + n_flat);
    ext << m, Vec::Constant(n_flat, 0.5 * (lo + hi));
    m = ext;
  }
  return TestCase{Problem(bounds, fn), target};
}

SymMatrix random_rotation_covariance(const Vec& spectrum, std::uint64_t rotation_seed) {
  const Index dim = spectrum.size();
  Rng rng(rotation_seed);
  Mat g(dim, dim);
  for (Index j = 0; j < dim; ++j) {
    for (Index i = 0; i < dim; ++i) g(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ() * Mat::Identity(dim, dim);
  return symmetrize(q * spectrum.asDiagonal() * q.transpose());
}

std::vector<TestCase> make_failure_suite(Index dim) {
  require_dim(dim, 2);
  std::vector<TestCase> out;
  for (const std::string& name : {"student-t-3", "cauchy", "skew-normal-5", "exp-power-0.5", "exp-power-1", "banana-0.1",
                                  "banana-0.5", "twisted", "eggbox", "funnel-3", "ring", "bimodal-asym"}) {
    if (name == "eggbox" && dim != 2) continue;
    out.push_back(make_named(name, dim));
  }
  return out;
}

const std::vector<std::string>& registry_names() {
  static const std::vector<std::string> names = {
      "gaussian",      "cigar",      "correlated", "rotated-cigar", "mixture4",  "student-t-3",
      "cauchy",        "skew-normal-5", "exp-power-0.5", "exp-power-1", "banana-0.1", "banana-0.5",
      "twisted",       "eggbox",     "funnel-3",   "ring",          "bimodal-asym"};
  return names;
}

TestCase make_named(const std::string& name, Index dim) {
  require_dim(dim, 1);
  TestCase tc = [&]() -> TestCase {
    if (name == "gaussian") return make_gaussian(dim, Vec::Zero(dim), Vec::Ones(dim));
    if (name == "cigar") return make_gaussian(dim, Vec::Zero(dim), cigar_spectrum(dim));
    if (name == "correlated") return make_rotated_gaussian(dim, uniform_correlation(dim, 0.5));
    if (name == "rotated-cigar") return make_rotated_gaussian(random_rotation_covariance(cigar_spectrum(dim), kRotationSeed), BoundsBox::cube(dim, -10.0, 10.0));
    if (name == "mixture4") return mixture4(dim);
    if (name == "student-t-3") return student_t(dim, 3.0, name);
    if (name == "cauchy") return student_t(dim, 1.0, name);
    if (name == "skew-normal-5") return skew_normal(dim, 5.0);
    if (name == "exp-power-0.5") return exp_power(dim, 0.5, name);
    if (name == "exp-power-1") return exp_power(dim, 1.0, name);
    if (name == "banana-0.1") return banana(dim, 0.1, name);
    if (name == "banana-0.5") return banana(dim, 0.5, name);
    if (name == "twisted") return twisted(dim);
    if (name == "eggbox") return eggbox(dim);
    if (name == "funnel-3") return funnel(dim);
    if (name == "ring") return ring(dim);
    if (name == "bimodal-asym") return bimodal_asym(dim);
    throw Error(ErrorKind::invalid_parameter, "unknown problem '" + name + "'");
  }();
  tc.target.name = name;
  if (name == "cigar") tc.target.tags.insert(TargetTag::anisotropic);
  if (name == "rotated-cigar") tc.target.tags.insert(TargetTag::anisotropic);
  return tc;
}

}  // namespace raylap
