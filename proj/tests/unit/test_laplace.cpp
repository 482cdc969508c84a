#include <gtest/gtest.h>

#include <numbers>
#include <random>
#include <string>

#include "oracles.hpp"
#include "raylap/error.hpp"
#include "raylap/laplace.hpp"
#include "raylap/linalg.hpp"
#include "raylap/rng.hpp"
#include "raylap/targets.hpp"

using namespace raylap;

namespace {

// l = -0.5 x^T A x + c, so H = -A.
Problem quadratic_form(const Mat& a, double c = 0.0, double half = 10.0) {
  const Index d = a.rows();
  return Problem::pointwise(BoundsBox::cube(d, -half, half), [a, c](std::span<const double> x) {
    const Eigen::Map<const Vec> v(x.data(), static_cast<Index>(x.size()));
    return c - 0.5 * v.dot(a * v);
  });
}

Peak peak_from(const Problem& p, const Vec& x, const Vec& diag) {
  Peak pk;
  pk.location = x;
  pk.logl = p.evaluate_one(x);
  pk.diag_hessian = diag;
  pk.width = (-diag).cwiseSqrt().cwiseInverse();
  return pk;
}

}  // namespace

TEST(PerpFraction, DefinitionExamples) {
  const Vec g = (Vec(2) << 1.0, 0.0).finished();
  EXPECT_EQ(perp_fraction((Vec(2) << 3.0, 0.0).finished(), g), 0.0);
  EXPECT_NEAR(perp_fraction((Vec(2) << 0.0, 2.0).finished(), g), 1.0, 1e-15);
  EXPECT_NEAR(perp_fraction((Vec(2) << 1.0, 1.0).finished(), g), std::sqrt(0.5), 1e-15);
}

TEST(PerpFraction, AxisAlignedQuadraticIsZero) {
  const TestCase tc = make_gaussian(4, Vec::Zero(4), (Vec(4) << 1, 1e-6, 4, 0.01).finished());
  CoarsePeak c;
  c.location = Vec::Constant(4, 1e-4);
  c.width = 1e-3;
  const RefineResult r = refine(tc.problem, {c}, RefineConfig{});
  std::vector<const Trajectory*> ts;
  for (const auto& t : r.trajectories.items) ts.push_back(&t);
  const PerpStats s = perpendicular_fraction(ts, r.peaks[0].diag_hessian);
  EXPECT_GE(s.used, 2);
  EXPECT_LT(s.max, 1e-6);
}

TEST(PerpFraction, CorrelatedTrajectoriesExceedThreshold) {
  SymMatrix cov(2, 2);
  cov << 1.0, 0.5, 0.5, 1.0;
  const TestCase tc = make_rotated_gaussian(2, cov);
  CoarsePeak c;
  c.location = (Vec(2) << 0.3, -0.2).finished();
  c.width = 0.8;
  const RefineResult r = refine(tc.problem, {c}, RefineConfig{});
  std::vector<const Trajectory*> ts;
  for (const auto& t : r.trajectories.items) ts.push_back(&t);
  const PerpStats s = perpendicular_fraction(ts, r.peaks[0].diag_hessian);
  EXPECT_TRUE(s.conclusive());
  EXPECT_GT(s.mean, 0.05);
}

TEST(PerpFraction, TooFewStepsInconclusive) {
  Trajectory t;
  t.positions = {Vec::Zero(2)};
  t.grads = {Vec::Ones(2)};
  EXPECT_FALSE(perpendicular_fraction(t, -Vec::Ones(2)).conclusive());
}

TEST(Probe, OffDiagonalExamples) {
  Mat a(2, 2);
  a << 2.0, 1.0, 1.0, 2.0;
  const Problem p = quadratic_form(a);
  EXPECT_NEAR(probe_offdiag(p, peak_from(p, Vec::Zero(2), -Vec::Constant(2, 2.0))), -1.0, 1e-6);
  a << 2.0, -1.0, -1.0, 2.0;
  const Problem q = quadratic_form(a);
  EXPECT_NEAR(probe_offdiag(q, peak_from(q, Vec::Zero(2), -Vec::Constant(2, 2.0))), 1.0, 1e-6);
  const Problem diag = quadratic_form(Vec::Constant(3, 2.0).asDiagonal());
  EXPECT_NEAR(probe_offdiag(diag, peak_from(diag, Vec::Zero(3), -Vec::Constant(3, 2.0))), 0.0, 1e-6);
}

TEST(Probe, RandomDirectionsCatchCancellingCorrelation) {
  // Off-diagonals +0.6 and -0.6 cancel in the all-ones probe.
  Mat a = Mat::Identity(3, 3);
  a(0, 1) = a(1, 0) = 0.6;
  a(0, 2) = a(2, 0) = -0.6;
  const Problem p = quadratic_form(a);
  const Peak pk = peak_from(p, Vec::Zero(3), -Vec::Ones(3));
  EXPECT_NEAR(probe_offdiag(p, pk), 0.0, 1e-6);
  EXPECT_GT(probe_random_directions(p, pk, 3, 1), 0.05);
}

TEST(FullHessian, QuadraticExact) {
  Mat a(2, 2);
  a << 2.0, 1.0, 1.0, 2.0;
  const Problem p = quadratic_form(a);
  const std::uint64_t before = p.eval_count();
  const Peak pk = peak_from(p, Vec::Zero(2), -Vec::Constant(2, 2.0));
  const SymMatrix h = full_hessian(p, pk);
  EXPECT_EQ(p.eval_count() - before, 1u + 4u);
  EXPECT_NEAR(h(0, 1), -1.0, 1e-8);
  EXPECT_EQ(h(0, 1), h(1, 0));
  EXPECT_EQ(h(0, 0), -2.0);
}

TEST(FullHessian, SeparableOffDiagonalsVanish) {
  const Problem sep = quadratic_form((Vec(3) << 1, 2, 3).finished().asDiagonal());
  const SymMatrix h = full_hessian(sep, peak_from(sep, Vec::Zero(3), -(Vec(3) << 1, 2, 3).finished()));
  EXPECT_LT(std::abs(h(0, 1)) + std::abs(h(0, 2)) + std::abs(h(1, 2)), 1e-6);
}

TEST(FullHessian, RotatedCigarMatchesPrecision) {
  Vec spectrum = Vec::Constant(8, 1e-6);
  spectrum[0] = 1.0;
  const SymMatrix cov = random_rotation_covariance(spectrum, 0x5EED);
  const TestCase tc = make_rotated_gaussian(cov, BoundsBox::cube(8, -10, 10));
  const Mat precision = cov.inverse();
  const Peak pk = peak_from(tc.problem, Vec::Zero(8), -precision.diagonal());
  const SymMatrix h = full_hessian(tc.problem, pk);
  const double scale = precision.cwiseAbs().maxCoeff();
  EXPECT_LT((h + precision).cwiseAbs().maxCoeff(), 1e-4 * scale);
}

TEST(FullHessian, NonFiniteFails) {
  const Problem p = Problem::pointwise(BoundsBox::cube(2, -1, 1), [](std::span<const double> x) {
    return (x[0] > 0 && x[1] > 0) ? std::nan("") : -0.5 * (x[0] * x[0] + x[1] * x[1]);
  });
  Peak pk;
  pk.location = Vec::Zero(2);
  pk.logl = 0.0;
  pk.diag_hessian = -Vec::Ones(2);
  pk.width = Vec::Ones(2);
  try {
    full_hessian(p, pk);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::hessian_failed);
  }
}

TEST(ModeEvidence, Examples) {
  const Problem std2 = quadratic_form(Mat::Identity(2, 2));
  LaplaceConfig cfg;
  const ModeEvidence a = mode_evidence(std2, peak_from(std2, Vec::Zero(2), -Vec::Ones(2)), TrajectoryBank{}, cfg);
  EXPECT_NEAR(a.log_z, std::log(2.0 * std::numbers::pi), 1e-14);
  EXPECT_EQ(a.hessian_kind, HessianKind::diagonal);

  Mat m(2, 2);
  m << 2.0, 1.0, 1.0, 2.0;
  const Problem corr = quadratic_form(m);
  const ModeEvidence b = mode_evidence(corr, peak_from(corr, Vec::Zero(2), -Vec::Constant(2, 2.0)), TrajectoryBank{}, cfg);
  EXPECT_EQ(b.rotation.decision, RotationDecision::rotated);
  EXPECT_EQ(b.hessian_kind, HessianKind::full);
  EXPECT_NEAR(b.log_z, std::log(2.0 * std::numbers::pi) - 0.5 * std::log(3.0), 1e-8);
  EXPECT_NEAR(b.condition_number, 3.0, 1e-6);

  const Problem one = quadratic_form(Mat::Constant(1, 1, 0.25));
  const ModeEvidence c = mode_evidence(one, peak_from(one, Vec::Zero(1), -Vec::Constant(1, 0.25)), TrajectoryBank{}, cfg);
  EXPECT_NEAR(c.log_z, 0.5 * oracle::kLog2Pi + 0.5 * std::log(4.0), 1e-14);
}

TEST(ModeEvidence, NonPdFullPathRejected) {
  // Diagonal looks like a maximum, the coupling makes it a saddle.
  Mat a(2, 2);
  a << 1.0, 2.0, 2.0, 1.0;
  const Problem p = quadratic_form(a);
  LaplaceConfig cfg;
  cfg.force_full = true;
  try {
    mode_evidence(p, peak_from(p, Vec::Zero(2), -Vec::Ones(2)), TrajectoryBank{}, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::not_positive_definite);
  }
}

TEST(ModeEvidence, LaplaceExactOnRandomQuadratics) {
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 40; ++trial) {
    const int d = 1 + trial % 12;
    const Mat a = oracle::random_pd(d, rng, 0.5);
    const double c = u(rng);
    const Problem p = quadratic_form(a, c, 50.0);
    LaplaceConfig cfg;
    cfg.force_full = d > 1;
    const Peak pk = peak_from(p, Vec::Zero(d), -a.diagonal());
    const ModeEvidence ev = mode_evidence(p, pk, TrajectoryBank{}, cfg);
    const double truth = c + 0.5 * d * oracle::kLog2Pi - 0.5 * oracle::log_det(a);
    EXPECT_NEAR(ev.log_z, truth, 1e-9);
  }
}

TEST(ModeEvidence, PathConsistencyOnAxisAlignedGaussian) {
  const Vec var = (Vec(5) << 1, 0.5, 2, 4, 0.1).finished();
  const TestCase tc = make_gaussian(5, Vec::Zero(5), var);
  const Peak pk = peak_from(tc.problem, Vec::Zero(5), -var.cwiseInverse());
  LaplaceConfig diag_cfg;
  LaplaceConfig full_cfg;
  full_cfg.force_full = true;
  const ModeEvidence a = mode_evidence(tc.problem, pk, TrajectoryBank{}, diag_cfg);
  const ModeEvidence b = mode_evidence(tc.problem, pk, TrajectoryBank{}, full_cfg);
  EXPECT_EQ(a.hessian_kind, HessianKind::diagonal);
  EXPECT_EQ(b.hessian_kind, HessianKind::full);
  EXPECT_NEAR(a.log_z, b.log_z, 1e-8);
  EXPECT_NEAR(a.log_z, tc.target.true_log_integral, 1e-12);
}

TEST(Combine, IdentitiesAndShift) {
  PrecheckReport pre;
  const BoundsBox box = BoundsBox::cube(2, -1, 1);
  ModeEvidence m;
  m.log_z = 1.5;
  EXPECT_NEAR(combine({m, m}, pre, box).log_z, 1.5 + std::log(2.0), 1e-15);
  EXPECT_EQ(combine({m}, pre, box).log_z, 1.5);
  EXPECT_NEAR(combine({m}, pre, box).log_z_vs_prior, 1.5 - std::log(4.0), 1e-15);
  std::mt19937_64 rng(67);
  std::normal_distribution<double> n(0.0, 20.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<ModeEvidence> ms(1 + trial % 5);
    for (auto& x : ms) x.log_z = n(rng);
    const double c = n(rng);
    auto shifted = ms;
    for (auto& x : shifted) x.log_z += c;
    EXPECT_NEAR(combine(shifted, pre, box).log_z, combine(ms, pre, box).log_z + c, 1e-11);
  }
  try {
    combine({}, pre, box);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::no_modes_found);
  }
}

TEST(Rotation, SoundOnGaussianFamilies) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    for (const char* name : {"gaussian", "cigar", "correlated", "rotated-cigar"}) {
      const TestCase tc = make_named(name, 4);
      Rng rng(seed);
      CoarsePeak c;
      c.location = Vec(4);
      for (Index i = 0; i < 4; ++i) c.location[i] = 1e-3 * rng.uniform(-1.0, 1.0);
      c.width = std::string(name).find("cigar") != std::string::npos ? 1e-3 : 0.5;
      RefineConfig rc;
      rc.seed = seed;
      const RefineResult r = refine(tc.problem, {c}, rc);
      ASSERT_EQ(r.peaks.size(), 1u);
      LaplaceConfig lc;
      lc.seed = seed;
      const RotationVerdict v = detect_rotation(tc.problem, r.peaks[0], r.trajectories, lc);
      const bool rotated = tc.target.tags.count(TargetTag::rotated) > 0;
      EXPECT_EQ(v.decision, rotated ? RotationDecision::rotated : RotationDecision::axis_aligned)
          << name << " seed " << seed;
    }
  }
}
