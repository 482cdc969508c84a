#include "raylap/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <sstream>

#include <tbb/global_control.h>

#include "raylap/error.hpp"
#include "raylap/refine.hpp"

namespace raylap {

namespace {

constexpr double kHeavyTailRatio = 0.8;
constexpr double kAsymmetry = 0.1;
constexpr double kIllConditioned = 1e12;

enum Salt : std::uint64_t { kRays = 1, kRaySamples, kOscillation, kRefine, kLaplace };

class StageClock {
 public:
  StageClock(const Problem& problem, EvidenceResult& sink) : problem_(problem), sink_(sink) {}

  template <class F>
  auto run(const std::string& stage, F&& body) -> decltype(body()) {
    const auto evals = problem_.eval_count();
    const auto start = std::chrono::steady_clock::now();
    struct Record {
      StageClock& clock;
      const std::string& stage;
      std::uint64_t evals;
      std::chrono::steady_clock::time_point start;
      ~Record() {
        clock.sink_.eval_counts[stage] += clock.problem_.eval_count() - evals;
        clock.sink_.timing_ms[stage] +=
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      }
    } record{*this, stage, evals, start};
    try {
      return body();
    } catch (const Error& e) {
      if (!e.stage().empty()) throw;
      throw e.tagged(stage);
    }
  }

 private:
  const Problem& problem_;
  EvidenceResult& sink_;
};

std::unique_ptr<tbb::global_control> worker_limit(int configured) {
  int workers = configured;
  if (workers <= 0) {
    if (const char* env = std::getenv("RAYLAP_WORKERS")) workers = std::atoi(env);
  }
  if (workers <= 0) return nullptr;
  return std::make_unique<tbb::global_control>(tbb::global_control::max_allowed_parallelism,
                                               static_cast<std::size_t>(workers));
}

std::string bank_summary(const RayBank& bank) {
  std::ostringstream out;
  out << "rays=" << bank.rays.size() << " samples=" << bank.sample_count() << " dead=" << bank.dead_count()
      << " max_logl=" << bank.max_logl();
  return out.str();
}

}  // namespace

PipelineConfig PipelineConfig::from_preset(const std::string& name) {
  PipelineConfig c;
  c.preset = name;
  if (name == "fast") {
    c.n_oscillations = 1;
    c.fast_refine = true;
  } else if (name == "slow") {
    c.n_oscillations = 1;
    c.fast_refine = false;
  } else if (name == "conservative") {
    c.n_oscillations = 3;
    c.fast_refine = false;
  } else {
    throw Error(ErrorKind::invalid_parameter, "unknown preset '" + name + "'");
  }
  return c;
}

void PipelineConfig::validate() const {
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0)) throw Error(ErrorKind::invalid_parameter, std::string(what) + " must be positive");
  };
  positive(stick_grad, "stick_grad");
  positive(refine_grad, "refine_grad");
  positive(eps_flat, "eps_flat");
  positive(eps_soft, "eps_soft");
  positive(eps_rot, "eps_rot");
  positive(ray_delta, "ray_delta");
  if (dedup_radius < 0.0) throw Error(ErrorKind::invalid_parameter, "dedup_radius must not be negative");
  if (n_oscillations < 1) throw Error(ErrorKind::invalid_parameter, "n_oscillations must be at least 1");
  if (n_coarse < 4) throw Error(ErrorKind::invalid_parameter, "n_coarse must be at least 4");
  if (n_converge < 1 || n_anticonverge < 0 || n_cloud < 0 || k_smooth < 1 || lbfgs_memory < 1) {
    throw Error(ErrorKind::invalid_parameter, "iteration budgets must be positive");
  }
}

PipelineResult run_pipeline(const Problem& problem, const PipelineConfig& config) {
  config.validate();
  const auto pool = worker_limit(config.workers);
  const std::uint64_t evals_before = problem.eval_count();

  PipelineResult out;
  out.config = config;
  EvidenceResult& ev = out.evidence;
  StageClock clock(problem, ev);

  PrecheckOptions pre_opts;
  pre_opts.eps_flat = config.eps_flat;
  pre_opts.eps_soft = config.eps_soft;
  pre_opts.half_width_flat = config.half_width_flat;
  const PrecheckReport pre = clock.run("precheck", [&] { return run_precheck(problem, pre_opts); });
  out.active_dims = pre.active_dims;

  const Index d_full = problem.dim();
  const Vec pinned = problem.bounds().center();
  const bool restricted = static_cast<Index>(pre.active_dims.size()) < d_full;
  const Problem sub = restricted ? problem.restrict(pre.active_dims, pinned) : problem;
  const Index d = sub.dim();

  OscillationResult osc = clock.run("discovery", [&] {
    const std::vector<Ray> rays = generate_rays(sub.bounds(), derive_seed(config.seed, kRays));
    const RayBank bank = sample_rays(sub, rays, config.n_coarse, config.ray_delta, derive_seed(config.seed, kRaySamples));
    out.ray_count = bank.rays.size();
    out.ray_samples = bank.sample_count();
    if (!config.raybank_path.empty()) write_raybank(bank, config.raybank_path);
    if (!std::isfinite(bank.max_logl())) {
      throw Error(ErrorKind::no_modes_found, "every ray is dead (" + bank_summary(bank) + ")");
    }
    out.scales = singlewhip_scales(bank, sub.bounds());
    const Points seeds = select_seeds(bank, default_seed_count(d), out.scales.fine);
    OscillationConfig oc;
    oc.n_oscillations = config.n_oscillations;
    oc.n_converge = config.n_converge;
    oc.n_anticonverge = config.n_anticonverge;
    oc.n_cloud = config.n_cloud;
    oc.k_smooth = config.k_smooth;
    oc.memory = config.lbfgs_memory;
    oc.stick_grad = config.stick_grad;
    oc.dedup_radius = config.dedup_radius;
    oc.seed = derive_seed(config.seed, kOscillation);
    try {
      return oscillate(sub, seeds, out.scales, bank.max_logl(), oc);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::no_modes_found) throw;
      throw Error(ErrorKind::no_modes_found, std::string(e.what()) + "; ray bank: " + bank_summary(bank));
    }
  });
  out.oscillation = osc.stats;
  out.coarse_peaks = osc.peaks.size();

  RefineResult refined = clock.run("refine", [&] {
    RefineConfig rc;
    rc.mode = config.fast_refine ? SeedMode::fast : SeedMode::axis_ring;
    rc.grad_rel = config.refine_grad;
    rc.dedup_radius = config.dedup_radius;
    rc.fine_scale = out.scales.fine;
    rc.memory = config.lbfgs_memory;
    rc.seed = derive_seed(config.seed, kRefine);
    return refine(sub, osc.peaks, rc);
  });
  out.rejections = refined.rejections;

  std::vector<ModeEvidence> modes = clock.run("laplace", [&] {
    LaplaceConfig lc;
    lc.eps_rot = config.eps_rot;
    std::vector<ModeEvidence> kept;
    for (std::size_t k = 0; k < refined.peaks.size(); ++k) {
      lc.seed = derive_seed(derive_seed(config.seed, kLaplace), k);
      try {
        kept.push_back(mode_evidence(sub, refined.peaks[k], refined.trajectories, lc));
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::not_positive_definite && e.kind() != ErrorKind::hessian_failed) throw;
        out.rejected_modes.push_back(std::string(to_string(e.kind())) + ": " + e.what());
      }
    }
    if (kept.empty()) {
      throw Error(ErrorKind::no_valid_maxima, "every refined mode failed the Laplace stage");
    }
    return kept;
  });

  const auto counts = ev.eval_counts;
  const auto timing = ev.timing_ms;
  ev = combine(modes, pre, problem.bounds());
  ev.eval_counts = counts;
  ev.timing_ms = timing;

  for (const ModeEvidence& m : ev.modes) {
    ModeReport report;
    report.evidence = m;
    report.location = pinned;
    for (Index k = 0; k < d; ++k) report.location[pre.active_dims[static_cast<std::size_t>(k)]] = m.peak.location[k];
    out.modes.push_back(std::move(report));
  }

  if (config.reduce) {
    clock.run("reduction", [&] {
      for (ModeReport& report : out.modes) {
        try {
          report.reduction = reduce(sub, report.evidence.peak.location, report.evidence.hessian).report;
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::saddle_direction) throw;
          ev.warnings.push_back(std::string("reduction skipped: ") + e.what());
        }
      }
      return 0;
    });
  } else {
    ev.eval_counts["reduction"] = 0;
  }

  // Diagnostics.
  bool heavy = false;
  bool asymmetric = false;
  bool ill = false;
  bool floored = false;
  for (const ModeEvidence& m : ev.modes) {
    if (m.shape && m.shape->axes_used > 0) {
      heavy = heavy || m.shape->tail_ratio < kHeavyTailRatio;
      asymmetric = asymmetric || m.shape->asymmetry > kAsymmetry;
    }
    ill = ill || !(m.condition_number < kIllConditioned);
    floored = floored || m.peak.width_floored;
  }
  std::size_t saddles = out.rejected_modes.size();
  for (const Rejection& r : refined.rejections) {
    if (r.reason == "saddle") ++saddles;
  }
  const bool saddle_dominated = saddles >= ev.modes.size();
  if (heavy) ev.warnings.push_back("heavy-tail geometry detected");
  if (asymmetric) ev.warnings.push_back("asymmetric mode geometry detected");
  if (saddle_dominated) ev.warnings.push_back("saddle-dominated geometry detected");
  if (ill) ev.warnings.push_back("ill-conditioned mode Hessian");
  if (floored) ev.warnings.push_back("coarse width floored before refinement");
  if (out.scales.fallback) ev.warnings.push_back("scale estimation fell back to box fractions");
  ev.reliable = !(heavy || asymmetric || saddle_dominated || ill);

  out.total_evals = problem.eval_count() - evals_before;
  return out;
}

}  // namespace raylap
