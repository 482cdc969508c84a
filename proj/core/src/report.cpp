#include <chrono>
#include <ctime>

#include "json.hpp"
#include "raylap/pipeline.hpp"

namespace raylap {

namespace {

using nlohmann::json;

json vec_json(const Vec& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json index_json(const std::vector<Index>& v) {
  json a = json::array();
  for (Index i : v) a.push_back(i);
  return a;
}

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json config_json(const PipelineConfig& c) {
  return {{"preset", c.preset},
          {"n_oscillations", c.n_oscillations},
          {"fast_refine", c.fast_refine},
          {"tolerances",
           {{"stick_grad", c.stick_grad},
            {"refine_grad", c.refine_grad},
            {"eps_flat", c.eps_flat},
            {"eps_soft", c.eps_soft},
            {"eps_rot", c.eps_rot},
            {"dedup_radius", c.dedup_radius}}},
          {"budgets",
           {{"n_coarse", c.n_coarse},
            {"ray_delta", c.ray_delta},
            {"n_converge", c.n_converge},
            {"n_anticonverge", c.n_anticonverge},
            {"n_cloud", c.n_cloud},
            {"k_smooth", c.k_smooth},
            {"lbfgs_memory", c.lbfgs_memory}}},
          {"reduce", c.reduce},
          {"half_width_flat", c.half_width_flat}};
}

json mode_json(const ModeReport& m) {
  const ModeEvidence& e = m.evidence;
  json rot = {{"decision", to_string(e.rotation.decision)},
              {"trajectory_decision", to_string(e.rotation.trajectory_decision)},
              {"perp_fraction_mean", e.rotation.perp.mean},
              {"perp_fraction_max", e.rotation.perp.max},
              {"perp_steps", e.rotation.perp.used},
              {"probe_b", e.rotation.probe_b ? number(*e.rotation.probe_b) : json(nullptr)},
              {"probe_random", e.rotation.probe_random ? number(*e.rotation.probe_random) : json(nullptr)},
              {"probe_failed", e.rotation.probe_failed}};
  json out = {{"location", vec_json(m.location)},
              {"logl", e.peak.logl},
              {"log_z", e.log_z},
              {"hessian_kind", to_string(e.hessian_kind)},
              {"log_det_neg_h", e.log_det_neg_h},
              {"condition_number", number(e.condition_number)},
              {"diag_hessian", vec_json(e.peak.diag_hessian)},
              {"grad_linf", e.peak.grad_linf},
              {"rotation", rot}};
  if (e.shape) {
    out["shape"] = {{"tail_ratio", e.shape->tail_ratio},
                    {"asymmetry", e.shape->asymmetry},
                    {"axes_used", e.shape->axes_used}};
  }
  if (m.reduction) {
    const ReductionReport& r = *m.reduction;
    json rotation = json::array();
    for (Index c = 0; c < r.rotation.cols(); ++c) rotation.push_back(vec_json(r.rotation.col(c)));
    out["reduction"] = {{"eigenvalues", vec_json(r.eigenvalues)},
                        {"rotation_columns", rotation},
                        {"informative", index_json(r.informative)},
                        {"nuisance", index_json(r.nuisance)},
                        {"degenerate", index_json(r.degenerate)},
                        {"d_eff", r.d_eff},
                        {"log_z_nuisance", r.log_z_nuisance},
                        {"log_z_degen", r.log_z_degen},
                        {"eps_inform", r.eps_inform},
                        {"eps_nuisance", r.eps_nuisance},
                        {"reduced_lower", vec_json(r.reduced_lower)},
                        {"reduced_upper", vec_json(r.reduced_upper)}};
  }
  return out;
}

json result_json(const PipelineResult& r, bool with_volatile) {
  const EvidenceResult& e = r.evidence;
  json modes = json::array();
  for (const ModeReport& m : r.modes) modes.push_back(mode_json(m));
  json counts = json::object();
  for (const auto& [stage, n] : e.eval_counts) counts[stage] = n;
  counts["total"] = r.total_evals;
  json warnings = json::array();
  for (const auto& w : e.warnings) warnings.push_back(w);
  json rejected = json::array();
  for (const Rejection& rej : r.rejections) {
    rejected.push_back({{"reason", rej.reason}, {"source", rej.source}, {"logl", number(rej.logl)}});
  }
  json dropped = json::array();
  for (const auto& s : r.rejected_modes) dropped.push_back(s);
  json per_osc = json::array();
  for (int n : r.oscillation.peaks_per_oscillation) per_osc.push_back(n);

  json doc = {
      {"log_z", e.log_z},
      {"log_z_vs_prior", e.log_z_vs_prior},
      {"modes", modes},
      {"precheck",
       {{"sensitivities", vec_json(e.precheck.sensitivities)},
        {"flat_dims", index_json(e.precheck.flat_dims)},
        {"soft_dims", index_json(e.precheck.soft_dims)},
        {"active_dims", index_json(e.precheck.active_dims)},
        {"log_z_marginal", e.precheck.log_z_marginal},
        {"center_logl", e.precheck.center_logl}}},
      {"discovery",
       {{"rays", r.ray_count},
        {"ray_samples", r.ray_samples},
        {"scales", {{"fine", r.scales.fine}, {"mid", r.scales.mid}, {"coarse", r.scales.coarse},
                    {"transitions", r.scales.transitions}, {"fallback", r.scales.fallback}}},
        {"peaks_per_oscillation", per_osc},
        {"repulse_rounds", r.oscillation.repulse_rounds},
        {"rooster_rounds", r.oscillation.rooster_rounds},
        {"coarse_peaks", r.coarse_peaks}}},
      {"refine_rejections", rejected},
      {"dropped_modes", dropped},
      {"eval_counts", counts},
      {"warnings", warnings},
      {"reliable", e.reliable},
      {"config_echo", config_json(r.config)},
      {"seed", r.config.seed},
  };
  if (with_volatile) {
    json timing = json::object();
    for (const auto& [stage, ms] : e.timing_ms) timing[stage] = ms;
    doc["timing_ms"] = timing;
    doc["timestamp"] = utc_now();
  }
  return doc;
}

}  // namespace

std::string to_json(const PipelineResult& result, bool pretty) {
  return result_json(result, true).dump(pretty ? 2 : -1);
}

std::string to_json_deterministic(const PipelineResult& result) { return result_json(result, false).dump(2); }

}  // namespace raylap
