#include "cli.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "raylap/error.hpp"
#include "raylap/pipeline.hpp"
#include "raylap/targets.hpp"

namespace raylap::cli {

namespace {

int exit_code_for(ErrorKind kind, bool in_pipeline) {
  switch (kind) {
    case ErrorKind::invalid_parameter:
    case ErrorKind::unsupported_dimension:
      return in_pipeline ? kStageFailure : kUsage;
    default:
      return in_pipeline ? kStageFailure : kInternal;
  }
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

double relative_error(double log_z_est, double log_z_true) {
  return std::abs(std::expm1(log_z_est - log_z_true));
}

int cmd_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Run the evidence pipeline on a built-in problem", "raylap run"};
  std::string problem_name;
  long dim = 2;
  std::string preset = "fast";
  std::uint64_t seed = 0;
  std::string out_path;
  std::string raybank_path;
  bool reduce = false;
  bool half_width_flat = false;
  app.add_option("--problem", problem_name, "Problem name")->required();
  app.add_option("--dim", dim, "Dimension")->check(CLI::PositiveNumber);
  app.add_option("--preset", preset, "fast, slow or conservative")
      ->check(CLI::IsMember({"fast", "slow", "conservative"}));
  app.add_option("--seed", seed, "Random seed");
  app.add_option("--out", out_path, "Write the JSON result here");
  app.add_option("--raybank", raybank_path, "Write the ray sample sidecar here");
  app.add_flag("--reduce", reduce, "Run the dimensional reduction stage");
  app.add_flag("--half-width-flat", half_width_flat, "Credit flat coordinates with half the box width");
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  std::optional<TestCase> tc;
  try {
    tc.emplace(make_named(problem_name, static_cast<Index>(dim)));
  } catch (const Error& e) {
    err << "error: " << to_string(e.kind()) << ": " << e.what() << "\n";
    return exit_code_for(e.kind(), false);
  }

  PipelineConfig config = PipelineConfig::from_preset(preset);
  config.seed = seed;
  config.reduce = reduce;
  config.half_width_flat = half_width_flat;
  config.raybank_path = raybank_path;
  PipelineResult result;
  try {
    result = run_pipeline(tc->problem, config);
  } catch (const Error& e) {
    err << "error: stage " << (e.stage().empty() ? "?" : e.stage()) << ": " << to_string(e.kind()) << ": "
        << e.what() << "\n";
    return kStageFailure;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kInternal;
  }

  const double truth = tc->target.true_log_integral;
  const double est = result.evidence.log_z;
  out << problem_name << " d=" << dim << " preset=" << preset << " seed=" << seed << ": log_z=" << format_double(est)
      << " true=" << format_double(truth) << " rel_error=" << format_double(relative_error(est, truth))
      << " modes=" << result.modes.size() << " evals=" << result.total_evals << "\n";
  for (const auto& w : result.evidence.warnings) out << "warning: " << w << "\n";
  if (!result.evidence.reliable) out << "result flagged unreliable\n";
  if (!out_path.empty()) {
    std::ofstream file(out_path);
    if (!file) {
      err << "error: cannot write " << out_path << "\n";
      return kInternal;
    }
    file << to_json(result) << "\n";
  }
  return kOk;
}

int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err) {
  const std::string usage =
      "usage: raylap <run|bench> [options]\n"
      "  run   --problem NAME --dim D --preset fast|slow|conservative --seed N [--out FILE] [--reduce]\n"
      "        [--raybank FILE] [--half-width-flat]\n"
      "  bench --suite gaussian|multifunction|mixture|failure --dims 2,4,8 --runs R --preset P\n"
      "        [--csv FILE] [--allow-large]\n";
  if (argc < 2) {
    err << usage;
    return kUsage;
  }
  const std::string command = argv[1];
  std::vector<std::string> rest(argv + 2, argv + argc);
  if (command == "run") return cmd_run(rest, out, err);
  if (command == "bench") return cmd_bench(rest, out, err);
  if (command == "-h" || command == "--help") {
    out << usage;
    return kOk;
  }
  err << "unknown command '" << command << "'\n" << usage;
  return kUsage;
}

}  // namespace raylap::cli
