#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "cli.hpp"
#include "raylap/error.hpp"
#include "raylap/pipeline.hpp"
#include "raylap/targets.hpp"

namespace raylap::cli {

namespace {

std::string exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) fields.push_back(field);
  if (!line.empty() && line.back() == sep) fields.emplace_back();
  return fields;
}

double parse_double(const std::string& s) {
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::runtime_error("malformed number '" + s + "'");
  return v;
}

}  // namespace

void write_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
  out << kCsvSchema << "\n" << kCsvHeader << "\n";
  for (const BenchRow& r : rows) {
    out << r.function << ',' << r.dim << ',' << r.config << ',' << r.run_index << ',' << r.seed << ','
        << exact(r.log_z_true) << ',' << exact(r.log_z_est) << ',' << exact(r.rel_error) << ',' << r.wall_ms << ','
        << r.eval_count << ',' << r.n_modes_found << ',' << r.status << "\n";
  }
}

std::vector<BenchRow> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvSchema) throw std::runtime_error("missing or unknown CSV schema line");
  if (!std::getline(in, line) || line != kCsvHeader) throw std::runtime_error("unexpected CSV header");
  std::vector<BenchRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 12) throw std::runtime_error("expected 12 fields, got " + std::to_string(f.size()));
    BenchRow r;
    r.function = f[0];
    r.dim = std::stol(f[1]);
    r.config = f[2];
    r.run_index = std::stoi(f[3]);
    r.seed = std::stoull(f[4]);
    r.log_z_true = parse_double(f[5]);
    r.log_z_est = parse_double(f[6]);
    r.rel_error = parse_double(f[7]);
    r.wall_ms = std::stoll(f[8]);
    r.eval_count = std::stoull(f[9]);
    r.n_modes_found = std::stoi(f[10]);
    r.status = f[11];
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<Aggregate> aggregate(const std::vector<BenchRow>& rows) {
  std::vector<Aggregate> out;
  std::map<std::pair<std::string, long>, std::size_t> slot;
  std::vector<int> ok;
  for (const BenchRow& r : rows) {
    const auto key = std::make_pair(r.function, r.dim);
    auto it = slot.find(key);
    if (it == slot.end()) {
      it = slot.emplace(key, out.size()).first;
      Aggregate a;
      a.function = r.function;
      a.dim = r.dim;
      out.push_back(a);
      ok.push_back(0);
    }
    Aggregate& a = out[it->second];
    ++a.runs;
    a.mean_wall_ms += static_cast<double>(r.wall_ms);
    a.mean_evals += static_cast<double>(r.eval_count);
    if (r.status != "ok") {
      ++a.failures;
      continue;
    }
    ++ok[it->second];
    a.max_error = std::max(a.max_error, r.rel_error);
    a.mean_error += r.rel_error;
  }
  for (std::size_t k = 0; k < out.size(); ++k) {
    Aggregate& a = out[k];
    if (ok[k] > 0) a.mean_error /= ok[k];
    a.mean_wall_ms /= a.runs;
    a.mean_evals /= a.runs;
  }
  return out;
}

void print_summary(std::ostream& out, const std::vector<Aggregate>& summary) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-16s %5s %5s %6s %12s %12s %10s %12s\n", "function", "dim", "runs", "failed",
                "max_err", "mean_err", "mean_ms", "mean_evals");
  out << buf;
  for (const Aggregate& a : summary) {
    std::snprintf(buf, sizeof buf, "%-16s %5ld %5d %6d %12.4e %12.4e %10.1f %12.0f\n", a.function.c_str(), a.dim,
                  a.runs, a.failures, a.max_error, a.mean_error, a.mean_wall_ms, a.mean_evals);
    out << buf;
  }
}

std::vector<std::string> suite_functions(const std::string& suite, long dim) {
  if (suite == "gaussian") return {"gaussian"};
  if (suite == "multifunction") {
    return {"gaussian", "cigar", "correlated", "rotated-cigar", "skew-normal-5", "exp-power-1", "banana-0.1", "twisted"};
  }
  if (suite == "mixture") return {"mixture4", "bimodal-asym"};
  if (suite == "failure") {
    std::vector<std::string> names;
    for (const TestCase& tc : make_failure_suite(static_cast<Index>(dim))) names.push_back(tc.target.name);
    return names;
  }
  throw Error(ErrorKind::invalid_parameter, "unknown suite '" + suite + "'");
}

long suite_dim_cap(const std::string& suite) {
  if (suite == "gaussian") return 128;
  if (suite == "failure") return 16;
  return 32;
}

int cmd_bench(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Run a benchmark suite and write one CSV row per run", "raylap bench"};
  std::string suite;
  std::string dims_text;
  int runs = 5;
  std::string preset = "fast";
  std::string csv_path;
  bool allow_large = false;
  app.add_option("--suite", suite, "gaussian, multifunction, mixture or failure")
      ->required()
      ->check(CLI::IsMember({"gaussian", "multifunction", "mixture", "failure"}));
  app.add_option("--dims", dims_text, "Comma-separated dimensions")->required();
  app.add_option("--runs", runs, "Seeds per (function, dim)")->check(CLI::PositiveNumber);
  app.add_option("--preset", preset, "fast, slow or conservative")
      ->check(CLI::IsMember({"fast", "slow", "conservative"}));
  app.add_option("--csv", csv_path, "CSV output path");
  app.add_flag("--allow-large", allow_large, "Lift the per-suite dimension cap");
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  std::vector<long> dims;
  try {
    for (const auto& f : split(dims_text, ',')) {
      if (f.empty()) continue;
      std::size_t used = 0;
      const long d = std::stol(f, &used);
      if (used != f.size() || d < 1) throw std::invalid_argument(f);
      dims.push_back(d);
    }
  } catch (const std::exception&) {
    err << "error: --dims must be a comma-separated list of positive integers\n";
    return kUsage;
  }
  if (dims.empty()) {
    err << "error: --dims is empty\n";
    return kUsage;
  }
  const long cap = suite_dim_cap(suite);
  for (long d : dims) {
    if (d > cap && !allow_large) {
      err << "error: dimension " << d << " exceeds the " << suite << " cap of " << cap << " (use --allow-large)\n";
      return kUsage;
    }
    if (suite == "failure" && d < 2) {
      err << "error: the failure suite needs d >= 2\n";
      return kUsage;
    }
  }

  std::vector<BenchRow> rows;
  for (long d : dims) {
    for (const std::string& name : suite_functions(suite, d)) {
      for (int run = 0; run < runs; ++run) {
        BenchRow row;
        row.function = name;
        row.dim = d;
        row.config = preset;
        row.run_index = run;
        row.seed = static_cast<std::uint64_t>(run + 1);
        TestCase tc = make_named(name, static_cast<Index>(d));
        row.log_z_true = tc.target.true_log_integral;
        PipelineConfig config = PipelineConfig::from_preset(preset);
        config.seed = row.seed;
        const auto start = std::chrono::steady_clock::now();
        const std::uint64_t before = tc.problem.eval_count();
        try {
          const PipelineResult result = run_pipeline(tc.problem, config);
          row.log_z_est = result.evidence.log_z;
          row.rel_error = relative_error(row.log_z_est, row.log_z_true);
          row.n_modes_found = static_cast<int>(result.modes.size());
        } catch (const Error& e) {
          row.log_z_est = std::nan("");
          row.rel_error = std::nan("");
          row.status = to_string(e.kind());
        }
        row.eval_count = tc.problem.eval_count() - before;
        row.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
        rows.push_back(std::move(row));
      }
    }
  }

  if (!csv_path.empty()) {
    std::ofstream file(csv_path);
    if (!file) {
      err << "error: cannot write " << csv_path << "\n";
      return kInternal;
    }
    write_csv(file, rows);
  }
  print_summary(out, aggregate(rows));
  const bool all_failed = std::all_of(rows.begin(), rows.end(), [](const BenchRow& r) { return r.status != "ok"; });
  return all_failed ? kStageFailure : kOk;
}

}  // namespace raylap::cli
