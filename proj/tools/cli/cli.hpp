#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace raylap::cli {

enum ExitCode : int { kOk = 0, kInternal = 1, kUsage = 2, kStageFailure = 3 };

struct BenchRow {
  std::string function;
  long dim = 0;
  std::string config;
  int run_index = 0;
  std::uint64_t seed = 0;
  double log_z_true = 0.0;
  double log_z_est = 0.0;
  double rel_error = 0.0;  // |exp(log_z_est - log_z_true) - 1|
  long long wall_ms = 0;
  std::uint64_t eval_count = 0;
  int n_modes_found = 0;
  std::string status = "ok";  // "ok" or the error kind of a failed run
};

inline constexpr const char* kCsvSchema = "#schema=raylap-bench/1";
inline constexpr const char* kCsvHeader =
    "function,dim,config,run,seed,log_z_true,log_z_est,rel_error,wall_ms,evals,modes,status";

double relative_error(double log_z_est, double log_z_true);

void write_csv(std::ostream& out, const std::vector<BenchRow>& rows);
// Throws std::runtime_error on a schema or header mismatch or a malformed row.
std::vector<BenchRow> read_csv(std::istream& in);

struct Aggregate {
  std::string function;
  long dim = 0;
  int runs = 0;
  int failures = 0;
  double max_error = 0.0;
  double mean_error = 0.0;
  double mean_wall_ms = 0.0;
  double mean_evals = 0.0;
};

// One entry per (function, dim) in first-appearance order; errors over
// successful runs only.
std::vector<Aggregate> aggregate(const std::vector<BenchRow>& rows);
void print_summary(std::ostream& out, const std::vector<Aggregate>& summary);

// Problems exercised by each bench suite.
std::vector<std::string> suite_functions(const std::string& suite, long dim);
long suite_dim_cap(const std::string& suite);

int cmd_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cmd_bench(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
// Dispatches on the first argument.
int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace raylap::cli
