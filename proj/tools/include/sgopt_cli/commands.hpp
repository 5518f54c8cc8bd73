#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sgopt_cli/config.hpp"

namespace sgopt::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitCheckFailed = 1,
  kExitConfigError = 2,
  kExitDivergence = 3,
};

/// Environment variable naming the default output root.
inline constexpr const char* kOutputRootEnv = "SGOPT_OUTPUT_ROOT";

/// $SGOPT_OUTPUT_ROOT/<config stem>, or ./sgopt-out/<config stem> when unset.
std::filesystem::path default_output_dir(const std::filesystem::path& config_path);

struct CheckOutcome {
  std::string check;
  std::string method;
  double expected = 0.0;
  double got = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  std::string note;
};

/// Serializes one failure-report line.
std::string to_json_line(const CheckOutcome& outcome);

/// Runs every (method, seed) pair and writes traces, ensemble means, rate fits,
/// a gnuplot script, failures.jsonl and resolved.cfg under `out_dir`.
int cmd_run(const ExperimentSpec& spec, const std::filesystem::path& out_dir, std::ostream& log);

/// Config check only; prints violations and warnings.
int cmd_validate(const ExperimentSpec& spec, std::ostream& log);

/// Bias table for the cubic probe and a quadratic control.
int cmd_bias(const ExperimentSpec& spec, const std::filesystem::path& out_dir, std::ostream& log);

struct IngestOptions {
  std::string data;  // path or "synthetic-abalone"
  std::string format = "csv";
  bool header = false;
  double split = 0.0;
  int nodes = 10;
  int onehot = -1;
  double lambda = 1.0;
  std::uint64_t seed = 1;
  std::filesystem::path out;
};

/// Standardizes, splits and partitions a dataset; writes train.csv, test.csv
/// (when non-empty) and summary.txt.
int cmd_ingest(const IngestOptions& options, std::ostream& log);

}  // namespace sgopt::cli
