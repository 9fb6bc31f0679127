#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace coarsekit {

// Version of the JSON report layout; bumped on incompatible changes.
inline constexpr int kReportSchemaVersion = 1;

enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitParse = 2,     // malformed config, unknown keys, out-of-range parameters
  kExitContract = 3,  // refusals and broken preconditions
  kExitBudget = 4,    // enumeration budget exhausted; partial results flagged
};

std::string version();
std::vector<std::string> task_names();

// Command-line values that take precedence over the config document.
struct TaskOverrides {
  std::optional<std::string> task;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> budget;
  std::optional<std::string> format;  // json | csv
};

struct TaskOutcome {
  int exit_code = kExitOk;
  std::string status;  // ok | refused | contract_error | budget_exceeded | parse_error | internal_error
  std::string format;  // json | csv
  std::string report;  // serialized report, newline terminated
  std::optional<std::string> out_path;  // from the config's output section
};

// Parses a JSON config (comments allowed), applies overrides and runs one
// task. Never throws; failures are reported through the exit code and the
// report's "error" section. Output is byte-identical for identical inputs.
TaskOutcome run_task(const std::string& config_text, const TaskOverrides& overrides = {});

// Writes via a temporary file in the target directory and a rename.
void write_atomically(const std::string& path, const std::string& content);

}  // namespace coarsekit
