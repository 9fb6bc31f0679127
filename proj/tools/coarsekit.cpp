#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "coarsekit/tasks.hpp"

namespace {

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ", ") + s;
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coarse invariants of finitely generated groups: balls, quotient windows, ends, "
               "chain-complex (co)homology and Euler characteristic checks."};
  app.set_version_flag("--version", coarsekit::version());

  std::string config_path;
  std::optional<std::string> task;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> budget;
  std::optional<std::string> out_path;
  std::optional<std::string> format;
  app.add_option("--config", config_path, "JSON config file (see README for the schema)")->check(CLI::ExistingFile);
  app.add_option("--task", task, "Task, overrides the config: " + join(coarsekit::task_names()))
      ->check(CLI::IsMember(coarsekit::task_names()));
  app.add_option("--seed", seed, "Seed for randomized suites, overrides the config");
  app.add_option("--budget", budget, "Enumeration budget (nodes or cells), overrides the config")
      ->check(CLI::PositiveNumber);
  app.add_option("--out", out_path, "Report path, written atomically; stdout when absent");
  app.add_option("--format", format, "Report format")->check(CLI::IsMember({"json", "csv"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : coarsekit::kExitParse;
  }

  std::string config_text;
  if (!config_path.empty()) {
    std::ifstream in(config_path, std::ios::binary);
    if (!in) {
      std::cerr << "error: cannot read " << config_path << "\n";
      return coarsekit::kExitParse;
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    config_text = ss.str();
  } else if (!task) {
    std::cerr << "error: give --config or --task\n";
    return coarsekit::kExitParse;
  }

  coarsekit::TaskOverrides overrides;
  overrides.task = task;
  overrides.seed = seed;
  overrides.budget = budget;
  overrides.format = format;
  const auto outcome = coarsekit::run_task(config_text, overrides);

  const auto target = out_path ? out_path : outcome.out_path;
  if (target) {
    try {
      coarsekit::write_atomically(*target, outcome.report);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return coarsekit::kExitInternal;
    }
  } else {
    std::cout << outcome.report;
  }
  if (outcome.exit_code != coarsekit::kExitOk) std::cerr << "coarsekit: " << outcome.status << "\n";
  return outcome.exit_code;
}
