#pragma once

// CLI commands. Each writes report.json (plus CSV tables and field files) into
// the output directory and returns the process exit code.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "degen/scenario.hpp"

namespace degen {

enum ExitCode { kExitPass = 0, kExitBoundFail = 1, kExitConfig = 2, kExitNumeric = 3 };

struct CommandOptions {
  std::filesystem::path out = "out";
  std::optional<int> refine;
  int threads = 1;
};

int cmd_verify_bound(const Scenario& s, const CommandOptions& opt, std::ostream& log);
int cmd_check_structure(const Scenario& s, const CommandOptions& opt, std::ostream& log);
int cmd_geometry(const Scenario& s, const CommandOptions& opt, std::ostream& log);
int cmd_trace_iteration(const Scenario& s, const CommandOptions& opt, std::ostream& log);
int cmd_solve(const Scenario& s, const CommandOptions& opt, std::ostream& log);

// Loads the config, dispatches, and maps errors to exit codes.
int run_command(const std::string& name, const std::filesystem::path& config, const CommandOptions& opt,
                std::ostream& log);

ExitCode exit_code_for(ErrorKind kind);

// Thread count from DEGEN_THREADS (default 1).
int threads_from_env();

}  // namespace degen
