#pragma once
// Command dispatch behind the weightforge binary. run_command is the
// testable core: it consumes a parsed problem file and returns the report
// plus the process exit code (0 ok, 1 input error, 2 unknown, 3 infeasible,
// 4 verification breach).

#include <optional>
#include <string>

#include "weightforge/json_io.hpp"

namespace weightforge {

struct CliOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  std::optional<int> budget;
};

struct CommandResult {
  int exit_code = 0;
  json report;
};

CommandResult run_command(const std::string& command, const json& problem,
                          const CliOverrides& overrides = {});

int cli_main(int argc, char** argv);

}  // namespace weightforge
