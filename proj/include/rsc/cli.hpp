#pragma once

#include <string_view>

namespace rsc {

// Process exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitVerifyFailed = 1,
  kExitInvalidInput = 2,   // bad flags, config or controls file
  kExitNumerical = 3,      // non-finite or exploding paths
  kExitRuntime = 4,        // I/O and other runtime failures
};

// The packaged bond/stock portfolio scenario written by `rsc example-bond`.
std::string_view example_bond_scenario();

// Entry point of `rsc simulate | optimize | verify | example-bond`.
int run_cli(int argc, char** argv);

}  // namespace rsc
