#pragma once

namespace homog {

/// Parses argv, dispatches the subcommand, returns the process exit code:
/// 0 success, 1 usage or configuration error, 2 runtime failure.
int run_cli(int argc, char** argv);

}  // namespace homog
