#pragma once

#include <iosfwd>

namespace mmflow {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 1;
inline constexpr int kExitNotConverged = 2;

// Entry point of the `mmflow` tool: equilibrium, optimize, share, generate, pipeline.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mmflow
