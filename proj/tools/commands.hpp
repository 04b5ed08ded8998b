#pragma once

namespace actrob::cli {

inline constexpr const char* kToolVersion = "1.0.0";

/// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Parses arguments, runs one subcommand and returns the exit code.
int run_cli(int argc, char** argv);

}  // namespace actrob::cli
