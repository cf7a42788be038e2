#pragma once

#include <iosfwd>

namespace ipdnet::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Entry point for the `ipdnet` command: run, grid, analyze, selfcheck.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ipdnet::cli
