#pragma once

namespace hact::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitDivergence = 3;

/// Entry point of the `hact` tool: synth, build-graphs, train, eval, report.
int run(int argc, char** argv);

}  // namespace hact::cli
