#pragma once

#include <ostream>

namespace repcrash {

// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitBugs = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

// Subcommands: analyze, test, exhaustive, replay, synth.
int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err);

}  // namespace repcrash
