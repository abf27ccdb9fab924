#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include "repcrash/image.hpp"

namespace repcrash {

enum class Verdict { kConsistent, kInconsistent, kOracleError };
std::string_view to_string(Verdict v);

struct CheckerSpec {
  std::vector<std::string> argv;  // scratch path is appended
  std::chrono::milliseconds timeout{30000};
};

struct CheckResult {
  Verdict verdict = Verdict::kOracleError;
  std::string oracle_output;  // stdout and stderr, interleaved
  int exit_code = -1;         // -1 when killed or never started
};

// Runs the checker on an already materialized directory.
CheckResult run_checker(const CheckerSpec& checker,
                        const std::filesystem::path& scratch);

// Clears `scratch`, materializes the image there and runs the checker.
// Exit 0 is Consistent, any other exit or a signal is Inconsistent; spawn
// failure or timeout is OracleError.
CheckResult run_oracle(const CrashState& image, const CheckerSpec& checker,
                       const std::filesystem::path& scratch);

}  // namespace repcrash
