#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "repcrash/crash_testing.hpp"
#include "repcrash/pipeline.hpp"

namespace repcrash {

struct RunConfig {
  std::optional<Mode> mode;
  AnalysisOptions analysis;
  std::vector<std::string> checker;  // argv; empty when unset
  std::uint64_t budget = kDefaultBudget;
  std::filesystem::path out_dir = "repcrash-out";
  std::chrono::milliseconds timeout{30000};
  unsigned jobs = 1;
  std::vector<SourceLoc> root_causes;
};

// Sets one key. Keys: mode, block_size, cache_line_size,
// split_writes_at_block_boundary, dbscan_eps, dbscan_min_pts, static_key,
// checker, budget, out, timeout (seconds), jobs, root_cause (comma list).
// Throws ConfigError.
void apply_config_value(RunConfig& cfg, const std::string& key,
                        const std::string& value);

// Flat "key = value" lines; '#' starts a comment. Throws ConfigError.
void load_config_text(RunConfig& cfg, const std::string& text);
void load_config_file(RunConfig& cfg, const std::filesystem::path& path);

TestOptions test_options(const RunConfig& cfg);

}  // namespace repcrash
