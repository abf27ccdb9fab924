#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "repcrash/behavior.hpp"
#include "repcrash/oracle.hpp"
#include "repcrash/representatives.hpp"
#include "repcrash/schedule.hpp"

namespace repcrash {

struct SourceLoc {
  std::string file;
  std::uint32_t line = 0;

  auto operator<=>(const SourceLoc&) const = default;
};

// "file:line"; throws ConfigError.
SourceLoc parse_source_loc(const std::string& text);
std::string to_string(const SourceLoc& loc);

struct TestOptions {
  CheckerSpec checker;
  std::uint64_t budget = kDefaultBudget;
  std::filesystem::path scratch_root;  // empty: a fresh temp directory
  unsigned jobs = 1;
  std::vector<SourceLoc> root_causes;  // for correlated-state counts
};

struct BugReport {
  std::string identity;
  CrashSchedule schedule;
  std::vector<std::uint64_t> omitted;
  std::vector<std::string> omitted_keys;  // sorted StaticKey renderings
  std::string oracle_output;
  std::string state_digest;
  std::string behavior_dot;
  std::map<std::uint64_t, Backtrace> backtraces;  // applied and omitted ops
};

struct BehaviorStats {
  std::string behavior_id;
  std::uint64_t schedules = 0;
  std::uint64_t states_checked = 0;
  std::uint64_t states_deduped = 0;
  bool partial = false;
};

struct TestStats {
  std::uint64_t representatives = 0;
  std::uint64_t schedules_tested = 0;
  std::uint64_t states_checked = 0;  // oracle invocations
  std::uint64_t states_deduped = 0;  // schedules answered from the image memo
  std::uint64_t distinct_states = 0;
  std::uint64_t oracle_errors = 0;
  std::vector<std::string> oracle_error_samples;
  bool partial_coverage = false;
  std::vector<std::string> partial_behaviors;
  std::map<SourceLoc, std::uint64_t> correlated_states;
  std::vector<BehaviorStats> per_behavior;
};

struct TestOutcome {
  std::vector<BugReport> bugs;
  TestStats stats;
};

// Update ops below the highest applied seq that the order leaves out.
std::vector<std::uint64_t> omitted_ops(const Trace& trace,
                                       const std::vector<std::uint64_t>& order);

// Enumerates, replays and checks every distinct representative. Inconsistent
// results are deduplicated by (StaticKeys of omitted ops, oracle output).
TestOutcome test_groups(const std::vector<BehaviorGroup>& groups,
                        const std::vector<UpdateBehavior>& behaviors,
                        const PersistenceGraph& graph, const Trace& trace,
                        const ModelConfig& cfg, const TestOptions& options);

// Same pipeline over every crash state of the whole graph, without pruning.
TestOutcome test_exhaustive(const PersistenceGraph& graph, const Trace& trace,
                            const ModelConfig& cfg, const TestOptions& options);

// Distinct crash states of the whole graph: digest -> first order reaching it.
struct StateSet {
  std::uint64_t schedules = 0;
  std::map<std::string, std::vector<std::uint64_t>> states;
};
StateSet exhaustive_states(const PersistenceGraph& graph, const Trace& trace,
                           const ModelConfig& cfg, std::uint64_t budget);
StateSet behavior_states(const UpdateBehavior& behavior,
                         const PersistenceGraph& graph, const Trace& trace,
                         const ModelConfig& cfg, std::uint64_t budget);

std::string bugs_json(const std::vector<BugReport>& bugs);
std::string stats_json(const TestStats& stats);
std::string states_json(const StateSet& states);

}  // namespace repcrash
