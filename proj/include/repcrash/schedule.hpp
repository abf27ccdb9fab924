#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "repcrash/behavior.hpp"
#include "repcrash/persistence_model.hpp"

namespace repcrash {

inline constexpr std::uint64_t kDefaultBudget = 100000;

struct CrashSchedule {
  std::string behavior_id;
  std::vector<std::uint64_t> context;  // update ops before the behavior
  std::vector<std::uint64_t> applied;  // behavior update ops, in apply order

  // context followed by applied.
  std::vector<std::uint64_t> order() const;
  bool operator==(const CrashSchedule&) const = default;
};

std::string schedule_json(const CrashSchedule& schedule);
// Throws ConfigError on malformed input.
CrashSchedule parse_schedule_json(const std::string& text);

// Which update operations commute at replay: disjoint (file, block) pairs,
// disjoint names, disjoint cache lines.
class Footprints {
 public:
  static Footprints build(const Trace& trace, const ModelConfig& cfg);
  bool independent(std::uint64_t a, std::uint64_t b) const;

 private:
  struct Entry {
    std::vector<std::pair<std::uint64_t, std::uint64_t>> data;
    std::vector<std::string> names;
    std::vector<std::uint64_t> lines;
  };
  std::map<std::uint64_t, Entry> entries_;
};

using ScheduleSink = std::function<void(const CrashSchedule&)>;

// Prefix DFS over linearizations of the behavior's update ops, pruned with
// sleep sets. An op is enabled once every full-graph update ancestor at or
// after the behavior start has been applied; ancestors outside the behavior
// keep it disabled. Each DFS node is reported as one schedule. Throws
// ExplosionLimit once more than `budget` schedules have been produced.
std::uint64_t enumerate_schedules(const UpdateBehavior& behavior,
                                  const PersistenceGraph& full,
                                  const Trace& trace, const Footprints& fp,
                                  std::uint64_t budget, const ScheduleSink& sink);

// Every (downward-closed subset, linearization) pair over the update ops of
// the whole graph, without pruning.
std::uint64_t enumerate_exhaustive(const PersistenceGraph& full,
                                   std::uint64_t budget,
                                   const ScheduleSink& sink);

}  // namespace repcrash
