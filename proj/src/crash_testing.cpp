#include "repcrash/crash_testing.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

#include <json.hpp>

#include "repcrash/error.hpp"

namespace repcrash {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

struct Unit {
  const UpdateBehavior* behavior = nullptr;  // nullptr: whole graph
};

struct UnitResult {
  BehaviorStats stats;
  std::vector<BugReport> bugs;
  std::uint64_t oracle_errors = 0;
  std::vector<std::string> error_samples;
  std::set<std::string> digests;
  std::map<SourceLoc, std::uint64_t> correlated;
};

bool touches(const Operation& op, const SourceLoc& loc) {
  return std::any_of(op.backtrace.begin(), op.backtrace.end(), [&](const Frame& f) {
    return f.file == loc.file && f.line == loc.line;
  });
}

class Pipeline {
 public:
  Pipeline(const PersistenceGraph& graph, const Trace& trace,
           const ModelConfig& cfg, const TestOptions& options)
      : graph_(graph),
        trace_(trace),
        options_(options),
        replayer_(trace, cfg),
        fp_(Footprints::build(trace, cfg)) {}

  UnitResult run(const Unit& unit, const fs::path& scratch) const {
    UnitResult r;
    const PersistenceGraph& shown = unit.behavior ? unit.behavior->subgraph : graph_;
    r.stats.behavior_id = unit.behavior ? unit.behavior->id : "<exhaustive>";
    std::map<std::string, CheckResult> memo;
    std::set<std::string> identities;
    const std::string dot = export_dot(shown);

    auto sink = [&](const CrashSchedule& s) {
      const std::vector<std::uint64_t> order = s.order();
      const CrashState state = replayer_.replay(order);
      const std::string digest = state.digest();
      auto it = memo.find(digest);
      if (it == memo.end()) {
        CheckResult res = run_oracle(state, options_.checker, scratch);
        ++r.stats.states_checked;
        if (res.verdict == Verdict::kOracleError) {
          ++r.oracle_errors;
          if (r.error_samples.size() < 5) r.error_samples.push_back(res.oracle_output);
        }
        it = memo.emplace(digest, std::move(res)).first;
      } else {
        ++r.stats.states_deduped;
      }
      r.digests.insert(digest);
      if (it->second.verdict != Verdict::kInconsistent) return;

      BugReport bug;
      bug.omitted = omitted_ops(trace_, order);
      for (std::uint64_t o : bug.omitted) {
        bug.omitted_keys.push_back(to_string(static_key(*trace_.find(o), graph_.key_mode())));
      }
      std::sort(bug.omitted_keys.begin(), bug.omitted_keys.end());
      std::string id_text;
      for (const auto& k : bug.omitted_keys) id_text += k + "\n";
      id_text += "|" + payload_digest(Bytes(it->second.oracle_output.begin(),
                                            it->second.oracle_output.end()));
      bug.identity = payload_digest(Bytes(id_text.begin(), id_text.end()));
      if (!identities.insert(bug.identity).second) return;
      bug.schedule = s;
      bug.oracle_output = it->second.oracle_output;
      bug.state_digest = digest;
      bug.behavior_dot = dot;
      for (std::uint64_t seq : s.applied) bug.backtraces[seq] = trace_.find(seq)->backtrace;
      for (std::uint64_t seq : bug.omitted) bug.backtraces[seq] = trace_.find(seq)->backtrace;
      r.bugs.push_back(std::move(bug));
    };

    try {
      if (unit.behavior) {
        r.stats.schedules = enumerate_schedules(*unit.behavior, graph_, trace_, fp_,
                                                options_.budget, sink);
      } else {
        r.stats.schedules = enumerate_exhaustive(graph_, options_.budget, sink);
      }
    } catch (const ExplosionLimit&) {
      r.stats.schedules = options_.budget;
      r.stats.partial = true;
    }

    for (const auto& loc : options_.root_causes) {
      bool covered = std::any_of(shown.nodes().begin(), shown.nodes().end(),
                                 [&](const Operation& op) { return touches(op, loc); });
      if (covered) r.correlated[loc] = r.digests.size();
    }
    return r;
  }

 private:
  const PersistenceGraph& graph_;
  const Trace& trace_;
  const TestOptions& options_;
  Replayer replayer_;
  Footprints fp_;
};

fs::path make_scratch_root(const TestOptions& options, bool& owned) {
  static std::atomic<unsigned> counter{0};
  owned = options.scratch_root.empty();
  fs::path root = owned ? fs::temp_directory_path() /
                              ("repcrash-" + std::to_string(getpid()) + "-" +
                               std::to_string(counter++))
                        : options.scratch_root;
  fs::create_directories(root);
  return root;
}

TestOutcome run_units(const std::vector<Unit>& units, const PersistenceGraph& graph,
                      const Trace& trace, const ModelConfig& cfg,
                      const TestOptions& options) {
  const Pipeline pipeline(graph, trace, cfg, options);
  bool owned = false;
  const fs::path root = make_scratch_root(options, owned);

  std::vector<UnitResult> results(units.size());
  const unsigned jobs =
      std::max(1u, std::min<unsigned>(options.jobs, static_cast<unsigned>(units.size())));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&](unsigned k) {
    const fs::path scratch = root / ("w" + std::to_string(k));
    for (std::size_t i = next++; i < units.size(); i = next++) {
      try {
        results[i] = pipeline.run(units[i], scratch);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = units.size();
      }
    }
  };
  if (jobs <= 1) {
    worker(0);
  } else {
    std::vector<std::thread> threads;
    for (unsigned k = 0; k < jobs; ++k) threads.emplace_back(worker, k);
    for (auto& t : threads) t.join();
  }
  if (owned) {
    std::error_code ec;
    fs::remove_all(root, ec);
  }
  if (failure) std::rethrow_exception(failure);

  TestOutcome out;
  TestStats& st = out.stats;
  st.representatives = units.size();
  std::set<std::string> identities, digests;
  for (auto& r : results) {
    st.schedules_tested += r.stats.schedules;
    st.states_checked += r.stats.states_checked;
    st.states_deduped += r.stats.states_deduped;
    st.oracle_errors += r.oracle_errors;
    for (auto& s : r.error_samples) {
      if (st.oracle_error_samples.size() < 5) st.oracle_error_samples.push_back(s);
    }
    if (r.stats.partial) {
      st.partial_coverage = true;
      st.partial_behaviors.push_back(r.stats.behavior_id);
    }
    for (const auto& [loc, n] : r.correlated) st.correlated_states[loc] += n;
    digests.insert(r.digests.begin(), r.digests.end());
    for (auto& b : r.bugs) {
      if (identities.insert(b.identity).second) out.bugs.push_back(std::move(b));
    }
    st.per_behavior.push_back(r.stats);
  }
  st.distinct_states = digests.size();
  for (const auto& loc : options.root_causes) st.correlated_states.try_emplace(loc, 0);
  return out;
}

StateSet collect_states(const Trace& trace, const ModelConfig& cfg,
                        const std::function<std::uint64_t(const ScheduleSink&)>& run) {
  const Replayer replayer(trace, cfg);
  StateSet out;
  out.schedules = run([&](const CrashSchedule& s) {
    const auto order = s.order();
    out.states.try_emplace(replayer.replay(order).digest(), order);
  });
  return out;
}

}  // namespace

SourceLoc parse_source_loc(const std::string& text) {
  auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
    throw ConfigError("expected FILE:LINE, got '" + text + "'");
  }
  SourceLoc loc;
  loc.file = text.substr(0, colon);
  try {
    std::size_t used = 0;
    unsigned long v = std::stoul(text.substr(colon + 1), &used);
    if (used != text.size() - colon - 1 || v == 0) throw std::invalid_argument("");
    loc.line = static_cast<std::uint32_t>(v);
  } catch (const std::exception&) {
    throw ConfigError("expected FILE:LINE, got '" + text + "'");
  }
  return loc;
}

std::string to_string(const SourceLoc& loc) {
  return loc.file + ":" + std::to_string(loc.line);
}

std::vector<std::uint64_t> omitted_ops(const Trace& trace,
                                       const std::vector<std::uint64_t>& order) {
  if (order.empty()) return {};
  const std::uint64_t top = *std::max_element(order.begin(), order.end());
  const std::set<std::uint64_t> applied(order.begin(), order.end());
  std::vector<std::uint64_t> out;
  for (const auto& op : trace.ops) {
    if (op.seq >= top) break;
    if (is_update(op.kind) && !applied.count(op.seq)) out.push_back(op.seq);
  }
  return out;
}

TestOutcome test_groups(const std::vector<BehaviorGroup>& groups,
                        const std::vector<UpdateBehavior>& behaviors,
                        const PersistenceGraph& graph, const Trace& trace,
                        const ModelConfig& cfg, const TestOptions& options) {
  std::map<std::string, const UpdateBehavior*> by_id;
  for (const auto& b : behaviors) by_id[b.id] = &b;
  std::vector<Unit> units;
  std::set<std::string> seen;
  for (const auto& g : groups) {
    if (!seen.insert(g.representative).second) continue;
    auto it = by_id.find(g.representative);
    if (it == by_id.end()) {
      throw Error("test", "unknown representative " + g.representative);
    }
    units.push_back({it->second});
  }
  return run_units(units, graph, trace, cfg, options);
}

TestOutcome test_exhaustive(const PersistenceGraph& graph, const Trace& trace,
                            const ModelConfig& cfg, const TestOptions& options) {
  return run_units({Unit{}}, graph, trace, cfg, options);
}

StateSet exhaustive_states(const PersistenceGraph& graph, const Trace& trace,
                           const ModelConfig& cfg, std::uint64_t budget) {
  return collect_states(trace, cfg, [&](const ScheduleSink& sink) {
    return enumerate_exhaustive(graph, budget, sink);
  });
}

StateSet behavior_states(const UpdateBehavior& behavior,
                         const PersistenceGraph& graph, const Trace& trace,
                         const ModelConfig& cfg, std::uint64_t budget) {
  const Footprints fp = Footprints::build(trace, cfg);
  return collect_states(trace, cfg, [&](const ScheduleSink& sink) {
    return enumerate_schedules(behavior, graph, trace, fp, budget, sink);
  });
}

std::string bugs_json(const std::vector<BugReport>& bugs) {
  ojson out = ojson::array();
  for (const auto& b : bugs) {
    ojson j;
    j["identity"] = b.identity;
    j["behavior"] = b.schedule.behavior_id;
    j["context"] = b.schedule.context;
    j["applied"] = b.schedule.applied;
    j["omitted"] = b.omitted;
    j["omitted_keys"] = b.omitted_keys;
    j["oracle_output"] = b.oracle_output;
    j["state_digest"] = b.state_digest;
    ojson bts = ojson::object();
    for (const auto& [seq, bt] : b.backtraces) {
      ojson frames = ojson::array();
      for (const auto& f : bt) frames.push_back(format_frame(f));
      bts[std::to_string(seq)] = std::move(frames);
    }
    j["backtraces"] = std::move(bts);
    j["behavior_dot"] = b.behavior_dot;
    out.push_back(std::move(j));
  }
  return out.dump(2) + "\n";
}

std::string stats_json(const TestStats& st) {
  ojson j;
  j["representatives"] = st.representatives;
  j["schedules_tested"] = st.schedules_tested;
  j["states_checked"] = st.states_checked;
  j["states_deduped"] = st.states_deduped;
  j["distinct_states"] = st.distinct_states;
  j["oracle_errors"] = st.oracle_errors;
  j["oracle_error_samples"] = st.oracle_error_samples;
  j["partial_coverage"] = st.partial_coverage;
  j["partial_behaviors"] = st.partial_behaviors;
  ojson corr = ojson::object();
  for (const auto& [loc, n] : st.correlated_states) corr[to_string(loc)] = n;
  j["correlated_states"] = std::move(corr);
  ojson per = ojson::array();
  for (const auto& b : st.per_behavior) {
    ojson e;
    e["behavior"] = b.behavior_id;
    e["schedules"] = b.schedules;
    e["states_checked"] = b.states_checked;
    e["states_deduped"] = b.states_deduped;
    e["partial"] = b.partial;
    per.push_back(std::move(e));
  }
  j["per_behavior"] = std::move(per);
  return j.dump(2) + "\n";
}

std::string states_json(const StateSet& states) {
  ojson j;
  j["schedules"] = states.schedules;
  j["distinct_states"] = states.states.size();
  ojson list = ojson::array();
  for (const auto& [digest, order] : states.states) {
    ojson e;
    e["digest"] = digest;
    e["order"] = order;
    list.push_back(std::move(e));
  }
  j["states"] = std::move(list);
  return j.dump(2) + "\n";
}

}  // namespace repcrash
