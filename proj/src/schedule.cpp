#include "repcrash/schedule.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

#include "repcrash/error.hpp"

namespace repcrash {

namespace {

template <typename T>
bool disjoint(const std::vector<T>& a, const std::vector<T>& b) {
  for (const auto& x : a) {
    if (std::find(b.begin(), b.end(), x) != b.end()) return false;
  }
  return true;
}

class Explorer {
 public:
  Explorer(std::vector<std::uint64_t> ops,
           std::vector<std::vector<std::size_t>> reqs,
           std::vector<bool> never, const Footprints* fp, std::uint64_t budget,
           CrashSchedule base, const ScheduleSink& sink)
      : ops_(std::move(ops)),
        requires_(std::move(reqs)),
        never_(std::move(never)),
        fp_(fp),
        budget_(budget),
        current_(std::move(base)),
        sink_(sink),
        done_(ops_.size(), false) {}

  std::uint64_t run() {
    dfs({});
    return count_;
  }

 private:
  void dfs(std::vector<std::size_t> sleep) {
    if (++count_ > budget_) throw ExplosionLimit(budget_);
    sink_(current_);
    for (std::size_t v = 0; v < ops_.size(); ++v) {
      if (done_[v] || never_[v] || !enabled(v)) continue;
      if (std::find(sleep.begin(), sleep.end(), v) != sleep.end()) continue;
      std::vector<std::size_t> child;
      if (fp_) {
        for (std::size_t u : sleep) {
          if (fp_->independent(ops_[u], ops_[v])) child.push_back(u);
        }
      }
      done_[v] = true;
      current_.applied.push_back(ops_[v]);
      dfs(std::move(child));
      current_.applied.pop_back();
      done_[v] = false;
      if (fp_) sleep.push_back(v);
    }
  }

  bool enabled(std::size_t v) const {
    return std::all_of(requires_[v].begin(), requires_[v].end(),
                       [&](std::size_t u) { return done_[u]; });
  }

  std::vector<std::uint64_t> ops_;
  std::vector<std::vector<std::size_t>> requires_;
  std::vector<bool> never_;
  const Footprints* fp_;
  std::uint64_t budget_;
  CrashSchedule current_;
  const ScheduleSink& sink_;
  std::vector<bool> done_;
  std::uint64_t count_ = 0;
};

}  // namespace

std::vector<std::uint64_t> CrashSchedule::order() const {
  std::vector<std::uint64_t> out = context;
  out.insert(out.end(), applied.begin(), applied.end());
  return out;
}

std::string schedule_json(const CrashSchedule& schedule) {
  nlohmann::ordered_json j;
  j["behavior"] = schedule.behavior_id;
  j["context"] = schedule.context;
  j["applied"] = schedule.applied;
  return j.dump(2) + "\n";
}

CrashSchedule parse_schedule_json(const std::string& text) {
  try {
    auto j = nlohmann::json::parse(text);
    CrashSchedule s;
    s.behavior_id = j.value("behavior", "");
    s.context = j.at("context").get<std::vector<std::uint64_t>>();
    s.applied = j.at("applied").get<std::vector<std::uint64_t>>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed schedule: ") + e.what());
  }
}

Footprints Footprints::build(const Trace& trace, const ModelConfig& cfg) {
  Footprints fp;
  if (trace.meta.mode == Mode::kPosix) {
    const PosixResolution res = PosixResolution::build(trace, cfg);
    for (const auto& op : trace.ops) {
      if (!is_update(op.kind)) continue;
      const PosixOpInfo& info = res.at(op.seq);
      Entry e;
      if (info.is_data) {
        for (std::uint64_t b : info.touched_blocks) e.data.push_back({info.inode, b});
      }
      e.names = info.names;
      fp.entries_[op.seq] = std::move(e);
    }
  } else {
    const MmioPersistence mp = MmioPersistence::build(trace, cfg);
    for (const auto& op : trace.ops) {
      if (op.kind == OpKind::kStore) fp.entries_[op.seq].lines = mp.lines(op.seq);
    }
  }
  return fp;
}

bool Footprints::independent(std::uint64_t a, std::uint64_t b) const {
  auto ia = entries_.find(a);
  auto ib = entries_.find(b);
  if (ia == entries_.end() || ib == entries_.end()) return false;
  return disjoint(ia->second.data, ib->second.data) &&
         disjoint(ia->second.names, ib->second.names) &&
         disjoint(ia->second.lines, ib->second.lines);
}

std::uint64_t enumerate_schedules(const UpdateBehavior& behavior,
                                  const PersistenceGraph& full,
                                  const Trace& trace, const Footprints& fp,
                                  std::uint64_t budget, const ScheduleSink& sink) {
  const std::uint64_t start = behavior.node_seqs.front();
  CrashSchedule base;
  base.behavior_id = behavior.id;
  for (const auto& op : trace.ops) {
    if (op.seq >= start) break;
    if (is_update(op.kind)) base.context.push_back(op.seq);
  }

  std::vector<std::uint64_t> ops;
  for (std::uint64_t s : behavior.node_seqs) {
    if (is_update(full.node(s).kind)) ops.push_back(s);
  }
  std::vector<std::vector<std::size_t>> reqs(ops.size());
  std::vector<bool> never(ops.size(), false);
  for (std::size_t i = 0; i < ops.size(); ++i) {
    for (std::uint64_t a : full.ancestors(ops[i])) {
      if (a < start || !is_update(full.node(a).kind)) continue;
      auto it = std::lower_bound(ops.begin(), ops.end(), a);
      if (it == ops.end() || *it != a) {
        never[i] = true;
      } else {
        reqs[i].push_back(static_cast<std::size_t>(it - ops.begin()));
      }
    }
  }
  return Explorer(std::move(ops), std::move(reqs), std::move(never), &fp,
                  budget, std::move(base), sink)
      .run();
}

std::uint64_t enumerate_exhaustive(const PersistenceGraph& full,
                                   std::uint64_t budget,
                                   const ScheduleSink& sink) {
  std::vector<std::uint64_t> ops;
  for (const auto& n : full.nodes()) {
    if (is_update(n.kind)) ops.push_back(n.seq);
  }
  std::vector<std::vector<std::size_t>> reqs(ops.size());
  for (std::size_t i = 0; i < ops.size(); ++i) {
    for (std::uint64_t a : full.ancestors(ops[i])) {
      auto it = std::lower_bound(ops.begin(), ops.end(), a);
      if (it != ops.end() && *it == a) {
        reqs[i].push_back(static_cast<std::size_t>(it - ops.begin()));
      }
    }
  }
  CrashSchedule base;
  base.behavior_id = "<exhaustive>";
  std::vector<bool> never(ops.size(), false);
  return Explorer(std::move(ops), std::move(reqs), std::move(never), nullptr,
                  budget, std::move(base), sink)
      .run();
}

}  // namespace repcrash
