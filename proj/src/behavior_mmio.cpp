#include "repcrash/behavior_mmio.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>

namespace repcrash {

namespace {

std::string hex_addr(std::uint64_t addr) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "0x%llx", static_cast<unsigned long long>(addr));
  return buf;
}

}  // namespace

std::string_view to_string(EpochBoundary b) {
  switch (b) {
    case EpochBoundary::kCriterion1: return "Criterion1";
    case EpochBoundary::kCriterion2: return "Criterion2";
    case EpochBoundary::kTraceEnd: return "TraceEnd";
  }
  return "?";
}

std::string store_type(const Operation& op) {
  if (op.annotation) return op.annotation->type_name;
  return "addr:" + hex_addr(op.args.addr);
}

std::string store_instance(const Operation& op) {
  if (op.annotation) return op.annotation->instance_id;
  return hex_addr(op.args.addr);
}

std::string store_field(const Operation& op) {
  if (op.annotation) return op.annotation->field_name;
  return hex_addr(op.args.addr);
}

std::vector<TypeSubgraph> build_type_subgraphs(const PersistenceGraph& graph,
                                               const Trace& trace) {
  (void)trace;
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::uint64_t>> members;
  std::vector<std::string> outers;
  for (const auto& op : graph.nodes()) {
    if (op.kind != OpKind::kStore) continue;
    const std::string t = store_type(op);
    if (!members.count(t)) order.push_back(t);
    members[t].push_back(op.seq);
    if (op.annotation) {
      auto slash = t.find('/');
      if (slash != std::string::npos && slash > 0) {
        std::string outer = t.substr(0, slash);
        if (std::find(outers.begin(), outers.end(), outer) == outers.end()) {
          outers.push_back(outer);
        }
      }
    }
  }

  std::vector<TypeSubgraph> out;
  for (const auto& t : order) {
    out.push_back({t, false, induced_subgraph(graph, members[t])});
  }
  for (const auto& outer : outers) {
    std::vector<std::uint64_t> seqs;
    for (const auto& [t, s] : members) {
      if (t == outer || t.rfind(outer + "/", 0) == 0) {
        seqs.insert(seqs.end(), s.begin(), s.end());
      }
    }
    out.push_back({outer, true, induced_subgraph(graph, seqs)});
  }
  return out;
}

std::vector<InstanceSubgraph> build_instance_subgraphs(const TypeSubgraph& tsg) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::uint64_t>> members;
  for (const auto& op : tsg.subgraph.nodes()) {
    const std::string inst = store_instance(op);
    if (!members.count(inst)) order.push_back(inst);
    members[inst].push_back(op.seq);
  }
  std::vector<InstanceSubgraph> out;
  for (const auto& inst : order) {
    out.push_back({tsg.type_name, inst, induced_subgraph(tsg.subgraph, members[inst])});
  }
  return out;
}

std::vector<EpochSubgraph> split_epochs(const InstanceSubgraph& isg,
                                        const PersistenceGraph& full_graph,
                                        const Trace& trace,
                                        const ModelConfig& cfg) {
  std::vector<EpochSubgraph> out;
  const auto& ops = isg.subgraph.nodes();
  if (ops.empty()) return out;
  const MmioPersistence persist = MmioPersistence::build(trace, cfg);

  std::set<std::uint64_t> own;
  for (const auto& op : ops) own.insert(op.seq);
  // Stores of every other instance, keyed by (type, instance).
  std::map<std::pair<std::string, std::string>, std::vector<std::uint64_t>> others;
  for (const auto& op : trace.ops) {
    if (op.kind != OpKind::kStore || own.count(op.seq)) continue;
    others[{store_type(op), store_instance(op)}].push_back(op.seq);
  }

  std::vector<std::uint64_t> current;
  std::set<std::string> fields;
  auto close = [&](EpochBoundary reason) {
    EpochSubgraph e;
    e.type_name = isg.type_name;
    e.instance_id = isg.instance_id;
    e.epoch_index = out.size();
    e.subgraph = induced_subgraph(full_graph, current);
    e.boundary_reason = reason;
    out.push_back(std::move(e));
    current.clear();
    fields.clear();
  };

  for (const auto& op : ops) {
    const std::uint64_t seq = op.seq;
    const std::string field = store_field(op);
    if (!current.empty()) {
      bool all_persisted = std::all_of(
          current.begin(), current.end(),
          [&](std::uint64_t s) { return persist.persisted_before(s, seq); });
      if (all_persisted && fields.count(field)) {
        close(EpochBoundary::kCriterion1);
      } else {
        const std::uint64_t start = current.front();
        for (const auto& [key, seqs] : others) {
          bool any = false, all = true;
          for (std::uint64_t s : seqs) {
            if (s < start || s >= seq) continue;
            any = true;
            all = all && persist.persisted_before(s, seq);
          }
          if (any && all) {
            close(EpochBoundary::kCriterion2);
            break;
          }
        }
      }
    }
    current.push_back(seq);
    fields.insert(field);
  }
  close(EpochBoundary::kTraceEnd);
  return out;
}

std::vector<UpdateBehavior> mmio_behaviors(const PersistenceGraph& graph,
                                           const Trace& trace,
                                           const ModelConfig& cfg) {
  std::vector<UpdateBehavior> out;
  std::set<std::vector<std::uint64_t>> seen;
  for (const auto& tsg : build_type_subgraphs(graph, trace)) {
    for (const auto& isg : build_instance_subgraphs(tsg)) {
      for (const auto& epoch : split_epochs(isg, graph, trace, cfg)) {
        std::vector<std::uint64_t> seqs = epoch.subgraph.seqs();
        if (!seen.insert(seqs).second) continue;
        const std::string owner = tsg.type_name + "." + isg.instance_id;
        const std::string id = behavior_label(
            owner + "#e" + std::to_string(epoch.epoch_index), seqs);
        out.push_back(make_behavior(id, owner, graph.node(seqs.front()).tid,
                                    seqs, graph));
      }
    }
  }
  return out;
}

}  // namespace repcrash
