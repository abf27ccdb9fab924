#include "repcrash/behavior_posix.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>

#include "repcrash/error.hpp"

namespace repcrash {

namespace {

std::string prefix_of(const FunctionKey& key) {
  return "t" + std::to_string(key.tid) + ":" +
         (key.path.empty() ? "<root>" : key.path);
}

std::string parent_path(const std::string& path) {
  auto slash = path.rfind('/');
  return slash == std::string::npos ? "" : path.substr(0, slash);
}

class IdRegistry {
 public:
  void reserve(const std::string& id) { used_.insert(id); }
  std::string claim(const std::string& base) {
    std::string id = base;
    for (int k = 2; used_.count(id); ++k) id = base + "#" + std::to_string(k);
    used_.insert(id);
    return id;
  }

 private:
  std::set<std::string> used_;
};

}  // namespace

UpdateBehavior make_behavior(std::string id, std::string owner,
                             std::uint32_t tid, std::vector<std::uint64_t> seqs,
                             const PersistenceGraph& full) {
  std::sort(seqs.begin(), seqs.end());
  seqs.erase(std::unique(seqs.begin(), seqs.end()), seqs.end());
  UpdateBehavior b;
  b.id = std::move(id);
  b.owner_function = std::move(owner);
  b.tid = tid;
  b.subgraph = induced_subgraph(full, seqs);
  b.node_seqs = std::move(seqs);
  return b;
}

std::string behavior_label(const std::string& prefix,
                           const std::vector<std::uint64_t>& seqs) {
  if (seqs.empty()) return prefix + "[]";
  return prefix + "[" + std::to_string(seqs.front()) + "-" +
         std::to_string(seqs.back()) + "]";
}

std::string to_string(const FunctionKey& key) { return prefix_of(key); }

Backtrace longest_common_prefix(const Backtrace& a, const Backtrace& b) {
  Backtrace out;
  for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
    if (a[i].function != b[i].function || a[i].file != b[i].file) break;
    out.push_back(a[i]);
    if (a[i].line != b[i].line) break;
  }
  return out;
}

std::string function_path(const Backtrace& frames) {
  std::string out;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (i) out += '/';
    out += frames[i].function;
  }
  return out;
}

FunctionMap derive_function_subgraphs(const PersistenceGraph& graph,
                                      const Trace& trace) {
  (void)trace;
  std::map<std::uint32_t, std::vector<const Operation*>> threads;
  for (const auto& op : graph.nodes()) threads[op.tid].push_back(&op);

  FunctionMap out;
  IdRegistry ids;
  for (const auto& [tid, ops] : threads) {
    auto emit = [&, tid = tid](const std::string& path,
                               const std::vector<std::uint64_t>& seqs) {
      FunctionKey key{tid, path};
      out[key].push_back(make_behavior(ids.claim(behavior_label(prefix_of(key), seqs)),
                                       path, tid, seqs, graph));
    };

    const std::size_t n = ops.size();
    std::vector<bool> assigned(n, false);
    std::vector<std::uint64_t> ub;
    bool open = false;
    std::string prev_f;
    std::size_t prev_depth = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const Backtrace lcp =
          longest_common_prefix(ops[i]->backtrace, ops[i + 1]->backtrace);
      const std::string f = function_path(lcp);
      if (!assigned[i]) {
        ub = {ops[i]->seq, ops[i + 1]->seq};
        assigned[i] = assigned[i + 1] = true;
        open = true;
      } else if (lcp.size() == prev_depth) {
        ub.push_back(ops[i + 1]->seq);
        assigned[i + 1] = true;
      } else if (lcp.size() > prev_depth) {
        ub.pop_back();
        emit(prev_f, ub);
        ub = {ops[i]->seq, ops[i + 1]->seq};
        assigned[i + 1] = true;
      } else {
        emit(prev_f, ub);
        ub.clear();
        open = false;
      }
      prev_f = f;
      prev_depth = lcp.size();
    }
    if (open) emit(prev_f, ub);
    if (n > 0 && !assigned[n - 1]) {
      emit(function_path(ops[n - 1]->backtrace), {ops[n - 1]->seq});
    }
  }
  return out;
}

CallStackTree::Node& CallStackTree::ensure(const FunctionKey& key) {
  auto it = nodes_.find(key);
  if (it != nodes_.end()) return it->second;
  Node& node = nodes_[key];
  node.key = key;
  if (!key.path.empty()) {
    Node& parent = ensure({key.tid, parent_path(key.path)});
    parent.children.push_back(key);
    std::sort(parent.children.begin(), parent.children.end());
  }
  return nodes_[key];
}

CallStackTree CallStackTree::build(const PersistenceGraph& graph,
                                   const FunctionMap& fmap) {
  CallStackTree tree;
  for (const auto& op : graph.nodes()) {
    tree.ensure({op.tid, function_path(op.backtrace)});
  }
  for (const auto& [key, behaviors] : fmap) {
    Node& node = tree.ensure(key);
    for (const auto& b : behaviors) node.behavior_ids.push_back(b.id);
  }
  return tree;
}

std::vector<FunctionKey> CallStackTree::roots() const {
  std::vector<FunctionKey> out;
  for (const auto& [key, node] : nodes_) {
    if (key.path.empty()) out.push_back(key);
  }
  return out;
}

const CallStackTree::Node& CallStackTree::at(const FunctionKey& key) const {
  auto it = nodes_.find(key);
  if (it == nodes_.end()) {
    throw Error("behavior", "no call stack tree node " + to_string(key));
  }
  return it->second;
}

std::vector<UpdateBehavior> cluster_temporal(const UpdateBehavior& behavior,
                                             std::uint64_t eps,
                                             std::size_t min_pts) {
  const auto& pts = behavior.node_seqs;
  const std::size_t n = pts.size();
  if (n <= 1) return {behavior};

  auto lo = [&](std::size_t i) {
    return static_cast<std::size_t>(
        std::lower_bound(pts.begin(), pts.end(), pts[i] > eps ? pts[i] - eps : 0) -
        pts.begin());
  };
  auto hi = [&](std::size_t i) {
    return static_cast<std::size_t>(
        std::upper_bound(pts.begin(), pts.end(), pts[i] + eps) - pts.begin());
  };
  std::vector<bool> core(n);
  for (std::size_t i = 0; i < n; ++i) core[i] = hi(i) - lo(i) >= min_pts;

  constexpr int kUnset = -1;
  std::vector<int> label(n, kUnset);
  int clusters = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (label[i] != kUnset || !core[i]) continue;
    const int c = clusters++;
    std::vector<std::size_t> frontier{i};
    label[i] = c;
    while (!frontier.empty()) {
      std::size_t p = frontier.back();
      frontier.pop_back();
      if (!core[p]) continue;
      for (std::size_t q = lo(p); q < hi(p); ++q) {
        if (label[q] != kUnset) continue;
        label[q] = c;
        frontier.push_back(q);
      }
    }
  }

  std::vector<std::vector<std::uint64_t>> groups(clusters);
  for (std::size_t i = 0; i < n; ++i) {
    if (label[i] == kUnset) {
      groups.push_back({pts[i]});
    } else {
      groups[label[i]].push_back(pts[i]);
    }
  }
  if (groups.size() == 1) return {behavior};
  std::sort(groups.begin(), groups.end());

  const FunctionKey key{behavior.tid, behavior.owner_function};
  std::vector<UpdateBehavior> out;
  for (const auto& g : groups) {
    out.push_back(make_behavior(behavior_label(prefix_of(key), g),
                                behavior.owner_function, behavior.tid, g,
                                behavior.subgraph));
  }
  return out;
}

FunctionMap merge_up_tree(const CallStackTree& tree, const FunctionMap& fmap,
                          const PersistenceGraph& graph,
                          const ClusterParams& params) {
  FunctionMap out = fmap;
  IdRegistry ids;
  std::set<std::pair<std::uint32_t, std::vector<std::uint64_t>>> seen;
  for (const auto& [key, behaviors] : fmap) {
    for (const auto& b : behaviors) {
      ids.reserve(b.id);
      seen.insert({b.tid, b.node_seqs});
    }
  }

  // Ops covered by each subtree, kept even when a merged set is a duplicate.
  std::map<FunctionKey, std::vector<std::uint64_t>> covered;
  std::function<void(const FunctionKey&)> visit = [&](const FunctionKey& key) {
    const auto& node = tree.at(key);
    std::vector<std::uint64_t>& seqs = covered[key];
    for (const auto& child : node.children) {
      visit(child);
      seqs.insert(seqs.end(), covered[child].begin(), covered[child].end());
    }
    if (auto it = fmap.find(key); it != fmap.end()) {
      for (const auto& b : it->second) {
        seqs.insert(seqs.end(), b.node_seqs.begin(), b.node_seqs.end());
      }
    }
    if (key.path.empty() || node.children.empty() || seqs.empty()) return;

    UpdateBehavior merged = make_behavior("", key.path, key.tid, seqs, graph);
    for (auto& piece : cluster_temporal(merged, params.eps, params.min_pts)) {
      if (!seen.insert({piece.tid, piece.node_seqs}).second) continue;
      piece.id = ids.claim(behavior_label(prefix_of(key), piece.node_seqs));
      out[key].push_back(std::move(piece));
    }
  };
  for (const auto& root : tree.roots()) visit(root);
  return out;
}

std::vector<UpdateBehavior> posix_behaviors(const PersistenceGraph& graph,
                                            const Trace& trace,
                                            const ClusterParams& params) {
  if (params.eps == 0 || params.min_pts == 0) {
    throw ConfigError("dbscan_eps and dbscan_min_pts must be positive");
  }
  FunctionMap leaves = derive_function_subgraphs(graph, trace);
  CallStackTree tree = CallStackTree::build(graph, leaves);
  FunctionMap merged = merge_up_tree(tree, leaves, graph, params);
  std::vector<UpdateBehavior> out;
  for (auto& [key, behaviors] : merged) {
    for (auto& b : behaviors) out.push_back(std::move(b));
  }
  return out;
}

}  // namespace repcrash
