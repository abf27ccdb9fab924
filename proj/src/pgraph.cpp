#include "repcrash/pgraph.hpp"

#include <algorithm>
#include <cassert>
#include <queue>

#include "repcrash/error.hpp"

namespace repcrash {

namespace {

std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

}  // namespace

StaticKey static_key(const Operation& op, StaticKeyMode mode) {
  StaticKey k;
  k.kind = op.kind;
  if (!op.backtrace.empty()) {
    k.file = op.backtrace.back().file;
    k.line = op.backtrace.back().line;
  }
  if (mode == StaticKeyMode::kFullStack) k.static_stack = op.backtrace;
  return k;
}

std::string to_string(const StaticKey& key) {
  std::string out(to_string(key.kind));
  out += "@" + key.file + ":" + std::to_string(key.line);
  if (!key.static_stack.empty()) {
    out += " [";
    for (std::size_t i = 0; i < key.static_stack.size(); ++i) {
      if (i) out += " > ";
      out += format_frame(key.static_stack[i]);
    }
    out += "]";
  }
  return out;
}

std::vector<std::uint64_t> PersistenceGraph::seqs() const {
  std::vector<std::uint64_t> out;
  out.reserve(nodes_.size());
  for (const auto& n : nodes_) out.push_back(n.seq);
  return out;
}

std::size_t PersistenceGraph::index_of(std::uint64_t seq) const {
  auto it = std::lower_bound(
      nodes_.begin(), nodes_.end(), seq,
      [](const Operation& op, std::uint64_t s) { return op.seq < s; });
  if (it == nodes_.end() || it->seq != seq) throw NodeNotFound(seq);
  return static_cast<std::size_t>(it - nodes_.begin());
}

bool PersistenceGraph::contains(std::uint64_t seq) const {
  auto it = std::lower_bound(
      nodes_.begin(), nodes_.end(), seq,
      [](const Operation& op, std::uint64_t s) { return op.seq < s; });
  return it != nodes_.end() && it->seq == seq;
}

const Operation& PersistenceGraph::node(std::uint64_t seq) const {
  return nodes_[index_of(seq)];
}

const StaticKey& PersistenceGraph::key(std::uint64_t seq) const {
  return keys_[index_of(seq)];
}

const std::vector<std::uint64_t>& PersistenceGraph::successors(
    std::uint64_t seq) const {
  return succ_[index_of(seq)];
}

const std::vector<std::uint64_t>& PersistenceGraph::predecessors(
    std::uint64_t seq) const {
  return pred_[index_of(seq)];
}

std::set<std::uint64_t> PersistenceGraph::ancestors(std::uint64_t seq) const {
  std::set<std::uint64_t> seen;
  std::vector<std::uint64_t> stack{seq};
  while (!stack.empty()) {
    std::uint64_t s = stack.back();
    stack.pop_back();
    for (std::uint64_t p : predecessors(s)) {
      if (seen.insert(p).second) stack.push_back(p);
    }
  }
  return seen;
}

void PersistenceGraph::index() {
  keys_.clear();
  static_index_.clear();
  succ_.assign(nodes_.size(), {});
  pred_.assign(nodes_.size(), {});
  for (const auto& n : nodes_) {
    keys_.push_back(static_key(n, key_mode_));
    static_index_[keys_.back()].push_back(n.seq);
  }
  for (const auto& e : edges_) {
    succ_[index_of(e.src_seq)].push_back(e.dst_seq);
    pred_[index_of(e.dst_seq)].push_back(e.src_seq);
  }
}

PersistenceGraph build_graph(const Trace& trace, const EdgeSet& edges,
                             StaticKeyMode mode) {
  PersistenceGraph g;
  g.key_mode_ = mode;
  for (const auto& op : trace.ops) {
    if (is_graph_node(op.kind)) g.nodes_.push_back(op);
  }
  g.edges_ = edges;
  std::sort(g.edges_.begin(), g.edges_.end());
  g.edges_.erase(std::unique(g.edges_.begin(), g.edges_.end()), g.edges_.end());
  for (const auto& e : g.edges_) {
    if (!g.contains(e.src_seq) || !g.contains(e.dst_seq)) {
      throw GraphBuildError("edge " + std::to_string(e.src_seq) + "->" +
                            std::to_string(e.dst_seq) +
                            " references an unknown node");
    }
    if (e.src_seq >= e.dst_seq) {
      throw GraphBuildError("edge " + std::to_string(e.src_seq) + "->" +
                            std::to_string(e.dst_seq) +
                            " runs against trace order");
    }
  }
  g.index();
  assert(topological_order(g).size() == g.size());
  return g;
}

EdgeSet induced_edges(const PersistenceGraph& graph,
                      const std::vector<std::uint64_t>& node_set) {
  std::set<std::uint64_t> members;
  for (std::uint64_t s : node_set) {
    if (!graph.contains(s)) throw NodeNotFound(s);
    members.insert(s);
  }
  EdgeSet out;
  for (const auto& e : graph.edges()) {
    if (members.count(e.src_seq) && members.count(e.dst_seq)) out.push_back(e);
  }
  return out;
}

PersistenceGraph induced_subgraph(const PersistenceGraph& graph,
                                  const std::vector<std::uint64_t>& node_set) {
  PersistenceGraph g;
  g.key_mode_ = graph.key_mode_;
  g.edges_ = induced_edges(graph, node_set);
  std::set<std::uint64_t> members(node_set.begin(), node_set.end());
  for (std::uint64_t s : members) g.nodes_.push_back(graph.node(s));
  g.index();
  return g;
}

std::vector<std::uint64_t> topological_order(const PersistenceGraph& graph) {
  std::map<std::uint64_t, std::size_t> indegree;
  for (const auto& n : graph.nodes()) indegree[n.seq] = 0;
  for (const auto& e : graph.edges()) ++indegree[e.dst_seq];
  std::priority_queue<std::uint64_t, std::vector<std::uint64_t>,
                      std::greater<>>
      ready;
  for (const auto& [s, d] : indegree) {
    if (d == 0) ready.push(s);
  }
  std::vector<std::uint64_t> out;
  while (!ready.empty()) {
    std::uint64_t s = ready.top();
    ready.pop();
    out.push_back(s);
    for (std::uint64_t t : graph.successors(s)) {
      if (--indegree[t] == 0) ready.push(t);
    }
  }
  return out;
}

std::string export_dot(const PersistenceGraph& graph) {
  std::string out = "digraph pg {\n";
  for (const auto& n : graph.nodes()) {
    std::string label = std::to_string(n.seq) + ": " +
                        std::string(to_string(n.kind));
    if (!n.backtrace.empty()) {
      label += "@" + n.backtrace.back().file + ":" +
               std::to_string(n.backtrace.back().line);
    }
    out += "  n" + std::to_string(n.seq) + " [label=\"" + dot_escape(label) +
           "\"];\n";
  }
  for (const auto& e : graph.edges()) {
    out += "  n" + std::to_string(e.src_seq) + " -> n" +
           std::to_string(e.dst_seq) + " [label=\"" +
           std::string(to_string(e.reason)) + "\"];\n";
  }
  out += "}\n";
  return out;
}

}  // namespace repcrash
