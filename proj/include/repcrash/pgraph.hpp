#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "repcrash/persistence_model.hpp"
#include "repcrash/trace.hpp"

namespace repcrash {

enum class StaticKeyMode { kFullStack, kInnermost };

// Payload-independent identity of an operation's origin.
struct StaticKey {
  OpKind kind = OpKind::kWrite;
  std::string file;
  std::uint32_t line = 0;
  Backtrace static_stack;  // empty in kInnermost mode

  auto operator<=>(const StaticKey&) const = default;
};

StaticKey static_key(const Operation& op,
                     StaticKeyMode mode = StaticKeyMode::kFullStack);
std::string to_string(const StaticKey& key);

// DAG over graph-node operations, identified by seq. Immutable once built.
class PersistenceGraph {
 public:
  PersistenceGraph() = default;

  const std::vector<Operation>& nodes() const { return nodes_; }
  const EdgeSet& edges() const { return edges_; }
  std::vector<std::uint64_t> seqs() const;
  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }
  bool contains(std::uint64_t seq) const;
  // Throws NodeNotFound.
  const Operation& node(std::uint64_t seq) const;
  const StaticKey& key(std::uint64_t seq) const;
  StaticKeyMode key_mode() const { return key_mode_; }
  const std::map<StaticKey, std::vector<std::uint64_t>>& static_index() const {
    return static_index_;
  }
  const std::vector<std::uint64_t>& successors(std::uint64_t seq) const;
  const std::vector<std::uint64_t>& predecessors(std::uint64_t seq) const;
  // Every node with a path to `seq`, excluding `seq`.
  std::set<std::uint64_t> ancestors(std::uint64_t seq) const;

 private:
  friend PersistenceGraph build_graph(const Trace&, const EdgeSet&,
                                      StaticKeyMode);
  friend PersistenceGraph induced_subgraph(const PersistenceGraph&,
                                           const std::vector<std::uint64_t>&);

  std::size_t index_of(std::uint64_t seq) const;
  void index();

  std::vector<Operation> nodes_;  // seq order
  std::vector<StaticKey> keys_;
  EdgeSet edges_;
  std::vector<std::vector<std::uint64_t>> succ_, pred_;
  std::map<StaticKey, std::vector<std::uint64_t>> static_index_;
  StaticKeyMode key_mode_ = StaticKeyMode::kFullStack;
};

// Nodes are the trace's graph-node operations. Throws GraphBuildError for
// edges naming an unknown seq or running against trace order.
PersistenceGraph build_graph(const Trace& trace, const EdgeSet& edges,
                             StaticKeyMode mode = StaticKeyMode::kFullStack);

// Edges with both endpoints in node_set. Throws NodeNotFound.
EdgeSet induced_edges(const PersistenceGraph& graph,
                      const std::vector<std::uint64_t>& node_set);
PersistenceGraph induced_subgraph(const PersistenceGraph& graph,
                                  const std::vector<std::uint64_t>& node_set);

// Kahn's algorithm, smallest seq first among ready nodes.
std::vector<std::uint64_t> topological_order(const PersistenceGraph& graph);

std::string export_dot(const PersistenceGraph& graph);

}  // namespace repcrash
