#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "repcrash/behavior.hpp"

namespace repcrash {

struct ClusterParams {
  std::uint64_t eps = 10;
  std::size_t min_pts = 1;
};

// A function in one thread's call structure, named by its static path from
// the outermost frame ("Fn1/Fn3"). The empty path is the thread root.
struct FunctionKey {
  std::uint32_t tid = 0;
  std::string path;

  auto operator<=>(const FunctionKey&) const = default;
};

std::string to_string(const FunctionKey& key);

using FunctionMap = std::map<FunctionKey, std::vector<UpdateBehavior>>;

// Outermost-aligned common frames. Frames match when function, file and line
// agree; a frame whose function and file agree but whose line differs ends
// the prefix and is included (with a's line).
Backtrace longest_common_prefix(const Backtrace& a, const Backtrace& b);

// Function names of the frames joined with '/'.
std::string function_path(const Backtrace& frames);

// Leaf-level behaviors per function, one pass of the pairwise LCP walk per
// thread over the graph's nodes.
FunctionMap derive_function_subgraphs(const PersistenceGraph& graph,
                                      const Trace& trace);

class CallStackTree {
 public:
  struct Node {
    FunctionKey key;
    std::vector<FunctionKey> children;
    std::vector<std::string> behavior_ids;
  };

  // One root per thread; a node for every prefix of every graph node's
  // function path. Behavior ids from `fmap` are attached to their keys.
  static CallStackTree build(const PersistenceGraph& graph,
                             const FunctionMap& fmap);

  const std::map<FunctionKey, Node>& nodes() const { return nodes_; }
  std::vector<FunctionKey> roots() const;
  const Node& at(const FunctionKey& key) const;

 private:
  Node& ensure(const FunctionKey& key);

  std::map<FunctionKey, Node> nodes_;
};

// Leaf-to-root pass. Each non-root function with children gains the
// temporally clustered union of its children's behaviors and its own.
// Existing behaviors are kept; merged behaviors that duplicate a node set
// already present are dropped.
FunctionMap merge_up_tree(const CallStackTree& tree, const FunctionMap& fmap,
                          const PersistenceGraph& graph,
                          const ClusterParams& params = {});

// 1-D DBSCAN over the behavior's seqs. Neighbors are within eps inclusive.
// Noise points become singleton behaviors.
std::vector<UpdateBehavior> cluster_temporal(const UpdateBehavior& behavior,
                                             std::uint64_t eps,
                                             std::size_t min_pts);

// Full derivation with unique ids, ordered by function key then first seq.
std::vector<UpdateBehavior> posix_behaviors(const PersistenceGraph& graph,
                                            const Trace& trace,
                                            const ClusterParams& params = {});

}  // namespace repcrash
