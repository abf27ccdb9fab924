#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "repcrash/pgraph.hpp"

namespace repcrash {

struct UpdateBehavior {
  std::string id;
  std::string owner_function;
  std::uint32_t tid = 0;
  std::vector<std::uint64_t> node_seqs;  // ascending
  PersistenceGraph subgraph;             // induced on node_seqs

  std::pair<std::uint64_t, std::uint64_t> span() const {
    return {node_seqs.front(), node_seqs.back()};
  }
};

// Sorts and dedups seqs, then induces the subgraph from `full`.
UpdateBehavior make_behavior(std::string id, std::string owner,
                             std::uint32_t tid, std::vector<std::uint64_t> seqs,
                             const PersistenceGraph& full);

// "<prefix>[first-last]"
std::string behavior_label(const std::string& prefix,
                           const std::vector<std::uint64_t>& seqs);

}  // namespace repcrash
