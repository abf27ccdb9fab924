#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "repcrash/behavior.hpp"

namespace repcrash {

struct BehaviorGroup {
  std::string representative;
  std::vector<std::string> members;  // includes the representative
};

bool node_equiv(const StaticKey& a, const StaticKey& b);
bool node_equiv(const Operation& a, const Operation& b,
                StaticKeyMode mode = StaticKeyMode::kFullStack);
bool edge_equiv(const PersistenceGraph& ga, const HbEdge& a,
                const PersistenceGraph& gb, const HbEdge& b);

// N2 ⊆~ N1: every node of n2 has an equivalent in n1.
bool subset_equiv_nodes(const PersistenceGraph& g2,
                        const std::vector<std::uint64_t>& n2,
                        const PersistenceGraph& g1,
                        const std::vector<std::uint64_t>& n1);
// {n ∈ N1 | some a ∈ N2 with n ~ a}
std::vector<std::uint64_t> equivalence_image(
    const PersistenceGraph& g1, const std::vector<std::uint64_t>& n1,
    const PersistenceGraph& g2, const std::vector<std::uint64_t>& n2);
// E1 ⊆~ E2: every edge of e1 has an equivalent in e2.
bool subset_equiv_edges(const PersistenceGraph& g1, const EdgeSet& e1,
                        const PersistenceGraph& g2, const EdgeSet& e2);

bool represents(const UpdateBehavior& u1, const UpdateBehavior& u2);

// Largest first (ties: first seq, then id). A behavior joins every group
// whose representative represents it, otherwise founds its own group.
std::vector<BehaviorGroup> group_behaviors(
    const std::vector<UpdateBehavior>& behaviors);

// [{"group":0,"representative":id,"members":[...],"node_counts":{id:n}}]
std::string groups_json(const std::vector<BehaviorGroup>& groups,
                        const std::vector<UpdateBehavior>& behaviors);

}  // namespace repcrash
