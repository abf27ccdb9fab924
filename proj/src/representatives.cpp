#include "repcrash/representatives.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <json.hpp>

namespace repcrash {

namespace {

using KeyPair = std::pair<const StaticKey*, const StaticKey*>;

struct KeyPairLess {
  bool operator()(const KeyPair& a, const KeyPair& b) const {
    if (*a.first != *b.first) return *a.first < *b.first;
    return *a.second < *b.second;
  }
};

struct KeyPtrLess {
  bool operator()(const StaticKey* a, const StaticKey* b) const { return *a < *b; }
};

std::set<const StaticKey*, KeyPtrLess> key_set(
    const PersistenceGraph& g, const std::vector<std::uint64_t>& seqs) {
  std::set<const StaticKey*, KeyPtrLess> out;
  for (std::uint64_t s : seqs) out.insert(&g.key(s));
  return out;
}

}  // namespace

bool node_equiv(const StaticKey& a, const StaticKey& b) { return a == b; }

bool node_equiv(const Operation& a, const Operation& b, StaticKeyMode mode) {
  return static_key(a, mode) == static_key(b, mode);
}

bool edge_equiv(const PersistenceGraph& ga, const HbEdge& a,
                const PersistenceGraph& gb, const HbEdge& b) {
  return node_equiv(ga.key(a.src_seq), gb.key(b.src_seq)) &&
         node_equiv(ga.key(a.dst_seq), gb.key(b.dst_seq));
}

bool subset_equiv_nodes(const PersistenceGraph& g2,
                        const std::vector<std::uint64_t>& n2,
                        const PersistenceGraph& g1,
                        const std::vector<std::uint64_t>& n1) {
  const auto keys1 = key_set(g1, n1);
  return std::all_of(n2.begin(), n2.end(), [&](std::uint64_t s) {
    return keys1.count(&g2.key(s)) > 0;
  });
}

std::vector<std::uint64_t> equivalence_image(
    const PersistenceGraph& g1, const std::vector<std::uint64_t>& n1,
    const PersistenceGraph& g2, const std::vector<std::uint64_t>& n2) {
  const auto keys2 = key_set(g2, n2);
  std::vector<std::uint64_t> out;
  for (std::uint64_t s : n1) {
    if (keys2.count(&g1.key(s))) out.push_back(s);
  }
  return out;
}

bool subset_equiv_edges(const PersistenceGraph& g1, const EdgeSet& e1,
                        const PersistenceGraph& g2, const EdgeSet& e2) {
  std::set<KeyPair, KeyPairLess> pairs2;
  for (const auto& e : e2) pairs2.insert({&g2.key(e.src_seq), &g2.key(e.dst_seq)});
  return std::all_of(e1.begin(), e1.end(), [&](const HbEdge& e) {
    return pairs2.count({&g1.key(e.src_seq), &g1.key(e.dst_seq)}) > 0;
  });
}

bool represents(const UpdateBehavior& u1, const UpdateBehavior& u2) {
  const PersistenceGraph& g1 = u1.subgraph;
  const PersistenceGraph& g2 = u2.subgraph;
  if (!subset_equiv_nodes(g2, u2.node_seqs, g1, u1.node_seqs)) return false;
  const auto image = equivalence_image(g1, u1.node_seqs, g2, u2.node_seqs);
  return subset_equiv_edges(g1, induced_edges(g1, image), g2, g2.edges());
}

std::vector<BehaviorGroup> group_behaviors(
    const std::vector<UpdateBehavior>& behaviors) {
  std::vector<const UpdateBehavior*> order;
  for (const auto& b : behaviors) order.push_back(&b);
  std::stable_sort(order.begin(), order.end(),
                   [](const UpdateBehavior* a, const UpdateBehavior* b) {
                     if (a->node_seqs.size() != b->node_seqs.size()) {
                       return a->node_seqs.size() > b->node_seqs.size();
                     }
                     if (a->node_seqs.front() != b->node_seqs.front()) {
                       return a->node_seqs.front() < b->node_seqs.front();
                     }
                     return a->id < b->id;
                   });

  std::vector<BehaviorGroup> groups;
  std::vector<const UpdateBehavior*> reps;
  for (const UpdateBehavior* b : order) {
    bool joined = false;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      if (represents(*reps[g], *b)) {
        if (reps[g] != b) groups[g].members.push_back(b->id);
        joined = true;
      }
    }
    if (!joined) {
      groups.push_back({b->id, {b->id}});
      reps.push_back(b);
    }
  }
  return groups;
}

std::string groups_json(const std::vector<BehaviorGroup>& groups,
                        const std::vector<UpdateBehavior>& behaviors) {
  std::map<std::string, std::size_t> sizes;
  for (const auto& b : behaviors) sizes[b.id] = b.node_seqs.size();
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < groups.size(); ++i) {
    nlohmann::ordered_json g;
    g["group"] = i;
    g["representative"] = groups[i].representative;
    g["members"] = groups[i].members;
    nlohmann::ordered_json counts = nlohmann::ordered_json::object();
    for (const auto& m : groups[i].members) counts[m] = sizes[m];
    g["node_counts"] = std::move(counts);
    out.push_back(std::move(g));
  }
  return out.dump(2) + "\n";
}

}  // namespace repcrash
