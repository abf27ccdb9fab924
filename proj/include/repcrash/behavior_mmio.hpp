#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "repcrash/behavior.hpp"
#include "repcrash/persistence_model.hpp"

namespace repcrash {

struct TypeSubgraph {
  std::string type_name;
  bool composite = false;  // spans "Outer" and every "Outer/..." type
  PersistenceGraph subgraph;
};

struct InstanceSubgraph {
  std::string type_name;
  std::string instance_id;
  PersistenceGraph subgraph;
};

enum class EpochBoundary { kCriterion1, kCriterion2, kTraceEnd };
std::string_view to_string(EpochBoundary b);

struct EpochSubgraph {
  std::string type_name;
  std::string instance_id;
  std::size_t epoch_index = 0;
  PersistenceGraph subgraph;
  // Why this epoch ended.
  EpochBoundary boundary_reason = EpochBoundary::kTraceEnd;
};

// Type of a store: its annotation's type name, or "addr:0x<hex>" when absent.
std::string store_type(const Operation& op);
std::string store_instance(const Operation& op);
std::string store_field(const Operation& op);

// One subgraph per observed type over store nodes, in first-seen order,
// followed by composite subgraphs for each "Outer" prefix declared by a
// "Outer/Inner" annotation.
std::vector<TypeSubgraph> build_type_subgraphs(const PersistenceGraph& graph,
                                               const Trace& trace);

std::vector<InstanceSubgraph> build_instance_subgraphs(const TypeSubgraph& tsg);

std::vector<EpochSubgraph> split_epochs(const InstanceSubgraph& isg,
                                        const PersistenceGraph& full_graph,
                                        const Trace& trace,
                                        const ModelConfig& cfg = {});

// Every epoch of every instance, including composite types, as behaviors.
std::vector<UpdateBehavior> mmio_behaviors(const PersistenceGraph& graph,
                                           const Trace& trace,
                                           const ModelConfig& cfg = {});

}  // namespace repcrash
