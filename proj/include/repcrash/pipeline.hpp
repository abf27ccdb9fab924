#pragma once

#include <vector>

#include "repcrash/behavior_posix.hpp"
#include "repcrash/pgraph.hpp"
#include "repcrash/representatives.hpp"

namespace repcrash {

struct AnalysisOptions {
  ModelConfig model;
  ClusterParams cluster;
  StaticKeyMode static_key = StaticKeyMode::kFullStack;
};

struct Analysis {
  Trace trace;
  PersistenceGraph graph;
  std::vector<UpdateBehavior> behaviors;
  std::vector<BehaviorGroup> groups;
};

// Edges, graph, behaviors for the trace's mode, then grouping.
Analysis analyze(Trace trace, const AnalysisOptions& options = {});

}  // namespace repcrash
