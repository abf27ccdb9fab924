#include "repcrash/pipeline.hpp"

#include "repcrash/behavior_mmio.hpp"

namespace repcrash {

Analysis analyze(Trace trace, const AnalysisOptions& options) {
  Analysis a;
  a.trace = std::move(trace);
  a.graph = build_graph(a.trace, model_edges(a.trace, options.model),
                        options.static_key);
  if (a.trace.meta.mode == Mode::kPosix) {
    a.behaviors = posix_behaviors(a.graph, a.trace, options.cluster);
  } else {
    a.behaviors = mmio_behaviors(a.graph, a.trace, options.model);
  }
  a.groups = group_behaviors(a.behaviors);
  return a;
}

}  // namespace repcrash
