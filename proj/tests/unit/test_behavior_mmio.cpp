#include <gtest/gtest.h>

#include <random>

#include "repcrash/behavior_mmio.hpp"
#include "test_support.hpp"

namespace repcrash {
namespace {

using testing::TraceBuilder;
using Seqs = std::vector<std::uint64_t>;

PersistenceGraph graph_of(const Trace& t) { return build_graph(t, model_edges(t, {})); }

const InstanceSubgraph& instance(const std::vector<InstanceSubgraph>& v,
                                 const std::string& id) {
  for (const auto& i : v) {
    if (i.instance_id == id) return i;
  }
  throw std::runtime_error("no instance " + id);
}

TEST(TypeSubgraphs, MmioEpochs) {
  const Trace t = testing::load_corpus("mmio_epochs.dsl");
  const PersistenceGraph g = graph_of(t);
  const auto types = build_type_subgraphs(g, t);
  ASSERT_EQ(types.size(), 2u);
  EXPECT_EQ(types[0].type_name, "M");
  EXPECT_EQ(types[0].subgraph.seqs(), (Seqs{1, 2, 3, 6, 11}));
  EXPECT_EQ(types[1].type_name, "N");
  EXPECT_EQ(types[1].subgraph.seqs(), (Seqs{7, 8}));
  EXPECT_FALSE(types[0].composite);
}

TEST(Epochs, MmioEpochsGolden) {
  const Trace t = testing::load_corpus("mmio_epochs.dsl");
  const PersistenceGraph g = graph_of(t);
  const auto types = build_type_subgraphs(g, t);
  const auto insts = build_instance_subgraphs(types[0]);
  ASSERT_EQ(insts.size(), 1u);
  const auto epochs = split_epochs(insts[0], g, t);
  ASSERT_EQ(epochs.size(), 3u);
  EXPECT_EQ(epochs[0].subgraph.seqs(), (Seqs{1, 2, 3}));
  EXPECT_EQ(epochs[1].subgraph.seqs(), (Seqs{6}));
  EXPECT_EQ(epochs[2].subgraph.seqs(), (Seqs{11}));
  EXPECT_EQ(epochs[0].boundary_reason, EpochBoundary::kCriterion1);
  EXPECT_EQ(epochs[1].boundary_reason, EpochBoundary::kCriterion2);
  EXPECT_EQ(epochs[2].boundary_reason, EpochBoundary::kTraceEnd);
  for (std::size_t i = 0; i < epochs.size(); ++i) EXPECT_EQ(epochs[i].epoch_index, i);

  const auto n = split_epochs(build_instance_subgraphs(types[1])[0], g, t);
  ASSERT_EQ(n.size(), 1u);
  EXPECT_EQ(n[0].subgraph.seqs(), (Seqs{7, 8}));
}

TEST(Epochs, NoPersistsMeansOneEpoch) {
  Trace t = TraceBuilder(Mode::kMmio)
                .store(0x0, "a", "T", "i", "x")
                .store(0x8, "b", "T", "i", "x")
                .store(0x100, "c", "U", "j", "y")
                .store(0x10, "d", "T", "i", "x")
                .build();
  const PersistenceGraph g = graph_of(t);
  const auto epochs = split_epochs(build_instance_subgraphs(build_type_subgraphs(g, t)[0])[0], g, t);
  ASSERT_EQ(epochs.size(), 1u);
  EXPECT_EQ(epochs[0].boundary_reason, EpochBoundary::kTraceEnd);
}

TEST(Epochs, Criterion1NeedsEveryEarlierStorePersisted) {
  Trace t = TraceBuilder(Mode::kMmio)
                .store(0x0, "a", "T", "i", "x")   // 1
                .store(0x40, "b", "T", "i", "y")  // 2
                .flush(0x0, 64)                   // 3
                .fence()                          // 4
                .store(0x8, "c", "T", "i", "x")   // 5: 2 is not persisted yet
                .flush(0x0, 128)                  // 6
                .fence()                          // 7
                .store(0x10, "d", "T", "i", "x")  // 8
                .build();
  const PersistenceGraph g = graph_of(t);
  const auto epochs = split_epochs(build_instance_subgraphs(build_type_subgraphs(g, t)[0])[0], g, t);
  ASSERT_EQ(epochs.size(), 2u);
  EXPECT_EQ(epochs[0].subgraph.seqs(), (Seqs{1, 2, 5}));
  EXPECT_EQ(epochs[0].boundary_reason, EpochBoundary::kCriterion1);
  EXPECT_EQ(epochs[1].subgraph.seqs(), (Seqs{8}));
}

TEST(Epochs, Criterion2NeedsAllOtherStoresPersisted) {
  Trace t = TraceBuilder(Mode::kMmio)
                .store(0x0, "a", "T", "i", "x")    // 1
                .store(0x100, "b", "U", "j", "y")  // 2
                .store(0x180, "c", "U", "j", "z")  // 3
                .flush(0x100, 64)                  // 4
                .fence()                           // 5: only 2 persisted
                .store(0x8, "d", "T", "i", "w")    // 6
                .flush(0x180, 64)                  // 7
                .fence()                           // 8
                .store(0x10, "e", "T", "i", "v")   // 9
                .build();
  const PersistenceGraph g = graph_of(t);
  const auto epochs = split_epochs(build_instance_subgraphs(build_type_subgraphs(g, t)[0])[0], g, t);
  ASSERT_EQ(epochs.size(), 2u);
  EXPECT_EQ(epochs[0].subgraph.seqs(), (Seqs{1, 6}));
  EXPECT_EQ(epochs[0].boundary_reason, EpochBoundary::kCriterion2);
  EXPECT_EQ(epochs[1].subgraph.seqs(), (Seqs{9}));
}

TEST(TypeSubgraphs, PseudoTypesAndInstances) {
  Trace t = TraceBuilder(Mode::kMmio)
                .store(0x1000, "a")
                .store(0x2000, "b", "Node", "n1", "k")
                .store(0x2040, "c", "Node", "n2", "k")
                .store(0x2008, "d", "Node", "n1", "v")
                .fence()
                .build();
  const PersistenceGraph g = graph_of(t);
  const auto types = build_type_subgraphs(g, t);
  ASSERT_EQ(types.size(), 2u);
  EXPECT_EQ(types[0].type_name, "addr:0x1000");
  EXPECT_EQ(store_instance(t.ops[0]), "0x1000");
  EXPECT_EQ(store_field(t.ops[3]), "v");
  const auto insts = build_instance_subgraphs(types[1]);
  ASSERT_EQ(insts.size(), 2u);
  EXPECT_EQ(instance(insts, "n1").subgraph.seqs(), (Seqs{2, 4}));
  EXPECT_EQ(instance(insts, "n2").subgraph.seqs(), (Seqs{3}));
}

TEST(TypeSubgraphs, CompositeFromDeclaredContainment) {
  Trace t = TraceBuilder(Mode::kMmio)
                .store(0x0, "a", "Tree", "t0", "root")
                .store(0x40, "b", "Tree/Node", "t0", "key")
                .store(0x80, "c", "Other", "o", "x")
                .build();
  const PersistenceGraph g = graph_of(t);
  const auto types = build_type_subgraphs(g, t);
  ASSERT_EQ(types.size(), 4u);
  EXPECT_TRUE(types[3].composite);
  EXPECT_EQ(types[3].type_name, "Tree");
  EXPECT_EQ(types[3].subgraph.seqs(), (Seqs{1, 2}));
  const auto bs = mmio_behaviors(g, t);
  // The composite's single epoch spans both inner types.
  bool found = false;
  for (const auto& b : bs) found = found || b.node_seqs == Seqs{1, 2};
  EXPECT_TRUE(found);
}

TEST(MmioBehaviors, MmioEpochsIds) {
  const Trace t = testing::load_corpus("mmio_epochs.dsl");
  const auto bs = mmio_behaviors(graph_of(t), t);
  std::vector<std::string> ids;
  for (const auto& b : bs) ids.push_back(b.id);
  EXPECT_EQ(ids, (std::vector<std::string>{"M.m0#e0[1-3]", "M.m0#e1[6-6]",
                                           "M.m0#e2[11-11]", "N.n0#e0[7-8]"}));
}

TEST(MmioProperties, PartitionsOnRandomTraces) {
  std::mt19937_64 rng(17);
  for (int iter = 0; iter < 200; ++iter) {
    const Trace t = testing::random_mmio_trace(rng, 10);
    const PersistenceGraph g = graph_of(t);
    std::multiset<std::uint64_t> typed;
    for (const auto& tsg : build_type_subgraphs(g, t)) {
      if (tsg.composite) continue;
      for (auto s : tsg.subgraph.seqs()) typed.insert(s);
      std::multiset<std::uint64_t> inst_union;
      for (const auto& isg : build_instance_subgraphs(tsg)) {
        for (auto s : isg.subgraph.seqs()) inst_union.insert(s);
        std::vector<std::uint64_t> epoch_union;
        std::uint64_t last_first = 0;
        const auto epochs = split_epochs(isg, g, t);
        for (std::size_t i = 0; i < epochs.size(); ++i) {
          const auto seqs = epochs[i].subgraph.seqs();
          ASSERT_FALSE(seqs.empty());
          EXPECT_GT(seqs.front(), last_first);
          last_first = seqs.front();
          epoch_union.insert(epoch_union.end(), seqs.begin(), seqs.end());
          EXPECT_EQ(epochs[i].boundary_reason == EpochBoundary::kTraceEnd,
                    i + 1 == epochs.size());
        }
        EXPECT_EQ(epoch_union, isg.subgraph.seqs());
      }
      const auto ts = tsg.subgraph.seqs();
      EXPECT_EQ(inst_union, std::multiset<std::uint64_t>(ts.begin(), ts.end()));
    }
    std::multiset<std::uint64_t> stores;
    for (const auto& op : t.ops) {
      if (op.kind == OpKind::kStore) stores.insert(op.seq);
    }
    EXPECT_EQ(typed, stores);
  }
}

}  // namespace
}  // namespace repcrash
