#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "repcrash/behavior_posix.hpp"
#include "repcrash/error.hpp"
#include "test_support.hpp"

namespace repcrash {
namespace {

using testing::TraceBuilder;
using Seqs = std::vector<std::uint64_t>;

std::map<std::string, Seqs> by_id(const std::vector<UpdateBehavior>& bs) {
  std::map<std::string, Seqs> out;
  for (const auto& b : bs) out[b.id] = b.node_seqs;
  return out;
}

PersistenceGraph graph_of(const Trace& t) { return build_graph(t, model_edges(t, {})); }

TEST(Lcp, MatchingAndDivergingFrames) {
  Backtrace a = {{"f", "x.cc", 1}, {"g", "x.cc", 5}, {"h", "x.cc", 9}};
  Backtrace b = {{"f", "x.cc", 1}, {"g", "x.cc", 6}, {"h", "x.cc", 9}};
  Backtrace lcp = longest_common_prefix(a, b);
  ASSERT_EQ(lcp.size(), 2u);
  EXPECT_EQ(lcp[1].line, 5u);
  EXPECT_EQ(longest_common_prefix(a, a), a);
  Backtrace c = {{"f", "x.cc", 1}, {"k", "x.cc", 5}};
  EXPECT_EQ(longest_common_prefix(a, c).size(), 1u);
  EXPECT_TRUE(longest_common_prefix({{"q", "y.cc", 1}}, a).empty());
  EXPECT_TRUE(longest_common_prefix({}, a).empty());
  EXPECT_EQ(function_path(a), "f/g/h");
  EXPECT_EQ(function_path({}), "");
}

TEST(LeafBehaviors, NestedSyncLeafBehaviors) {
  const Trace t = testing::load_corpus("nested_sync.dsl");
  const PersistenceGraph g = graph_of(t);
  FunctionMap fm = derive_function_subgraphs(g, t);
  std::map<std::string, std::vector<Seqs>> got;
  for (const auto& [k, bs] : fm) {
    for (const auto& b : bs) got[to_string(k)].push_back(b.node_seqs);
  }
  std::map<std::string, std::vector<Seqs>> want = {
      {"t0:Fn1/Fn2", {{1, 2}}},
      {"t0:Fn1/Fn3/Fn4", {{3, 4}}},
      {"t0:Fn1/Fn3/Fn5", {{5, 6, 7}}},
  };
  EXPECT_EQ(got, want);
}

TEST(PosixBehaviors, NestedSyncMerged) {
  const Trace t = testing::load_corpus("nested_sync.dsl");
  const PersistenceGraph g = graph_of(t);
  std::map<std::string, Seqs> want = {
      {"t0:Fn1/Fn2[1-2]", {1, 2}},
      {"t0:Fn1/Fn3/Fn4[3-4]", {3, 4}},
      {"t0:Fn1/Fn3/Fn5[5-7]", {5, 6, 7}},
      {"t0:Fn1/Fn3[3-7]", {3, 4, 5, 6, 7}},
      {"t0:Fn1[1-7]", {1, 2, 3, 4, 5, 6, 7}},
  };
  const auto bs = posix_behaviors(g, t);
  EXPECT_EQ(by_id(bs), want);
  for (const auto& b : bs) {
    EXPECT_EQ(b.subgraph.seqs(), b.node_seqs);
    EXPECT_EQ(b.subgraph.edges(), induced_edges(g, b.node_seqs));
  }
}

TEST(PosixBehaviors, DuplicateMergeStillFeedsParent) {
  // SetCurrentFile only repeats WriteToNewFile's set; its ops must still
  // reach DBImpl_Open.
  const Trace t = testing::load_corpus("current_rename_buggy.dsl");
  const PersistenceGraph g = graph_of(t);
  const std::map<std::string, Seqs> want = {
      {"t0:DBImpl_Open/WriteManifest[1-2]", {1, 2}},
      {"t0:DBImpl_Open/SetCurrentFile/WriteToNewFile[3-4]", {3, 4}},
      {"t0:DBImpl_Open[5-5]", {5}},
      {"t0:DBImpl_Open/RecordExpectedState[6-7]", {6, 7}},
      {"t0:DBImpl_Open[1-7]", {1, 2, 3, 4, 5, 6, 7}},
  };
  EXPECT_EQ(by_id(posix_behaviors(g, t)), want);
}

TEST(PosixBehaviors, KvstorePuts) {
  const Trace t = testing::load_corpus("kvstore_puts.trace");
  const auto bs = posix_behaviors(graph_of(t), t);
  std::map<std::string, Seqs> want = {
      {"t0:Fn1/Fn3[1-4]", {1, 2, 3, 4}},
      {"t0:Fn1/Fn2[5-6]", {5, 6}},
      {"t0:Fn1/Fn3[7-9]", {7, 8, 9}},
      {"t0:Fn1[1-9]", {1, 2, 3, 4, 5, 6, 7, 8, 9}},
  };
  EXPECT_EQ(by_id(bs), want);
}

TEST(LeafBehaviors, TrailingSingletonAndRootOps) {
  Trace t = TraceBuilder(Mode::kPosix)
                .at({{"a", "m.cc", 1}, {"x", "m.cc", 10}}).write("f", "1")
                .at({{"a", "m.cc", 1}, {"x", "m.cc", 11}}).write("g", "2")
                .at({{"b", "m.cc", 20}}).write("h", "3")
                .build();
  const PersistenceGraph g = graph_of(t);
  FunctionMap fm = derive_function_subgraphs(g, t);
  ASSERT_EQ(fm.size(), 2u);
  EXPECT_EQ(fm.at({0, "a/x"}).at(0).node_seqs, (Seqs{1, 2}));
  EXPECT_EQ(fm.at({0, "b"}).at(0).node_seqs, (Seqs{3}));
  EXPECT_EQ(fm.at({0, "b"}).at(0).id, "t0:b[3-3]");
}

TEST(LeafBehaviors, UnrelatedPairGoesToRoot) {
  Trace t = TraceBuilder(Mode::kPosix)
                .at({{"a", "m.cc", 1}}).write("f", "1")
                .at({{"b", "m.cc", 2}}).write("g", "2")
                .build();
  FunctionMap fm = derive_function_subgraphs(graph_of(t), t);
  ASSERT_EQ(fm.size(), 1u);
  EXPECT_EQ(fm.begin()->first.path, "");
  EXPECT_EQ(fm.begin()->second.at(0).id, "t0:<root>[1-2]");
}

TEST(LeafBehaviors, ThreadsAreSeparate) {
  Trace t = TraceBuilder(Mode::kPosix)
                .at({{"w", "m.cc", 1}})
                .tid(0).write("a", "1")
                .tid(1).write("b", "1")
                .tid(0).write("c", "1")
                .tid(1).write("d", "1")
                .build();
  const PersistenceGraph g = graph_of(t);
  const auto bs = posix_behaviors(g, t);
  std::map<std::string, Seqs> want = {{"t0:w[1-3]", {1, 3}}, {"t1:w[2-4]", {2, 4}}};
  EXPECT_EQ(by_id(bs), want);
  CallStackTree tree = CallStackTree::build(g, derive_function_subgraphs(g, t));
  EXPECT_EQ(tree.roots().size(), 2u);
  EXPECT_EQ(tree.at({1, ""}).children, (std::vector<FunctionKey>{{1, "w"}}));
  EXPECT_THROW(tree.at({5, "zz"}), Error);
}

TEST(CallStackTree, NestedSyncShape) {
  const Trace t = testing::load_corpus("nested_sync.dsl");
  const PersistenceGraph g = graph_of(t);
  CallStackTree tree = CallStackTree::build(g, derive_function_subgraphs(g, t));
  EXPECT_EQ(tree.roots(), (std::vector<FunctionKey>{{0, ""}}));
  EXPECT_EQ(tree.at({0, "Fn1"}).children,
            (std::vector<FunctionKey>{{0, "Fn1/Fn2"}, {0, "Fn1/Fn3"}}));
  EXPECT_EQ(tree.at({0, "Fn1/Fn3"}).children,
            (std::vector<FunctionKey>{{0, "Fn1/Fn3/Fn4"}, {0, "Fn1/Fn3/Fn5"}}));
  EXPECT_EQ(tree.at({0, "Fn1/Fn2"}).behavior_ids, (std::vector<std::string>{"t0:Fn1/Fn2[1-2]"}));
}

// Reference 1-D DBSCAN. Clusters are numbered by their smallest core point;
// a border point joins the earliest-numbered cluster it touches.
std::vector<Seqs> reference_dbscan(const Seqs& pts, std::uint64_t eps, std::size_t min_pts) {
  const std::size_t n = pts.size();
  auto near = [&](std::size_t i, std::size_t j) {
    return (pts[i] > pts[j] ? pts[i] - pts[j] : pts[j] - pts[i]) <= eps;
  };
  std::vector<bool> core(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t c = 0;
    for (std::size_t j = 0; j < n; ++j) c += near(i, j);
    core[i] = c >= min_pts;
  }
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
    return parent[x] == x ? x : parent[x] = find(parent[x]);
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (core[i] && core[j] && near(i, j)) parent[find(i)] = find(j);
    }
  }
  std::map<std::size_t, std::size_t> min_of;  // root -> smallest member index
  for (std::size_t i = 0; i < n; ++i) {
    if (!core[i]) continue;
    auto r = find(i);
    if (!min_of.count(r) || i < min_of[r]) min_of[r] = i;
  }
  std::map<std::size_t, Seqs> groups;  // keyed by smallest core index
  std::vector<Seqs> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (core[i]) {
      groups[min_of[find(i)]].push_back(pts[i]);
      continue;
    }
    std::optional<std::size_t> best;
    for (std::size_t j = 0; j < n; ++j) {
      if (core[j] && near(i, j)) {
        std::size_t m = min_of[find(j)];
        if (!best || m < *best) best = m;
      }
    }
    if (best) {
      groups[*best].push_back(pts[i]);
    } else {
      out.push_back({pts[i]});
    }
  }
  for (auto& [k, v] : groups) {
    std::sort(v.begin(), v.end());
    out.push_back(v);
  }
  std::sort(out.begin(), out.end());
  return out;
}

Trace many_writes(std::size_t n) {
  TraceBuilder b(Mode::kPosix);
  for (std::size_t i = 0; i < n; ++i) b.write("f" + std::to_string(i), "x");
  return b.build();
}

TEST(Dbscan, HandExamples) {
  const Trace t = many_writes(40);
  const PersistenceGraph g = graph_of(t);
  auto run = [&](const Seqs& s, std::uint64_t eps, std::size_t mp) {
    std::vector<Seqs> out;
    for (const auto& b : cluster_temporal(make_behavior("x", "f", 0, s, g), eps, mp)) {
      out.push_back(b.node_seqs);
    }
    return out;
  };
  EXPECT_EQ(run({1, 2, 3, 20, 21, 30}, 5, 1), (std::vector<Seqs>{{1, 2, 3}, {20, 21}, {30}}));
  EXPECT_EQ(run({1, 2, 3, 20, 21, 30}, 1, 3), (std::vector<Seqs>{{1, 2, 3}, {20}, {21}, {30}}));
  EXPECT_EQ(run({1, 11}, 10, 1), (std::vector<Seqs>{{1, 11}}));
  EXPECT_EQ(run({1, 12}, 10, 1), (std::vector<Seqs>{{1}, {12}}));
  EXPECT_EQ(run({5}, 1, 4), (std::vector<Seqs>{{5}}));
}

TEST(Dbscan, MatchesReferenceOnRandomSets) {
  const Trace t = many_writes(60);
  const PersistenceGraph g = graph_of(t);
  std::mt19937_64 rng(21);
  for (int iter = 0; iter < 500; ++iter) {
    std::set<std::uint64_t> s;
    const int n = std::uniform_int_distribution<int>(1, 15)(rng);
    while (static_cast<int>(s.size()) < n) {
      s.insert(std::uniform_int_distribution<std::uint64_t>(1, 60)(rng));
    }
    Seqs pts(s.begin(), s.end());
    const std::uint64_t eps = std::uniform_int_distribution<std::uint64_t>(1, 8)(rng);
    const std::size_t mp = std::uniform_int_distribution<std::size_t>(1, 4)(rng);
    std::vector<Seqs> got;
    for (const auto& b : cluster_temporal(make_behavior("x", "f", 0, pts, g), eps, mp)) {
      got.push_back(b.node_seqs);
    }
    std::sort(got.begin(), got.end());
    EXPECT_EQ(got, reference_dbscan(pts, eps, mp)) << "eps " << eps << " min_pts " << mp;
  }
}

TEST(MergeUpTree, DistantChildrenSplitIntoClusters) {
  TraceBuilder b(Mode::kPosix);
  b.at({{"top", "m.cc", 1}, {"early", "m.cc", 2}}).write("a", "1").write("b", "1");
  b.at({{"filler", "m.cc", 9}});
  for (int i = 0; i < 20; ++i) b.write("z" + std::to_string(i), "x");
  b.at({{"top", "m.cc", 3}, {"late", "m.cc", 4}}).write("c", "1").write("d", "1");
  const Trace t = b.build();
  const auto ids = by_id(posix_behaviors(graph_of(t), t));
  EXPECT_TRUE(ids.count("t0:top/early[1-2]"));
  EXPECT_TRUE(ids.count("t0:top/late[23-24]"));
  // 21 seqs apart with eps 10: the parent merge yields nothing new.
  for (const auto& [id, seqs] : ids) EXPECT_NE(id.rfind("t0:top[", 0), 0u) << id;
  ClusterParams wide{30, 1};
  const auto merged = by_id(posix_behaviors(graph_of(t), t, wide));
  EXPECT_EQ(merged.at("t0:top[1-24]"), (Seqs{1, 2, 23, 24}));
}

TEST(PosixBehaviors, RejectsZeroParameters) {
  const Trace t = testing::load_corpus("nested_sync.dsl");
  EXPECT_THROW(posix_behaviors(graph_of(t), t, {0, 1}), ConfigError);
  EXPECT_THROW(posix_behaviors(graph_of(t), t, {5, 0}), ConfigError);
}

TEST(PosixBehaviors, EmptyGraph) {
  Trace t;
  EXPECT_TRUE(posix_behaviors(graph_of(t), t).empty());
}

TEST(PosixBehaviors, CoverAllNodesWithUniqueIds) {
  std::mt19937_64 rng(5);
  for (int iter = 0; iter < 200; ++iter) {
    const Trace t = testing::random_posix_trace(rng, 10);
    const PersistenceGraph g = graph_of(t);
    const auto bs = posix_behaviors(g, t);
    std::set<std::string> ids;
    std::set<std::uint64_t> covered;
    std::set<std::pair<std::uint32_t, Seqs>> sets;
    for (const auto& b : bs) {
      EXPECT_TRUE(ids.insert(b.id).second) << b.id;
      EXPECT_TRUE(sets.insert({b.tid, b.node_seqs}).second) << b.id;
      EXPECT_TRUE(std::is_sorted(b.node_seqs.begin(), b.node_seqs.end()));
      EXPECT_FALSE(b.node_seqs.empty());
      for (auto s : b.node_seqs) {
        covered.insert(s);
        EXPECT_EQ(g.node(s).tid, b.tid);
      }
    }
    const auto all = g.seqs();
    EXPECT_EQ(covered, std::set<std::uint64_t>(all.begin(), all.end()));

    // Every temporal cluster of the leaf behaviors below a function shows up
    // as a behavior, whether attached there or deduplicated against a
    // descendant.
    using Key = std::pair<std::uint32_t, std::string>;
    std::set<Key> inner;
    auto mark_ancestors = [&](std::uint32_t tid, const std::string& path) {
      for (auto p = path.rfind('/'); p != std::string::npos && p > 0;
           p = path.rfind('/', p - 1)) {
        inner.insert({tid, path.substr(0, p)});
      }
    };
    for (const auto& op : g.nodes()) mark_ancestors(op.tid, function_path(op.backtrace));
    const FunctionMap leaves = derive_function_subgraphs(g, t);
    for (const auto& [k, lb] : leaves) mark_ancestors(k.tid, k.path);
    for (const auto& [tid, key] : inner) {
      Seqs covered;
      for (const auto& [k, lb] : leaves) {
        if (k.tid != tid || (k.path != key && k.path.rfind(key + "/", 0) != 0)) continue;
        for (const auto& b : lb) covered.insert(covered.end(), b.node_seqs.begin(), b.node_seqs.end());
      }
      if (covered.empty()) continue;
      const UpdateBehavior all = make_behavior("", key, tid, covered, g);
      for (const auto& piece : cluster_temporal(all, 10, 1)) {
        EXPECT_TRUE(sets.count({tid, piece.node_seqs}))
            << key << " lost a cluster starting at " << piece.node_seqs.front();
      }
    }
  }
}

}  // namespace
}  // namespace repcrash
