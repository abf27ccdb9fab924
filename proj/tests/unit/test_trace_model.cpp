#include <gtest/gtest.h>

#include <random>

#include "repcrash/error.hpp"
#include "repcrash/payload.hpp"
#include "repcrash/trace.hpp"
#include "repcrash/workload_dsl.hpp"
#include "test_support.hpp"

namespace repcrash {
namespace {

using testing::TraceBuilder;

TEST(Payload, Fnv1aKnownVectors) {
  EXPECT_EQ(payload_digest({}), "cbf29ce484222325");
  EXPECT_EQ(payload_digest({'a'}), "af63dc4c8601ec8c");
  EXPECT_EQ(payload_digest({'f', 'o', 'o', 'b', 'a', 'r'}), "85944171f73967e8");
}

TEST(Payload, HexRoundTrip) {
  Bytes b{0x00, 0x7f, 0xff, 0x10};
  EXPECT_EQ(to_hex(b), "007fff10");
  EXPECT_EQ(from_hex("007FFF10"), b);
  EXPECT_FALSE(from_hex("abc").has_value());
  EXPECT_FALSE(from_hex("zz").has_value());
}

TEST(Payload, MaterializeUsesInlineBytesOrPattern) {
  Payload p = Payload::from_bytes({1, 2, 3});
  EXPECT_EQ(p.materialize(3), (Bytes{1, 2, 3}));
  Payload digest_only{p.digest, std::nullopt};
  Bytes a = digest_only.materialize(16);
  EXPECT_EQ(a.size(), 16u);
  EXPECT_EQ(a, digest_only.materialize(16));
}

TEST(Payload, LargePayloadKeepsDigestOnly) {
  Payload p = Payload::from_bytes(Bytes(kMaxInlinePayload + 1, 7));
  EXPECT_FALSE(p.data.has_value());
  EXPECT_EQ(p.digest, payload_digest(Bytes(kMaxInlinePayload + 1, 7)));
}

TEST(Trace, SerializeParseRoundTripPosix) {
  Trace t = TraceBuilder(Mode::kPosix)
                .write("f1", "hello", 4)
                .create("f2")
                .rename("f2", "f3")
                .fsync(".", true)
                .fdatasync("f1")
                .open("f1")
                .close("f1")
                .mkdir("d")
                .unlink("f3")
                .sync()
                .build();
  t.ops[1].tid = 3;
  EXPECT_EQ(parse_trace(serialize_trace(t)), t);
}

TEST(Trace, SerializeParseRoundTripMmio) {
  Trace t = TraceBuilder(Mode::kMmio)
                .store(0x1000, "abcdefgh", "Node", "n1", "key")
                .store(0x1040, "x")
                .flush(0x1000, 128)
                .fence()
                .msync(0x1000, 4096)
                .build();
  EXPECT_EQ(parse_trace(serialize_trace(t)), t);
}

TEST(Trace, RoundTripRandom) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 50; ++i) {
    Trace p = testing::random_posix_trace(rng, 8);
    EXPECT_EQ(parse_trace(serialize_trace(p)), p);
    Trace m = testing::random_mmio_trace(rng, 8);
    EXPECT_EQ(parse_trace(serialize_trace(m)), m);
  }
}

TEST(Trace, EmptyTraceHasOnlyHeader) {
  Trace t = parse_trace(std::string_view(R"({"app":"x","mode":"MMIO","version":1})"));
  EXPECT_EQ(t.meta.app_name, "x");
  EXPECT_EQ(t.meta.mode, Mode::kMmio);
  EXPECT_TRUE(t.ops.empty());
}

constexpr const char* kHeader = R"({"app":"x","mode":"POSIX","version":1})";

std::string op_line(std::uint64_t seq, const std::string& kind,
                    const std::string& args = R"({"path":"f"})") {
  return R"({"seq":)" + std::to_string(seq) + R"(,"tid":0,"kind":")" + kind +
         R"(","args":)" + args +
         R"(,"backtrace":[{"function_name":"m","file":"a.cc","line":1}],"annotation":null})";
}

TEST(Trace, RejectsUnknownKind) {
  std::string text = std::string(kHeader) + "\n" + op_line(1, "truncate") + "\n";
  try {
    parse_trace(text);
    FAIL();
  } catch (const UnknownOperationKind& e) {
    EXPECT_EQ(e.kind(), "truncate");
  }
}

TEST(Trace, RejectsNonIncreasingSeq) {
  std::string text = std::string(kHeader) + "\n" + op_line(2, "sync", "{}") + "\n" +
                     op_line(2, "sync", "{}") + "\n";
  EXPECT_THROW(parse_trace(text), SequenceOrderError);
}

TEST(Trace, MalformedRecordsReportLine) {
  std::string text = std::string(kHeader) + "\n" + op_line(1, "sync", "{}") + "\n{oops\n";
  try {
    parse_trace(text);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  EXPECT_THROW(parse_trace(std::string(kHeader) + "\n" + op_line(1, "fsync", "{}")),
               ParseError);
  EXPECT_THROW(parse_trace(std::string(kHeader) + "\n" + op_line(1, "store", "{}")),
               ParseError);
  EXPECT_THROW(parse_trace(std::string(R"({"app":"x","mode":"DISK","version":1})")),
               ParseError);
  EXPECT_THROW(parse_trace(std::string(R"({"app":"x","mode":"POSIX","version":2})")),
               ParseError);
}

TEST(Trace, RejectsInlineDataMismatch) {
  std::string args = R"({"path":"f","offset":0,"length":2,"digest":"0000000000000000","data":"6162"})";
  EXPECT_THROW(parse_trace(std::string(kHeader) + "\n" + op_line(1, "write", args)),
               ParseError);
}

TEST(Trace, FindAndSplitByThread) {
  Trace t = TraceBuilder(Mode::kPosix)
                .tid(0).write("a", "1")
                .tid(1).write("b", "2")
                .tid(0).sync()
                .build();
  ASSERT_NE(t.find(2), nullptr);
  EXPECT_EQ(t.find(2)->args.path, "b");
  EXPECT_EQ(t.find(9), nullptr);
  auto by = split_by_thread(t);
  ASSERT_EQ(by.size(), 2u);
  EXPECT_EQ(by[0].size(), 2u);
  EXPECT_EQ(by[1].size(), 1u);
}

TEST(Trace, KindClassification) {
  EXPECT_TRUE(is_update(OpKind::kRename));
  EXPECT_TRUE(is_update(OpKind::kStore));
  EXPECT_FALSE(is_update(OpKind::kFsync));
  EXPECT_TRUE(is_ordering(OpKind::kFence));
  EXPECT_FALSE(is_graph_node(OpKind::kOpen));
  EXPECT_FALSE(is_graph_node(OpKind::kClose));
  EXPECT_EQ(mode_of(OpKind::kMsync), Mode::kMmio);
  EXPECT_EQ(parse_kind("fdatasync"), OpKind::kFdatasync);
  EXPECT_EQ(format_frame({"f", "a.cc", 3}), "f@a.cc:3");
}

TEST(Dsl, NestedBlocksGiveBacktraces) {
  Trace t = testing::load_corpus("nested_sync.dsl");
  ASSERT_EQ(t.ops.size(), 7u);
  EXPECT_EQ(t.ops[0].kind, OpKind::kWrite);
  EXPECT_EQ(t.ops[6].kind, OpKind::kSync);
  const Backtrace& bt = t.ops[2].backtrace;
  ASSERT_EQ(bt.size(), 3u);
  EXPECT_EQ(bt[0].function, "Fn1");
  EXPECT_EQ(bt[1].function, "Fn3");
  EXPECT_EQ(bt[2].function, "Fn4");
  EXPECT_EQ(bt[0].file, "nested_sync.dsl");
  // Outer frames sit at the nested block header; the innermost at the statement.
  EXPECT_EQ(bt[0].line, 7u);
  EXPECT_EQ(bt[1].line, 8u);
  EXPECT_EQ(bt[2].line, 9u);
  EXPECT_EQ(t.ops[1].backtrace.back().line, 5u);
}

TEST(Dsl, StatementsAndEscapes) {
  Trace t = synth_workload(
      "fn m { write f \"a\\x01\\n\" @8; pwrite f \"z\" @ 0; fsyncdir .\n"
      "rename f g; create h; mkdir d; unlink g; sync }",
      Mode::kPosix);
  ASSERT_EQ(t.ops.size(), 8u);
  EXPECT_EQ(t.ops[0].args.length, 3u);
  EXPECT_EQ(t.ops[0].args.offset, 8u);
  EXPECT_EQ(*t.ops[0].args.payload->data, (Bytes{'a', 1, '\n'}));
  EXPECT_EQ(t.ops[1].kind, OpKind::kPwrite);
  EXPECT_TRUE(t.ops[2].args.directory);
  EXPECT_EQ(t.ops[3].args.target, "g");
}

TEST(Dsl, StoreAnnotations) {
  Trace t = testing::load_corpus("mmio_epochs.dsl");
  ASSERT_FALSE(t.ops.empty());
  ASSERT_TRUE(t.ops[0].annotation.has_value());
  EXPECT_EQ(t.ops[0].annotation->type_name, "M");
  EXPECT_EQ(t.ops[0].annotation->instance_id, "m0");
  EXPECT_EQ(t.ops[0].annotation->field_name, "a");
  EXPECT_EQ(t.ops[0].args.addr, 0x100u);
}

TEST(Dsl, Errors) {
  auto col_of = [](const char* src, Mode m) -> std::pair<std::size_t, std::size_t> {
    try {
      synth_workload(src, m);
    } catch (const DslError& e) {
      return {e.line(), e.column()};
    }
    return {0, 0};
  };
  EXPECT_EQ(col_of("write f \"a\" @0", Mode::kPosix).first, 1u);
  EXPECT_EQ(col_of("fn m {\n  frobnicate x\n}", Mode::kPosix).first, 2u);
  EXPECT_EQ(col_of("fn m { fence }", Mode::kPosix).first, 1u);
  EXPECT_EQ(col_of("fn m { write f \"a\" }", Mode::kPosix).first, 1u);
  EXPECT_EQ(col_of("fn m { store M.a @0 2 \"x\" }", Mode::kMmio).first, 1u);
  EXPECT_EQ(col_of("fn m { write f \"a @0 }", Mode::kPosix).first, 1u);
  EXPECT_EQ(col_of("fn m {\n write f \"a\" @0\n", Mode::kPosix).first, 3u);
  EXPECT_EQ(col_of("fn m { store M.i.f @0x10 1 \"x\" }", Mode::kMmio).first, 0u);
}

TEST(Dsl, RejectsModeMismatchedStatements) {
  EXPECT_THROW(synth_workload("fn m { store M.i.f @0 1 \"x\" }", Mode::kPosix), DslError);
}

}  // namespace
}  // namespace repcrash
