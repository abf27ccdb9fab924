#pragma once

#include <compare>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "repcrash/payload.hpp"

namespace repcrash {

enum class Mode { kPosix, kMmio };

enum class OpKind {
  // POSIX
  kWrite,
  kPwrite,
  kRename,
  kUnlink,
  kCreate,
  kFsync,
  kFdatasync,
  kSync,
  kOpen,
  kClose,
  kMkdir,
  // MMIO
  kStore,
  kFlush,
  kFence,
  kMsync,
};

std::string_view to_string(Mode mode);
std::optional<Mode> parse_mode(std::string_view text);
std::string_view to_string(OpKind kind);
// Throws UnknownOperationKind.
OpKind parse_kind(std::string_view text);
Mode mode_of(OpKind kind);

// Operations that change durable contents (graph nodes that replay applies).
bool is_update(OpKind kind);
// fsync/fdatasync/sync and flush/fence/msync: graph nodes, no-ops at replay.
bool is_ordering(OpKind kind);
// open/close are recorded but never become graph nodes.
inline bool is_graph_node(OpKind kind) {
  return kind != OpKind::kOpen && kind != OpKind::kClose;
}

struct Frame {
  std::string function;
  std::string file;
  std::uint32_t line = 0;

  auto operator<=>(const Frame&) const = default;
};

// Outermost frame first.
using Backtrace = std::vector<Frame>;

struct Annotation {
  std::string type_name;
  std::string instance_id;
  std::string field_name;

  auto operator<=>(const Annotation&) const = default;
};

// Kind-specific arguments. Fields that do not apply to a kind stay at their
// defaults and are not serialized.
struct OpArgs {
  std::string path;    // POSIX subject path
  std::string target;  // rename destination
  std::uint64_t offset = 0;
  std::uint64_t length = 0;
  bool directory = false;  // fsync issued on a directory handle
  std::uint64_t addr = 0;  // MMIO
  std::uint64_t cache_line = 0;
  std::optional<Payload> payload;

  bool operator==(const OpArgs&) const = default;
};

struct Operation {
  std::uint64_t seq = 0;
  std::uint32_t tid = 0;
  OpKind kind = OpKind::kWrite;
  OpArgs args;
  Backtrace backtrace;
  std::optional<Annotation> annotation;

  bool operator==(const Operation&) const = default;
};

struct TraceMeta {
  std::string app_name;
  Mode mode = Mode::kPosix;

  bool operator==(const TraceMeta&) const = default;
};

struct Trace {
  TraceMeta meta;
  std::vector<Operation> ops;  // strictly increasing seq

  // nullptr when absent.
  const Operation* find(std::uint64_t seq) const;
  bool operator==(const Trace&) const = default;
};

Trace parse_trace(std::istream& in);
Trace parse_trace(std::string_view text);
std::string serialize_trace(const Trace& trace);

std::map<std::uint32_t, std::vector<Operation>> split_by_thread(
    const Trace& trace);

// "fn@file:line" for diagnostics and reports.
std::string format_frame(const Frame& frame);

}  // namespace repcrash
