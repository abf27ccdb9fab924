#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "repcrash/trace.hpp"

namespace repcrash {

enum class EdgeReason {
  kSameBlock,
  kSyncBarrier,
  kMetadataOrder,
  kSameCacheLine,
  kFlushFence,
  kMsync,
  kCrossThreadOrder,
};

std::string_view to_string(EdgeReason reason);

// Happens-before edge between two graph nodes, always src_seq < dst_seq.
struct HbEdge {
  std::uint64_t src_seq = 0;
  std::uint64_t dst_seq = 0;
  EdgeReason reason = EdgeReason::kSameBlock;

  // Identity is the endpoint pair; the reason is descriptive.
  bool operator==(const HbEdge& o) const {
    return src_seq == o.src_seq && dst_seq == o.dst_seq;
  }
  std::strong_ordering operator<=>(const HbEdge& o) const {
    if (auto c = src_seq <=> o.src_seq; c != 0) return c;
    return dst_seq <=> o.dst_seq;
  }
};

// Sorted by (src, dst), one edge per pair.
using EdgeSet = std::vector<HbEdge>;

struct ModelConfig {
  std::uint64_t block_size = 4096;
  std::uint64_t cache_line_size = 64;
  bool split_writes_at_block_boundary = true;

  // Throws ConfigError unless both sizes are powers of two.
  void validate() const;
};

// Per-operation facts obtained by executing a POSIX trace sequentially:
// which file (inode) each path refers to at that point, which names and
// directory entries an operation changes, and which blocks it writes.
struct PosixOpInfo {
  std::uint64_t inode = 0;  // 0 when the op has no file subject
  bool is_data = false;     // write/pwrite
  bool is_metadata = false; // changes a name: create, rename, unlink, mkdir,
                            // or a write that created its path
  bool creates_name = false;
  bool extends_size = false;
  std::vector<std::string> names;        // paths whose binding changes
  std::vector<std::string> dirent_dirs;  // directories whose entries change
  std::vector<std::uint64_t> blocks;          // blocks used for conflicts
  std::vector<std::uint64_t> touched_blocks;  // every block overlapped
  enum class SyncScope { kNone, kFile, kDirectory } sync_scope = SyncScope::kNone;
};

class PosixResolution {
 public:
  // Throws ModeMismatch for MMIO operations and ReplayError when the trace
  // renames or unlinks a name that does not exist.
  static PosixResolution build(const Trace& trace, const ModelConfig& cfg);

  const PosixOpInfo& at(std::uint64_t seq) const;

 private:
  std::map<std::uint64_t, PosixOpInfo> info_;
};

std::string parent_dir(const std::string& path);

// Where each store becomes durable: the fence (after a covering flush) or
// msync that completes persistence of every cache line the store touches.
class MmioPersistence {
 public:
  // Throws ModeMismatch for POSIX operations.
  static MmioPersistence build(const Trace& trace, const ModelConfig& cfg);

  std::optional<std::uint64_t> persist_point(std::uint64_t store_seq) const;
  // True when the store is durable before an operation issued at `seq`.
  bool persisted_before(std::uint64_t store_seq, std::uint64_t seq) const;
  const std::vector<std::uint64_t>& lines(std::uint64_t seq) const;

 private:
  std::map<std::uint64_t, std::optional<std::uint64_t>> persist_;
  std::map<std::uint64_t, std::vector<std::uint64_t>> lines_;
};

EdgeSet posix_edges(const Trace& trace, const ModelConfig& cfg);
EdgeSet mmio_edges(const Trace& trace, const ModelConfig& cfg);
// Dispatches on trace.meta.mode.
EdgeSet model_edges(const Trace& trace, const ModelConfig& cfg);

}  // namespace repcrash
