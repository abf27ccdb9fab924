#include "repcrash/persistence_model.hpp"

#include <algorithm>
#include <set>

#include "repcrash/error.hpp"

namespace repcrash {

namespace {

bool is_pow2(std::uint64_t v) { return v != 0 && (v & (v - 1)) == 0; }

std::vector<std::uint64_t> span_units(std::uint64_t start, std::uint64_t len,
                                      std::uint64_t unit) {
  std::vector<std::uint64_t> out;
  if (len == 0) return out;
  for (std::uint64_t u = start / unit; u <= (start + len - 1) / unit; ++u) {
    out.push_back(u);
  }
  return out;
}

template <typename T>
bool intersects(const std::vector<T>& a, const std::vector<T>& b) {
  for (const auto& x : a) {
    if (std::find(b.begin(), b.end(), x) != b.end()) return true;
  }
  return false;
}

bool strictly_inside(const std::string& path, const std::string& dir) {
  if (dir == "." ) return path.find('/') == std::string::npos || path.rfind("./", 0) == 0;
  return path.size() > dir.size() && path.compare(0, dir.size(), dir) == 0 &&
         (path[dir.size()] == '/' || dir.back() == '/');
}

// Accumulates edges, keeping the first reason recorded for a pair.
class EdgeBuilder {
 public:
  explicit EdgeBuilder(const Trace& trace) : trace_(trace) {}

  void add(const Operation& src, const Operation& dst, EdgeReason reason) {
    if (src.seq >= dst.seq) return;
    if (src.tid != dst.tid) reason = EdgeReason::kCrossThreadOrder;
    edges_.try_emplace({src.seq, dst.seq}, reason);
  }

  // covered -> barrier, covered -> later, barrier -> later.
  void barrier(const std::vector<const Operation*>& covered,
               const Operation& at, const std::vector<const Operation*>& nodes,
               EdgeReason reason) {
    if (covered.empty()) return;
    for (const Operation* c : covered) add(*c, at, reason);
    for (const Operation* later : nodes) {
      if (later->seq <= at.seq) continue;
      add(at, *later, reason);
      for (const Operation* c : covered) add(*c, *later, reason);
    }
  }

  EdgeSet finish() const {
    EdgeSet out;
    out.reserve(edges_.size());
    for (const auto& [k, r] : edges_) out.push_back({k.first, k.second, r});
    return out;
  }

 private:
  const Trace& trace_;
  std::map<std::pair<std::uint64_t, std::uint64_t>, EdgeReason> edges_;
};

std::vector<const Operation*> graph_nodes(const Trace& trace) {
  std::vector<const Operation*> out;
  for (const auto& op : trace.ops) {
    if (is_graph_node(op.kind)) out.push_back(&op);
  }
  return out;
}

}  // namespace

std::string_view to_string(EdgeReason reason) {
  switch (reason) {
    case EdgeReason::kSameBlock: return "SameBlock";
    case EdgeReason::kSyncBarrier: return "SyncBarrier";
    case EdgeReason::kMetadataOrder: return "MetadataOrder";
    case EdgeReason::kSameCacheLine: return "SameCacheLine";
    case EdgeReason::kFlushFence: return "FlushFence";
    case EdgeReason::kMsync: return "Msync";
    case EdgeReason::kCrossThreadOrder: return "CrossThreadOrder";
  }
  return "?";
}

void ModelConfig::validate() const {
  if (!is_pow2(block_size)) throw ConfigError("block_size must be a power of two");
  if (!is_pow2(cache_line_size)) {
    throw ConfigError("cache_line_size must be a power of two");
  }
}

std::string parent_dir(const std::string& path) {
  auto slash = path.rfind('/');
  if (slash == std::string::npos) return ".";
  if (slash == 0) return "/";
  return path.substr(0, slash);
}

PosixResolution PosixResolution::build(const Trace& trace,
                                       const ModelConfig& cfg) {
  PosixResolution res;
  std::map<std::string, std::uint64_t> names;
  std::map<std::uint64_t, std::uint64_t> sizes;
  std::set<std::string> dirs{".", "/"};
  for (const auto& op : trace.ops) {
    for (const std::string* p : {&op.args.path, &op.args.target}) {
      if (p->empty()) continue;
      for (std::string d = parent_dir(*p); d != "." && d != "/"; d = parent_dir(d)) {
        dirs.insert(d);
      }
    }
    if (op.kind == OpKind::kMkdir) dirs.insert(op.args.path);
  }

  std::uint64_t next_inode = 1;
  for (const auto& op : trace.ops) {
    if (mode_of(op.kind) != Mode::kPosix) {
      throw ModeMismatch("MMIO operation '" + std::string(to_string(op.kind)) +
                         "' at seq " + std::to_string(op.seq) +
                         " in a POSIX model");
    }
    PosixOpInfo info;
    const OpArgs& a = op.args;
    auto bind_new = [&](const std::string& path) {
      auto [it, inserted] = names.try_emplace(path, 0);
      if (inserted) {
        it->second = next_inode++;
        info.creates_name = true;
        info.is_metadata = true;
        info.names.push_back(path);
        info.dirent_dirs.push_back(parent_dir(path));
      }
      return it->second;
    };
    switch (op.kind) {
      case OpKind::kWrite:
      case OpKind::kPwrite: {
        info.is_data = true;
        info.inode = bind_new(a.path);
        std::uint64_t& size = sizes[info.inode];
        if (a.offset + a.length > size) {
          info.extends_size = true;
          size = a.offset + a.length;
        }
        info.touched_blocks = span_units(a.offset, a.length, cfg.block_size);
        if (cfg.split_writes_at_block_boundary || info.touched_blocks.empty()) {
          info.blocks = info.touched_blocks;
        } else {
          info.blocks = {info.touched_blocks.front()};
        }
        break;
      }
      case OpKind::kCreate:
        info.inode = bind_new(a.path);
        if (!info.creates_name) {
          info.is_metadata = true;
          info.names.push_back(a.path);
        }
        break;
      case OpKind::kRename: {
        auto it = names.find(a.path);
        if (it == names.end()) {
          throw ReplayError("rename of missing '" + a.path + "' at seq " +
                            std::to_string(op.seq));
        }
        info.inode = it->second;
        names.erase(it);
        names[a.target] = info.inode;
        info.is_metadata = true;
        info.names = {a.path, a.target};
        info.dirent_dirs = {parent_dir(a.path)};
        if (parent_dir(a.target) != parent_dir(a.path)) {
          info.dirent_dirs.push_back(parent_dir(a.target));
        }
        break;
      }
      case OpKind::kUnlink: {
        auto it = names.find(a.path);
        if (it == names.end()) {
          throw ReplayError("unlink of missing '" + a.path + "' at seq " +
                            std::to_string(op.seq));
        }
        info.inode = it->second;
        names.erase(it);
        info.is_metadata = true;
        info.names = {a.path};
        info.dirent_dirs = {parent_dir(a.path)};
        break;
      }
      case OpKind::kMkdir:
        info.is_metadata = true;
        info.names = {a.path};
        info.dirent_dirs = {parent_dir(a.path)};
        break;
      case OpKind::kFsync:
      case OpKind::kFdatasync: {
        auto it = names.find(a.path);
        if (!a.directory && it != names.end()) {
          info.inode = it->second;
          info.sync_scope = PosixOpInfo::SyncScope::kFile;
        } else if (a.directory || dirs.count(a.path)) {
          info.sync_scope = PosixOpInfo::SyncScope::kDirectory;
        }
        break;
      }
      default:
        break;
    }
    res.info_.emplace(op.seq, std::move(info));
  }
  return res;
}

const PosixOpInfo& PosixResolution::at(std::uint64_t seq) const {
  auto it = info_.find(seq);
  if (it == info_.end()) throw NodeNotFound(seq);
  return it->second;
}

EdgeSet posix_edges(const Trace& trace, const ModelConfig& cfg) {
  cfg.validate();
  const PosixResolution res = PosixResolution::build(trace, cfg);
  const auto nodes = graph_nodes(trace);
  EdgeBuilder eb(trace);

  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Operation& a = *nodes[i];
    const PosixOpInfo& ia = res.at(a.seq);
    for (std::size_t j = i + 1; j < nodes.size(); ++j) {
      const Operation& b = *nodes[j];
      const PosixOpInfo& ib = res.at(b.seq);
      if (ia.is_data && ib.is_data && ia.inode == ib.inode &&
          intersects(ia.blocks, ib.blocks)) {
        eb.add(a, b, EdgeReason::kSameBlock);
      }
      if (ia.is_data && ib.is_data && ia.inode == ib.inode && ia.extends_size &&
          ib.extends_size) {
        eb.add(a, b, EdgeReason::kMetadataOrder);
      }
      if (ia.is_metadata && ib.is_metadata && intersects(ia.names, ib.names)) {
        eb.add(a, b, EdgeReason::kMetadataOrder);
      }
      if (a.kind == OpKind::kMkdir && ib.is_metadata) {
        for (const auto& n : ib.names) {
          if (strictly_inside(n, a.args.path)) {
            eb.add(a, b, EdgeReason::kMetadataOrder);
            break;
          }
        }
      }
    }
  }

  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const Operation& bar = *nodes[k];
    const PosixOpInfo& ib = res.at(bar.seq);
    std::vector<const Operation*> covered;
    for (std::size_t i = 0; i < k; ++i) {
      const Operation& e = *nodes[i];
      const PosixOpInfo& ie = res.at(e.seq);
      bool take = false;
      switch (bar.kind) {
        case OpKind::kSync:
          take = true;
          break;
        case OpKind::kFdatasync:
          take = ib.sync_scope == PosixOpInfo::SyncScope::kFile && ie.is_data &&
                 ie.inode == ib.inode;
          break;
        case OpKind::kFsync:
          if (ib.sync_scope == PosixOpInfo::SyncScope::kFile) {
            take = (ie.is_data || ie.is_metadata) && ie.inode == ib.inode;
          } else if (ib.sync_scope == PosixOpInfo::SyncScope::kDirectory) {
            take = ie.is_metadata &&
                   std::find(ie.dirent_dirs.begin(), ie.dirent_dirs.end(),
                             bar.args.path) != ie.dirent_dirs.end();
          }
          break;
        default:
          break;
      }
      if (take) covered.push_back(&e);
    }
    eb.barrier(covered, bar, nodes, EdgeReason::kSyncBarrier);
  }
  return eb.finish();
}

MmioPersistence MmioPersistence::build(const Trace& trace,
                                       const ModelConfig& cfg) {
  MmioPersistence mp;
  for (const auto& op : trace.ops) {
    if (mode_of(op.kind) != Mode::kMmio) {
      throw ModeMismatch("POSIX operation '" + std::string(to_string(op.kind)) +
                         "' at seq " + std::to_string(op.seq) +
                         " in an MMIO model");
    }
    if (op.kind == OpKind::kStore || op.kind == OpKind::kFlush ||
        op.kind == OpKind::kMsync) {
      mp.lines_[op.seq] =
          span_units(op.args.addr, op.args.length, cfg.cache_line_size);
    }
  }
  const auto& ops = trace.ops;
  for (std::size_t i = 0; i < ops.size(); ++i) {
    if (ops[i].kind != OpKind::kStore) continue;
    std::optional<std::uint64_t> point;
    bool all = true;
    for (std::uint64_t line : mp.lines_[ops[i].seq]) {
      // Earliest fence following a covering flush, or a covering msync.
      std::optional<std::uint64_t> line_point;
      bool flushed = false;
      for (std::size_t j = i + 1; j < ops.size() && !line_point; ++j) {
        const Operation& o = ops[j];
        auto covers = [&] {
          const auto& ls = mp.lines_[o.seq];
          return std::find(ls.begin(), ls.end(), line) != ls.end();
        };
        if (o.kind == OpKind::kFlush && covers()) flushed = true;
        if (o.kind == OpKind::kFence && flushed) line_point = o.seq;
        if (o.kind == OpKind::kMsync && covers()) line_point = o.seq;
      }
      if (!line_point) {
        all = false;
        break;
      }
      point = point ? std::max(*point, *line_point) : *line_point;
    }
    mp.persist_[ops[i].seq] = all ? point : std::nullopt;
  }
  return mp;
}

std::optional<std::uint64_t> MmioPersistence::persist_point(
    std::uint64_t store_seq) const {
  auto it = persist_.find(store_seq);
  if (it == persist_.end()) return std::nullopt;
  return it->second;
}

bool MmioPersistence::persisted_before(std::uint64_t store_seq,
                                       std::uint64_t seq) const {
  auto p = persist_point(store_seq);
  return p && *p < seq;
}

const std::vector<std::uint64_t>& MmioPersistence::lines(
    std::uint64_t seq) const {
  static const std::vector<std::uint64_t> kNone;
  auto it = lines_.find(seq);
  return it == lines_.end() ? kNone : it->second;
}

EdgeSet mmio_edges(const Trace& trace, const ModelConfig& cfg) {
  cfg.validate();
  const MmioPersistence mp = MmioPersistence::build(trace, cfg);
  const auto nodes = graph_nodes(trace);
  EdgeBuilder eb(trace);

  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i]->kind != OpKind::kStore) continue;
    for (std::size_t j = i + 1; j < nodes.size(); ++j) {
      if (nodes[j]->kind != OpKind::kStore) continue;
      if (intersects(mp.lines(nodes[i]->seq), mp.lines(nodes[j]->seq))) {
        eb.add(*nodes[i], *nodes[j], EdgeReason::kSameCacheLine);
      }
    }
  }

  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const Operation& bar = *nodes[k];
    if (bar.kind != OpKind::kFence && bar.kind != OpKind::kMsync) continue;
    std::vector<const Operation*> covered;
    for (std::size_t i = 0; i < k; ++i) {
      if (nodes[i]->kind == OpKind::kStore &&
          mp.persist_point(nodes[i]->seq) == bar.seq) {
        covered.push_back(nodes[i]);
      }
    }
    if (covered.empty()) continue;
    const EdgeReason reason =
        bar.kind == OpKind::kFence ? EdgeReason::kFlushFence : EdgeReason::kMsync;
    if (bar.kind == OpKind::kFence) {
      // Flushes retired by this fence.
      for (std::size_t i = k; i-- > 0;) {
        if (nodes[i]->kind == OpKind::kFence) break;
        if (nodes[i]->kind == OpKind::kFlush) eb.add(*nodes[i], bar, reason);
      }
    }
    eb.barrier(covered, bar, nodes, reason);
  }
  return eb.finish();
}

EdgeSet model_edges(const Trace& trace, const ModelConfig& cfg) {
  return trace.meta.mode == Mode::kPosix ? posix_edges(trace, cfg)
                                         : mmio_edges(trace, cfg);
}

}  // namespace repcrash
