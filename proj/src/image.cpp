#include "repcrash/image.hpp"

#include <fstream>

#include "repcrash/error.hpp"

namespace repcrash {

namespace fs = std::filesystem;

namespace {

class Hasher {
 public:
  void add(const void* data, std::size_t n) {
    // Length-prefix every field so concatenations cannot collide.
    std::uint64_t len = n;
    h_ = fnv1a64(&len, sizeof len, h_);
    h_ = fnv1a64(data, n, h_);
  }
  void add(const std::string& s) { add(s.data(), s.size()); }
  void add(const Bytes& b) { add(b.data(), b.size()); }
  void add(std::uint64_t v) { add(&v, sizeof v); }
  std::string hex() const {
    Bytes b(8);
    for (int i = 0; i < 8; ++i) b[i] = static_cast<std::uint8_t>(h_ >> (56 - 8 * i));
    return to_hex(b);
  }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

std::string base_name(const std::string& path) {
  auto slash = path.rfind('/');
  return slash == std::string::npos ? path : path.substr(slash + 1);
}

// Keeps materialized paths inside the scratch root.
fs::path confined(const fs::path& root, const std::string& path) {
  fs::path rel = fs::path(path).relative_path().lexically_normal();
  for (const auto& part : rel) {
    if (part == "..") throw ReplayError("path escapes image root: " + path);
  }
  return root / rel;
}

}  // namespace

std::string FsImage::digest() const {
  Hasher h;
  h.add(std::string("fs"));
  for (const auto& [path, data] : files) {
    h.add(path);
    h.add(data);
  }
  for (const auto& [dir, entries] : dirents) {
    h.add(dir);
    h.add(static_cast<std::uint64_t>(entries.size()));
    for (const auto& e : entries) h.add(e);
  }
  return h.hex();
}

std::string FsImage::describe() const {
  std::string out;
  for (const auto& [path, data] : files) {
    out += path + " (" + std::to_string(data.size()) + " bytes, " +
           payload_digest(data) + ")\n";
  }
  return out;
}

std::string MemImage::digest() const {
  Hasher h;
  h.add(std::string("mem"));
  for (const auto& [addr, byte] : bytes) {
    h.add(addr);
    h.add(&byte, 1);
  }
  return h.hex();
}

std::string MemImage::describe() const {
  std::string out;
  std::uint64_t run_start = 0, prev = 0;
  bool in_run = false;
  Bytes run;
  auto flush_run = [&] {
    if (!in_run) return;
    out += std::to_string(run_start) + ": " + to_hex(run) + "\n";
    run.clear();
  };
  for (const auto& [addr, byte] : bytes) {
    if (!in_run || addr != prev + 1) {
      flush_run();
      run_start = addr;
      in_run = true;
    }
    run.push_back(byte);
    prev = addr;
  }
  flush_run();
  return out;
}

std::map<std::uint64_t, Bytes> MemImage::lines(std::uint64_t cache_line_size) const {
  std::map<std::uint64_t, Bytes> out;
  for (const auto& [addr, byte] : bytes) {
    const std::uint64_t line = addr / cache_line_size;
    Bytes& content = out[line];
    if (content.empty()) content.assign(cache_line_size, 0);
    content[addr % cache_line_size] = byte;
  }
  return out;
}

std::uint8_t MemImage::at(std::uint64_t addr) const {
  auto it = bytes.find(addr);
  return it == bytes.end() ? 0 : it->second;
}

FsImage replay_posix(const Trace& trace, const PosixResolution& res,
                     const std::vector<std::uint64_t>& order) {
  std::map<std::string, std::uint64_t> names;
  std::map<std::uint64_t, Bytes> inodes;
  std::set<std::string> dirs;
  for (std::uint64_t seq : order) {
    const Operation* op = trace.find(seq);
    if (!op) throw ReplayError("schedule names unknown seq " + std::to_string(seq));
    if (mode_of(op->kind) != Mode::kPosix) {
      throw ModeMismatch("MMIO operation in a POSIX replay at seq " +
                         std::to_string(seq));
    }
    if (!is_update(op->kind)) continue;
    const PosixOpInfo& info = res.at(seq);
    const OpArgs& a = op->args;
    switch (op->kind) {
      case OpKind::kWrite:
      case OpKind::kPwrite: {
        if (info.creates_name) names[a.path] = info.inode;
        Bytes& data = inodes[info.inode];
        if (data.size() < a.offset + a.length) data.resize(a.offset + a.length, 0);
        const Bytes payload =
            a.payload ? a.payload->materialize(a.length) : Bytes(a.length, 0);
        std::copy(payload.begin(), payload.end(), data.begin() + a.offset);
        break;
      }
      case OpKind::kCreate:
        names[a.path] = info.inode;
        inodes[info.inode];
        break;
      case OpKind::kRename: {
        auto it = names.find(a.path);
        if (it == names.end()) {
          throw ReplayError("rename source '" + a.path + "' missing at seq " +
                            std::to_string(seq));
        }
        const std::uint64_t ino = it->second;
        names.erase(it);
        names[a.target] = ino;
        break;
      }
      case OpKind::kUnlink: {
        auto it = names.find(a.path);
        if (it == names.end()) {
          throw ReplayError("unlink of missing '" + a.path + "' at seq " +
                            std::to_string(seq));
        }
        names.erase(it);
        break;
      }
      case OpKind::kMkdir:
        dirs.insert(a.path);
        break;
      default:
        break;
    }
  }

  FsImage image;
  for (const auto& [path, ino] : names) {
    auto it = inodes.find(ino);
    image.files[path] = it == inodes.end() ? Bytes{} : it->second;
    image.dirents[parent_dir(path)].insert(base_name(path));
  }
  for (const auto& d : dirs) {
    image.dirents[d];
    image.dirents[parent_dir(d)].insert(base_name(d));
  }
  return image;
}

MemImage replay_mmio(const Trace& trace,
                     const std::vector<std::uint64_t>& order) {
  MemImage image;
  for (std::uint64_t seq : order) {
    const Operation* op = trace.find(seq);
    if (!op) throw ReplayError("schedule names unknown seq " + std::to_string(seq));
    if (mode_of(op->kind) != Mode::kMmio) {
      throw ModeMismatch("POSIX operation in an MMIO replay at seq " +
                         std::to_string(seq));
    }
    if (op->kind != OpKind::kStore) continue;
    const OpArgs& a = op->args;
    const Bytes payload =
        a.payload ? a.payload->materialize(a.length) : Bytes(a.length, 0);
    for (std::uint64_t i = 0; i < a.length; ++i) image.bytes[a.addr + i] = payload[i];
  }
  return image;
}

void materialize(const FsImage& image, const fs::path& root) {
  fs::create_directories(root);
  for (const auto& [dir, entries] : image.dirents) {
    fs::create_directories(confined(root, dir));
  }
  for (const auto& [path, data] : image.files) {
    const fs::path p = confined(root, path);
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size()));
    if (!out) throw ReplayError("cannot write " + p.string());
  }
}

void materialize(const MemImage& image, const fs::path& root) {
  fs::create_directories(root);
  const fs::path p = root / "image.bin";
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  std::uint64_t pos = 0;
  for (const auto& [addr, byte] : image.bytes) {
    if (addr != pos) out.seekp(static_cast<std::streamoff>(addr));
    out.put(static_cast<char>(byte));
    pos = addr + 1;
  }
  out.close();
  if (!out) throw ReplayError("cannot write " + p.string());
}

std::string CrashState::digest() const {
  return mode == Mode::kPosix ? fs.digest() : mem.digest();
}

std::string CrashState::describe() const {
  return mode == Mode::kPosix ? fs.describe() : mem.describe();
}

void CrashState::materialize(const fs::path& root) const {
  if (mode == Mode::kPosix) {
    repcrash::materialize(fs, root);
  } else {
    repcrash::materialize(mem, root);
  }
}

Replayer::Replayer(const Trace& trace, const ModelConfig& cfg) : trace_(trace) {
  if (trace.meta.mode == Mode::kPosix) res_ = PosixResolution::build(trace, cfg);
}

CrashState Replayer::replay(const std::vector<std::uint64_t>& order) const {
  CrashState state;
  state.mode = trace_.meta.mode;
  if (state.mode == Mode::kPosix) {
    state.fs = replay_posix(trace_, *res_, order);
  } else {
    state.mem = replay_mmio(trace_, order);
  }
  return state;
}

}  // namespace repcrash
