#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "repcrash/payload.hpp"
#include "repcrash/persistence_model.hpp"
#include "repcrash/trace.hpp"

namespace repcrash {

// Visible file-system contents after a crash.
struct FsImage {
  std::map<std::string, Bytes> files;
  std::map<std::string, std::set<std::string>> dirents;  // dir -> entry names

  bool operator==(const FsImage&) const = default;
  std::string digest() const;
  std::string describe() const;
};

struct MemImage {
  std::map<std::uint64_t, std::uint8_t> bytes;

  bool operator==(const MemImage&) const = default;
  std::string digest() const;
  std::string describe() const;
  // Persisted contents grouped per cache line; absent bytes read as zero.
  std::map<std::uint64_t, Bytes> lines(std::uint64_t cache_line_size) const;
  std::uint8_t at(std::uint64_t addr) const;
};

// Applies update operations in the given order to an empty file system.
// Names resolve to files as in a sequential run of the trace, so writes to a
// file whose name-creating op was omitted land in an invisible file. Throws
// ReplayError when a rename or unlink finds its name missing.
FsImage replay_posix(const Trace& trace, const PosixResolution& res,
                     const std::vector<std::uint64_t>& order);
MemImage replay_mmio(const Trace& trace,
                     const std::vector<std::uint64_t>& order);

// Writes the image under `root`: one file per path for POSIX, a sparse
// root/image.bin whose file offsets are addresses for MMIO.
void materialize(const FsImage& image, const std::filesystem::path& root);
void materialize(const MemImage& image, const std::filesystem::path& root);

// Image of either mode.
struct CrashState {
  Mode mode = Mode::kPosix;
  FsImage fs;
  MemImage mem;

  std::string digest() const;
  std::string describe() const;
  void materialize(const std::filesystem::path& root) const;
};

// Replays operation orders of one trace.
class Replayer {
 public:
  Replayer(const Trace& trace, const ModelConfig& cfg);
  CrashState replay(const std::vector<std::uint64_t>& order) const;
  const Trace& trace() const { return trace_; }

 private:
  const Trace& trace_;
  std::optional<PosixResolution> res_;
};

}  // namespace repcrash
