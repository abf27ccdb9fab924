#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace repcrash {

using Bytes = std::vector<std::uint8_t>;

// Largest payload kept inline in a trace record.
inline constexpr std::size_t kMaxInlinePayload = 256;

// 64-bit FNV-1a, rendered as 16 lowercase hex digits.
std::string payload_digest(const Bytes& data);
std::uint64_t fnv1a64(const void* data, std::size_t size,
                      std::uint64_t seed = 0xcbf29ce484222325ULL);

std::string to_hex(const Bytes& data);
std::optional<Bytes> from_hex(std::string_view hex);

// Deterministic filler for payloads recorded without inline bytes.
Bytes pattern_from_digest(std::string_view digest, std::size_t length);

// Payload of a write/store: digest plus optional inline bytes. Replay uses
// the inline bytes when present.
struct Payload {
  std::string digest;
  std::optional<Bytes> data;

  static Payload from_bytes(const Bytes& bytes);
  Bytes materialize(std::size_t length) const;
  bool operator==(const Payload&) const = default;
};

}  // namespace repcrash
