#include "repcrash/payload.hpp"

namespace repcrash {

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string payload_digest(const Bytes& data) {
  static const char* kHex = "0123456789abcdef";
  std::uint64_t h = fnv1a64(data.data(), data.size());
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = kHex[h & 0xf];
    h >>= 4;
  }
  return out;
}

std::string to_hex(const Bytes& data) {
  static const char* kHex = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (auto b : data) {
    out.push_back(kHex[b >> 4]);
    out.push_back(kHex[b & 0xf]);
  }
  return out;
}

std::optional<Bytes> from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) return std::nullopt;
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  Bytes out;
  out.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    int hi = nibble(hex[i]);
    int lo = nibble(hex[i + 1]);
    if (hi < 0 || lo < 0) return std::nullopt;
    out.push_back(static_cast<std::uint8_t>(hi << 4 | lo));
  }
  return out;
}

Bytes pattern_from_digest(std::string_view digest, std::size_t length) {
  // splitmix64 stream seeded by the digest text.
  std::uint64_t state = fnv1a64(digest.data(), digest.size());
  Bytes out;
  out.reserve(length);
  while (out.size() < length) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;
    for (int i = 0; i < 8 && out.size() < length; ++i) {
      out.push_back(static_cast<std::uint8_t>(z >> (8 * i)));
    }
  }
  return out;
}

Payload Payload::from_bytes(const Bytes& bytes) {
  Payload p;
  p.digest = payload_digest(bytes);
  if (bytes.size() <= kMaxInlinePayload) p.data = bytes;
  return p;
}

Bytes Payload::materialize(std::size_t length) const {
  if (data && data->size() == length) return *data;
  return pattern_from_digest(digest, length);
}

}  // namespace repcrash
