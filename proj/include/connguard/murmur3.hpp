// murmur3.hpp
//
// MurmurHash3, x64 128-bit variant (Austin Appleby, public domain algorithm).
#pragma once

#include <cstdint>
#include <span>
#include <string_view>

namespace connguard {

struct Hash128 {
  std::uint64_t low = 0;   // first 8 output bytes, little-endian
  std::uint64_t high = 0;  // last 8 output bytes, little-endian

  friend bool operator==(const Hash128&, const Hash128&) = default;
};

// Output is identical on every platform: input blocks are read little-endian.
Hash128 murmur3_x64_128(std::span<const std::byte> data, std::uint32_t seed);
Hash128 murmur3_x64_128(std::string_view data, std::uint32_t seed);

}  // namespace connguard
