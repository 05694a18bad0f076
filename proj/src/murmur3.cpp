#include "connguard/murmur3.hpp"

#include <bit>

namespace connguard {

namespace {

constexpr std::uint64_t kC1 = 0x87c37b91114253d5ULL;
constexpr std::uint64_t kC2 = 0x4cf5ad432745937fULL;

constexpr std::uint64_t fmix64(std::uint64_t k) {
  k ^= k >> 33;
  k *= 0xff51afd7ed558ccdULL;
  k ^= k >> 33;
  k *= 0xc4ceb9fe1a85ec53ULL;
  k ^= k >> 33;
  return k;
}

std::uint64_t load_le64(const std::byte* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) {
    v = (v << 8) | std::to_integer<std::uint64_t>(p[i]);
  }
  return v;
}

// Little-endian load of up to 8 trailing bytes.
std::uint64_t load_partial(const std::byte* p, std::size_t len) {
  std::uint64_t v = 0;
  for (std::size_t i = len; i-- > 0;) {
    v = (v << 8) | std::to_integer<std::uint64_t>(p[i]);
  }
  return v;
}

std::uint64_t mix_k1(std::uint64_t k1) {
  k1 *= kC1;
  k1 = std::rotl(k1, 31);
  k1 *= kC2;
  return k1;
}

std::uint64_t mix_k2(std::uint64_t k2) {
  k2 *= kC2;
  k2 = std::rotl(k2, 33);
  k2 *= kC1;
  return k2;
}

}  // namespace

Hash128 murmur3_x64_128(std::span<const std::byte> data, std::uint32_t seed) {
  const std::size_t len = data.size();
  const std::size_t nblocks = len / 16;
  std::uint64_t h1 = seed;
  std::uint64_t h2 = seed;

  for (std::size_t i = 0; i < nblocks; ++i) {
    const std::byte* block = data.data() + i * 16;
    h1 ^= mix_k1(load_le64(block));
    h1 = std::rotl(h1, 27);
    h1 += h2;
    h1 = h1 * 5 + 0x52dce729;

    h2 ^= mix_k2(load_le64(block + 8));
    h2 = std::rotl(h2, 31);
    h2 += h1;
    h2 = h2 * 5 + 0x38495ab5;
  }

  const std::byte* tail = data.data() + nblocks * 16;
  const std::size_t rest = len & 15;
  if (rest > 8) h2 ^= mix_k2(load_partial(tail + 8, rest - 8));
  if (rest > 0) h1 ^= mix_k1(load_partial(tail, rest < 8 ? rest : 8));

  h1 ^= static_cast<std::uint64_t>(len);
  h2 ^= static_cast<std::uint64_t>(len);
  h1 += h2;
  h2 += h1;
  h1 = fmix64(h1);
  h2 = fmix64(h2);
  h1 += h2;
  h2 += h1;
  return {h1, h2};
}

Hash128 murmur3_x64_128(std::string_view data, std::uint32_t seed) {
  return murmur3_x64_128(std::as_bytes(std::span(data.data(), data.size())),
                         seed);
}

}  // namespace connguard
