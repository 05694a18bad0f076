// hashing.hpp
//
// Tuple serialization and the 64-bit tuple hash that identifies a connection
// class for one rule.
//
// Encoding, per selected variable in rule order:
//   NAME '=' 0x01 VALUE 0x1F    variable present (VALUE may be empty)
//   NAME '=' 0x00 0x1F          variable absent
// The encoding is part of the snapshot format; do not change it.
#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "connguard/policy.hpp"

namespace connguard {

using TupleHash = std::uint64_t;

inline constexpr char kPresentByte = '\x01';
inline constexpr char kAbsentByte = '\x00';
inline constexpr char kFieldTerminator = '\x1F';

std::string serialize_tuple(const SecurityRule& rule,
                            const ConnectionEvent& event);

// Low 64 bits of MurmurHash3_x64_128 with seed 0.
TupleHash hash_tuple(std::string_view serialized);

inline TupleHash tuple_hash(const SecurityRule& rule,
                            const ConnectionEvent& event) {
  return hash_tuple(serialize_tuple(rule, event));
}

// 16 lowercase hex digits.
std::string to_hex(TupleHash h);
// Accepts exactly 16 lowercase hex digits; throws std::invalid_argument.
TupleHash hash_from_hex(std::string_view text);

}  // namespace connguard
