#include "connguard/hashing.hpp"

#include <stdexcept>

#include "connguard/murmur3.hpp"

namespace connguard {

std::string serialize_tuple(const SecurityRule& rule,
                            const ConnectionEvent& event) {
  std::string out;
  for (const std::string& var : rule.outlier_vars) {
    out += var;
    out.push_back('=');
    if (const std::string* value = event.find(var)) {
      out.push_back(kPresentByte);
      out += *value;
    } else {
      out.push_back(kAbsentByte);
    }
    out.push_back(kFieldTerminator);
  }
  return out;
}

TupleHash hash_tuple(std::string_view serialized) {
  return murmur3_x64_128(serialized, 0).low;
}

std::string to_hex(TupleHash h) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kDigits[h & 0xF];
    h >>= 4;
  }
  return out;
}

TupleHash hash_from_hex(std::string_view text) {
  if (text.size() != 16) {
    throw std::invalid_argument("hash must be 16 hex digits: '" +
                                std::string(text) + "'");
  }
  TupleHash h = 0;
  for (char c : text) {
    unsigned digit = 0;
    if (c >= '0' && c <= '9') {
      digit = static_cast<unsigned>(c - '0');
    } else if (c >= 'a' && c <= 'f') {
      digit = static_cast<unsigned>(c - 'a' + 10);
    } else {
      throw std::invalid_argument("hash must be lowercase hex: '" +
                                  std::string(text) + "'");
    }
    h = (h << 4) | digit;
  }
  return h;
}

}  // namespace connguard
