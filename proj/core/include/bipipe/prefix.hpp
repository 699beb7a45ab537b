#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace bipipe {

class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

inline constexpr unsigned kMaxPrefixLength = 32;

// Left-aligned mask with the top `length` bits set.
constexpr std::uint32_t prefix_mask(unsigned length) {
  return length == 0 ? 0u : ~std::uint32_t{0} << (32 - length);
}

// Bit `index` counted from the most significant end (index 0 is the MSB).
constexpr unsigned msb_bit(std::uint32_t value, unsigned index) {
  return (value >> (31 - index)) & 1u;
}

// A routing entry. `bits` is left-aligned; bits beyond `length` are zero.
struct Prefix {
  std::uint32_t bits = 0;
  std::uint8_t length = 0;
  std::uint32_t next_hop = 0;

  bool matches(std::uint32_t address) const {
    return ((address ^ bits) & prefix_mask(length)) == 0;
  }
  bool same_key(const Prefix& other) const {
    return bits == other.bits && length == other.length;
  }
  friend bool operator==(const Prefix&, const Prefix&) = default;
};

// Builds a canonical prefix, masking any bits past `length`.
Prefix make_prefix(std::uint32_t bits, unsigned length, std::uint32_t next_hop);

std::optional<std::uint32_t> parse_ipv4(std::string_view text);
std::string format_ipv4(std::uint32_t address);

// Accepts `a.b.c.d/len hop` or `0101* hop` (a bit string followed by `*`).
Prefix parse_prefix(std::string_view line);

// Prefix text without the next hop, e.g. "10.0.0.0/8".
std::string format_prefix_key(const Prefix& prefix);
// Routing-table line, e.g. "10.0.0.0/8 7".
std::string format_prefix(const Prefix& prefix);
// Bit-string form, e.g. "010*".
std::string format_prefix_bits(const Prefix& prefix);

}  // namespace bipipe
