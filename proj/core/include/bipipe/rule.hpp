#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace bipipe {

enum class Field : std::uint8_t { kSrcIp = 0, kDstIp = 1, kSrcPort = 2, kDstPort = 3, kProto = 4 };
inline constexpr std::size_t kNumFields = 5;

// A packet header point. Routing lookups only read the destination address.
using Header = std::array<std::uint32_t, kNumFields>;

constexpr std::uint32_t field_max(Field f) {
  switch (f) {
    case Field::kSrcIp:
    case Field::kDstIp: return 0xffffffffu;
    case Field::kSrcPort:
    case Field::kDstPort: return 0xffffu;
    case Field::kProto: return 0xffu;
  }
  return 0;
}

inline Header header_for_address(std::uint32_t dst) {
  Header h{};
  h[static_cast<std::size_t>(Field::kDstIp)] = dst;
  return h;
}

constexpr std::uint32_t get(const Header& h, Field f) { return h[static_cast<std::size_t>(f)]; }

struct Range {
  std::uint32_t lo = 0;
  std::uint32_t hi = 0;

  bool contains(std::uint32_t v) const { return lo <= v && v <= hi; }
  bool intersects(const Range& o) const { return lo <= o.hi && o.lo <= hi; }
  friend bool operator==(const Range&, const Range&) = default;
};

// A 5-tuple classification rule. Lower priority value wins.
struct Rule {
  std::uint32_t id = 0;
  std::uint32_t priority = 0;
  std::array<Range, kNumFields> fields{};
  std::uint32_t action = 0;

  const Range& range(Field f) const { return fields[static_cast<std::size_t>(f)]; }
  Range& range(Field f) { return fields[static_cast<std::size_t>(f)]; }

  bool matches(const Header& h) const {
    for (std::size_t i = 0; i < kNumFields; ++i) {
      if (!fields[i].contains(h[i])) return false;
    }
    return true;
  }
  friend bool operator==(const Rule&, const Rule&) = default;
};

Rule wildcard_rule(std::uint32_t id);

// Parses one ClassBench filter line:
//   @sip/len dip/len splo : sphi dplo : dphi proto/mask [ignored trailing fields]
// `id` and `priority` are supplied by the caller (file order).
Rule parse_rule(std::string_view line, std::uint32_t id);
std::string format_rule(const Rule& rule);

// Parses a trace line: either a dotted-quad / integer destination address, or
// `sip dip sport dport proto` with addresses in dotted or integer form.
Header parse_header(std::string_view line);
std::string format_header(const Header& h, bool five_tuple);

struct HeaderHash {
  std::size_t operator()(const Header& h) const noexcept {
    std::uint64_t x = 0x9e3779b97f4a7c15ull;
    for (auto v : h) {
      x ^= v + 0x9e3779b97f4a7c15ull + (x << 6) + (x >> 2);
      x *= 0xff51afd7ed558ccdull;
    }
    return static_cast<std::size_t>(x ^ (x >> 33));
  }
};

}  // namespace bipipe
