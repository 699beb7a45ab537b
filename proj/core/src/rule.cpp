#include "bipipe/rule.hpp"

#include <charconv>
#include <vector>

#include "bipipe/prefix.hpp"

namespace bipipe {

namespace {

std::vector<std::string_view> tokenize(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r' || s[i] == '\n')) ++i;
    const std::size_t start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t' && s[i] != '\r' && s[i] != '\n') ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

std::optional<std::uint64_t> parse_number(std::string_view s) {
  int base = 10;
  if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
    base = 16;
    s.remove_prefix(2);
  }
  std::uint64_t v = 0;
  if (s.empty()) return std::nullopt;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v, base);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

Range parse_ip_prefix_range(std::string_view tok) {
  const Prefix p = parse_prefix(std::string(tok) + " 0");
  return Range{p.bits, p.bits | ~prefix_mask(p.length)};
}

std::uint32_t parse_address(std::string_view tok) {
  if (auto dotted = parse_ipv4(tok)) return *dotted;
  const auto v = parse_number(tok);
  if (!v || *v > 0xffffffffull) throw ParseError("malformed address '" + std::string(tok) + "'");
  return static_cast<std::uint32_t>(*v);
}

}  // namespace

Rule wildcard_rule(std::uint32_t id) {
  Rule r;
  r.id = id;
  r.priority = id;
  for (std::size_t i = 0; i < kNumFields; ++i) r.fields[i] = Range{0, field_max(static_cast<Field>(i))};
  return r;
}

Rule parse_rule(std::string_view line, std::uint32_t id) {
  // Normalize "lo : hi" into "lo:hi" so ports become single tokens.
  std::string norm;
  norm.reserve(line.size());
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == ':') {
      while (!norm.empty() && (norm.back() == ' ' || norm.back() == '\t')) norm.pop_back();
      norm.push_back(':');
      while (i + 1 < line.size() && (line[i + 1] == ' ' || line[i + 1] == '\t')) ++i;
    } else {
      norm.push_back(line[i]);
    }
  }
  auto toks = tokenize(norm);
  if (toks.size() < 5 || toks[0].empty() || toks[0][0] != '@') {
    throw ParseError("malformed rule line '" + std::string(line) + "'");
  }
  toks[0].remove_prefix(1);

  Rule r;
  r.id = id;
  r.priority = id;
  r.action = id;
  r.range(Field::kSrcIp) = parse_ip_prefix_range(toks[0]);
  r.range(Field::kDstIp) = parse_ip_prefix_range(toks[1]);

  for (int k = 0; k < 2; ++k) {
    const auto tok = toks[2 + k];
    const auto colon = tok.find(':');
    if (colon == std::string_view::npos) throw ParseError("malformed port range '" + std::string(tok) + "'");
    const auto lo = parse_number(tok.substr(0, colon));
    const auto hi = parse_number(tok.substr(colon + 1));
    if (!lo || !hi || *lo > 0xffff || *hi > 0xffff) {
      throw ParseError("malformed port range '" + std::string(tok) + "'");
    }
    if (*lo > *hi) throw ParseError("inverted port range '" + std::string(tok) + "'");
    r.range(k == 0 ? Field::kSrcPort : Field::kDstPort) =
        Range{static_cast<std::uint32_t>(*lo), static_cast<std::uint32_t>(*hi)};
  }

  const auto proto = toks[4];
  const auto slash = proto.find('/');
  if (slash == std::string_view::npos) throw ParseError("malformed protocol '" + std::string(proto) + "'");
  const auto value = parse_number(proto.substr(0, slash));
  const auto mask = parse_number(proto.substr(slash + 1));
  if (!value || !mask || *value > 0xff || *mask > 0xff) {
    throw ParseError("malformed protocol '" + std::string(proto) + "'");
  }
  if (*mask == 0xff) {
    r.range(Field::kProto) = Range{static_cast<std::uint32_t>(*value), static_cast<std::uint32_t>(*value)};
  } else if (*mask == 0) {
    r.range(Field::kProto) = Range{0, 0xff};
  } else {
    throw ParseError("protocol mask must be 0x00 or 0xFF, got '" + std::string(proto) + "'");
  }
  return r;
}

namespace {

// Renders an IP range as prefix text; the range must be prefix-aligned.
std::string range_to_prefix(const Range& r) {
  const std::uint32_t span = r.hi - r.lo;
  unsigned host_bits = 0;
  while (host_bits < 32 && ((span >> host_bits) & 1u)) ++host_bits;
  return format_ipv4(r.lo) + '/' + std::to_string(32 - host_bits);
}

std::string hex2(std::uint32_t v) {
  static const char* digits = "0123456789ABCDEF";
  std::string s = "0x";
  s.push_back(digits[(v >> 4) & 0xf]);
  s.push_back(digits[v & 0xf]);
  return s;
}

}  // namespace

std::string format_rule(const Rule& rule) {
  const auto& proto = rule.range(Field::kProto);
  const bool exact = proto.lo == proto.hi;
  return '@' + range_to_prefix(rule.range(Field::kSrcIp)) + '\t' + range_to_prefix(rule.range(Field::kDstIp)) +
         '\t' + std::to_string(rule.range(Field::kSrcPort).lo) + " : " +
         std::to_string(rule.range(Field::kSrcPort).hi) + '\t' + std::to_string(rule.range(Field::kDstPort).lo) +
         " : " + std::to_string(rule.range(Field::kDstPort).hi) + '\t' + hex2(exact ? proto.lo : 0) + '/' +
         hex2(exact ? 0xff : 0);
}

Header parse_header(std::string_view line) {
  const auto toks = tokenize(line);
  if (toks.size() == 1) return header_for_address(parse_address(toks[0]));
  if (toks.size() >= 5) {
    Header h{};
    h[0] = parse_address(toks[0]);
    h[1] = parse_address(toks[1]);
    for (int i = 2; i < 5; ++i) {
      const auto v = parse_number(toks[i]);
      if (!v || *v > field_max(static_cast<Field>(i))) {
        throw ParseError("malformed header field '" + std::string(toks[i]) + "'");
      }
      h[i] = static_cast<std::uint32_t>(*v);
    }
    return h;
  }
  throw ParseError("malformed trace line '" + std::string(line) + "'");
}

std::string format_header(const Header& h, bool five_tuple) {
  if (!five_tuple) return format_ipv4(h[1]);
  return format_ipv4(h[0]) + ' ' + format_ipv4(h[1]) + ' ' + std::to_string(h[2]) + ' ' + std::to_string(h[3]) +
         ' ' + std::to_string(h[4]);
}

}  // namespace bipipe
