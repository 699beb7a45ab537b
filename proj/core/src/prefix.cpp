#include "bipipe/prefix.hpp"

#include <charconv>
#include <vector>

namespace bipipe {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

template <typename T>
std::optional<T> parse_uint(std::string_view s) {
  T value{};
  if (s.empty()) return std::nullopt;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

}  // namespace

Prefix make_prefix(std::uint32_t bits, unsigned length, std::uint32_t next_hop) {
  if (length > kMaxPrefixLength) {
    throw ParseError("prefix length " + std::to_string(length) + " exceeds 32");
  }
  return Prefix{bits & prefix_mask(length), static_cast<std::uint8_t>(length), next_hop};
}

std::optional<std::uint32_t> parse_ipv4(std::string_view text) {
  std::uint32_t address = 0;
  int octets = 0;
  std::size_t pos = 0;
  while (octets < 4) {
    const auto dot = text.find('.', pos);
    const auto part = text.substr(pos, dot == std::string_view::npos ? text.npos : dot - pos);
    const auto value = parse_uint<unsigned>(part);
    if (!value || *value > 255 || part.size() > 3) return std::nullopt;
    address = (address << 8) | *value;
    ++octets;
    if (dot == std::string_view::npos) break;
    pos = dot + 1;
  }
  if (octets != 4) return std::nullopt;
  // Reject trailing material such as a fifth octet.
  std::size_t dots = 0;
  for (char c : text) dots += (c == '.');
  if (dots != 3) return std::nullopt;
  return address;
}

std::string format_ipv4(std::uint32_t address) {
  return std::to_string(address >> 24) + '.' + std::to_string((address >> 16) & 0xff) + '.' +
         std::to_string((address >> 8) & 0xff) + '.' + std::to_string(address & 0xff);
}

Prefix parse_prefix(std::string_view line) {
  const auto tokens = split_ws(trim(line));
  if (tokens.size() != 2) {
    throw ParseError("expected '<prefix> <next_hop>', got '" + std::string(line) + "'");
  }
  const auto hop = parse_uint<std::uint32_t>(tokens[1]);
  if (!hop) throw ParseError("malformed next hop '" + std::string(tokens[1]) + "'");

  const std::string_view key = tokens[0];
  if (!key.empty() && key.back() == '*') {
    const auto bitstr = key.substr(0, key.size() - 1);
    if (bitstr.size() > kMaxPrefixLength) throw ParseError("bit-string prefix longer than 32 bits");
    std::uint32_t bits = 0;
    for (std::size_t i = 0; i < bitstr.size(); ++i) {
      if (bitstr[i] != '0' && bitstr[i] != '1') {
        throw ParseError("malformed bit-string prefix '" + std::string(key) + "'");
      }
      if (bitstr[i] == '1') bits |= 1u << (31 - i);
    }
    return make_prefix(bits, static_cast<unsigned>(bitstr.size()), *hop);
  }

  const auto slash = key.find('/');
  if (slash == std::string_view::npos) {
    throw ParseError("missing '/len' in prefix '" + std::string(key) + "'");
  }
  const auto address = parse_ipv4(key.substr(0, slash));
  if (!address) throw ParseError("malformed address '" + std::string(key.substr(0, slash)) + "'");
  const auto length = parse_uint<unsigned>(key.substr(slash + 1));
  if (!length) throw ParseError("malformed prefix length in '" + std::string(key) + "'");
  if (*length > kMaxPrefixLength) {
    throw ParseError("prefix length " + std::to_string(*length) + " exceeds 32");
  }
  return make_prefix(*address, *length, *hop);
}

std::string format_prefix_key(const Prefix& prefix) {
  return format_ipv4(prefix.bits) + '/' + std::to_string(prefix.length);
}

std::string format_prefix(const Prefix& prefix) {
  return format_prefix_key(prefix) + ' ' + std::to_string(prefix.next_hop);
}

std::string format_prefix_bits(const Prefix& prefix) {
  std::string out;
  for (unsigned i = 0; i < prefix.length; ++i) out.push_back(msb_bit(prefix.bits, i) ? '1' : '0');
  out.push_back('*');
  return out;
}

}  // namespace bipipe
