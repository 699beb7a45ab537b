#include "bipipe/workload.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <unordered_map>
#include <unordered_set>

namespace bipipe {

namespace {

std::string_view strip_comment(std::string_view line) {
  const auto hash = line.find('#');
  if (hash != std::string_view::npos) line = line.substr(0, hash);
  while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.remove_suffix(1);
  while (!line.empty() && std::isspace(static_cast<unsigned char>(line.front()))) line.remove_prefix(1);
  return line;
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return in;
}

[[noreturn]] void throw_collected(const std::vector<std::string>& errors) {
  std::string msg = std::to_string(errors.size()) + " malformed line(s)";
  for (std::size_t i = 0; i < errors.size() && i < 10; ++i) msg += "\n  " + errors[i];
  throw ParseError(msg);
}

Range prefix_range(std::uint32_t addr, unsigned len) {
  const std::uint32_t lo = addr & prefix_mask(len);
  return Range{lo, lo | ~prefix_mask(len)};
}

}  // namespace

std::vector<Prefix> read_routing_table(std::istream& in, LoadReport* report) {
  std::vector<Prefix> out;
  std::unordered_set<std::uint64_t> seen;
  std::vector<std::string> errors;
  LoadReport rep;
  std::string line;
  while (std::getline(in, line)) {
    ++rep.lines;
    const auto text = strip_comment(line);
    if (text.empty()) continue;
    try {
      const Prefix p = parse_prefix(text);
      const std::uint64_t key = (std::uint64_t{p.bits} << 6) | p.length;
      if (!seen.insert(key).second) {
        ++rep.duplicates;
        continue;
      }
      out.push_back(p);
    } catch (const ParseError& e) {
      errors.push_back("line " + std::to_string(rep.lines) + ": " + e.what());
    }
  }
  if (!errors.empty()) throw_collected(errors);
  rep.entries = out.size();
  if (report) *report = rep;
  return out;
}

std::vector<Prefix> load_routing_table(const std::string& path, LoadReport* report) {
  auto in = open_or_throw(path);
  return read_routing_table(in, report);
}

void write_routing_table(std::ostream& out, std::span<const Prefix> prefixes) {
  for (const auto& p : prefixes) out << format_prefix(p) << '\n';
}

std::vector<Rule> read_ruleset(std::istream& in) {
  std::vector<Rule> out;
  std::vector<std::string> errors;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto text = strip_comment(line);
    if (text.empty()) continue;
    try {
      out.push_back(parse_rule(text, static_cast<std::uint32_t>(out.size())));
    } catch (const ParseError& e) {
      errors.push_back("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!errors.empty()) throw_collected(errors);
  return out;
}

std::vector<Rule> load_ruleset(const std::string& path) {
  auto in = open_or_throw(path);
  return read_ruleset(in);
}

void write_ruleset(std::ostream& out, std::span<const Rule> rules) {
  for (const auto& r : rules) out << format_rule(r) << '\n';
}

Trace read_trace(std::istream& in) {
  Trace t;
  std::vector<std::string> errors;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto text = strip_comment(line);
    if (text.empty()) continue;
    try {
      t.keys.push_back(parse_header(text));
    } catch (const ParseError& e) {
      errors.push_back("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!errors.empty()) throw_collected(errors);
  return t;
}

Trace load_trace(const std::string& path) {
  auto in = open_or_throw(path);
  return read_trace(in);
}

void write_trace(std::ostream& out, const Trace& trace, bool five_tuple) {
  for (const auto& h : trace.keys) out << format_header(h, five_tuple) << '\n';
}

LengthDistribution backbone_lengths() {
  LengthDistribution d{};
  d[8] = 0.2;
  for (unsigned l = 9; l <= 15; ++l) d[l] = 0.1 + 0.08 * (l - 8);
  d[16] = 6.5;
  d[17] = 1.8;
  d[18] = 3.2;
  d[19] = 6.8;
  d[20] = 6.3;
  d[21] = 5.8;
  d[22] = 7.8;
  d[23] = 7.0;
  d[24] = 52.0;
  for (unsigned l = 25; l <= 32; ++l) d[l] = 0.15;
  return d;
}

std::vector<Prefix> gen_routing_table(std::size_t n, std::uint64_t seed, const LengthDistribution& dist) {
  std::mt19937_64 rng(seed);
  std::discrete_distribution<unsigned> pick_len(dist.begin(), dist.end());
  std::uniform_int_distribution<std::uint32_t> any32;
  std::uniform_int_distribution<unsigned> block_len(8, 16);
  std::uniform_int_distribution<std::uint32_t> hop(1, 255);

  struct Block {
    std::uint32_t base;
    unsigned len;
  };
  std::vector<Block> blocks(std::max<std::size_t>(1, n / 64));
  for (auto& b : blocks) {
    b.len = block_len(rng);
    b.base = any32(rng) & prefix_mask(b.len);
  }
  std::uniform_int_distribution<std::size_t> pick_block(0, blocks.size() - 1);

  std::vector<Prefix> out;
  out.reserve(n);
  std::unordered_set<std::uint64_t> seen;
  std::size_t attempts = 0;
  while (out.size() < n) {
    if (++attempts > 100 * n + 1000) throw std::runtime_error("length distribution cannot yield enough prefixes");
    const unsigned len = pick_len(rng);
    const Block& b = blocks[pick_block(rng)];
    std::uint32_t bits = any32(rng);
    if (len > b.len) bits = (b.base & prefix_mask(b.len)) | (bits & ~prefix_mask(b.len));
    const Prefix p = make_prefix(bits, len, hop(rng));
    if (!seen.insert((std::uint64_t{p.bits} << 6) | p.length).second) continue;
    out.push_back(p);
  }
  return out;
}

std::vector<std::uint32_t> matchable_addresses(std::span<const Prefix> prefixes, std::size_t count,
                                               std::uint64_t seed) {
  if (prefixes.empty()) throw std::invalid_argument("empty prefix set has no matchable addresses");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, prefixes.size() - 1);
  std::uniform_int_distribution<std::uint32_t> any32;
  std::vector<std::uint32_t> out(count);
  for (auto& a : out) {
    const Prefix& p = prefixes[pick(rng)];
    a = p.bits | (any32(rng) & ~prefix_mask(p.length));
  }
  return out;
}

std::string_view to_string(RuleFlavor f) {
  switch (f) {
    case RuleFlavor::kAcl: return "acl";
    case RuleFlavor::kFirewall: return "fw";
    case RuleFlavor::kIpChain: return "ipc";
  }
  return "?";
}

std::vector<Rule> gen_ruleset(std::size_t n, std::uint64_t seed, RuleFlavor flavor) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::uint32_t> any32;
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto uniform = [&](unsigned lo, unsigned hi) { return std::uniform_int_distribution<unsigned>(lo, hi)(rng); };

  struct Net {
    std::uint32_t addr;
    unsigned len;
  };
  std::vector<Net> nets(std::max<std::size_t>(4, n / 8));
  for (auto& net : nets) {
    net.len = uniform(8, 24);
    net.addr = any32(rng) & prefix_mask(net.len);
  }
  auto address = [&](double wildcard, unsigned min_len, unsigned max_len) -> Range {
    if (u01(rng) < wildcard) return Range{0, 0xffffffffu};
    const Net& net = nets[uniform(0, static_cast<unsigned>(nets.size() - 1))];
    const unsigned len = std::max(net.len, uniform(min_len, max_len));
    const std::uint32_t a = (net.addr & prefix_mask(net.len)) | (any32(rng) & ~prefix_mask(net.len));
    return prefix_range(a, len);
  };
  static constexpr std::uint32_t kWellKnown[] = {20, 21, 22, 23, 25, 53, 80, 110, 123, 143, 161, 443, 993, 8080};
  auto well_known = [&] { return kWellKnown[uniform(0, std::size(kWellKnown) - 1)]; };
  auto port = [&](double wild, double exact, double high) -> Range {
    const double x = u01(rng);
    if (x < wild) return Range{0, 0xffff};
    if (x < wild + exact) {
      const auto p = well_known();
      return Range{p, p};
    }
    if (x < wild + exact + high) return Range{1024, 0xffff};
    const unsigned lo = uniform(0, 60000);
    return Range{lo, lo + uniform(1, 5000)};
  };
  auto proto = [&](double any, double tcp, double udp) -> Range {
    const double x = u01(rng);
    if (x < any) return Range{0, 0xff};
    if (x < any + tcp) return Range{6, 6};
    if (x < any + tcp + udp) return Range{17, 17};
    return Range{1, 1};
  };

  std::vector<Rule> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rule r;
    r.id = r.priority = r.action = static_cast<std::uint32_t>(i);
    switch (flavor) {
      case RuleFlavor::kAcl:
        r.range(Field::kSrcIp) = address(0.25, 16, 32);
        r.range(Field::kDstIp) = address(0.05, 20, 32);
        r.range(Field::kSrcPort) = port(0.9, 0.0, 0.1);
        r.range(Field::kDstPort) = port(0.2, 0.6, 0.1);
        r.range(Field::kProto) = proto(0.05, 0.7, 0.2);
        break;
      case RuleFlavor::kFirewall:
        r.range(Field::kSrcIp) = address(0.4, 8, 24);
        r.range(Field::kDstIp) = address(0.2, 16, 32);
        r.range(Field::kSrcPort) = port(0.7, 0.0, 0.3);
        r.range(Field::kDstPort) = port(0.3, 0.5, 0.1);
        r.range(Field::kProto) = proto(0.3, 0.5, 0.15);
        break;
      case RuleFlavor::kIpChain:
        r.range(Field::kSrcIp) = address(0.2, 16, 32);
        r.range(Field::kDstIp) = address(0.2, 16, 32);
        r.range(Field::kSrcPort) = port(0.8, 0.1, 0.1);
        r.range(Field::kDstPort) = port(0.4, 0.4, 0.1);
        r.range(Field::kProto) = proto(0.2, 0.5, 0.2);
        break;
    }
    out.push_back(r);
  }
  return out;
}

std::vector<Header> gen_rule_headers(std::span<const Rule> rules, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<Header> out(count);
  for (auto& h : out) {
    const bool inside = !rules.empty() && u01(rng) < 0.8;
    const Rule* r = inside ? &rules[std::uniform_int_distribution<std::size_t>(0, rules.size() - 1)(rng)] : nullptr;
    for (std::size_t f = 0; f < kNumFields; ++f) {
      const Range range = r ? r->fields[f] : Range{0, field_max(static_cast<Field>(f))};
      h[f] = std::uniform_int_distribution<std::uint32_t>(range.lo, range.hi)(rng);
    }
  }
  return out;
}

std::vector<Header> boundary_headers(std::span<const Rule> rules) {
  std::vector<Header> out;
  for (const auto& r : rules) {
    Header corner{};
    for (std::size_t f = 0; f < kNumFields; ++f) corner[f] = r.fields[f].lo;
    for (std::size_t f = 0; f < kNumFields; ++f) {
      const Range& range = r.fields[f];
      std::vector<std::uint32_t> values{range.lo, range.hi};
      if (range.lo > 0) values.push_back(range.lo - 1);
      if (range.hi < field_max(static_cast<Field>(f))) values.push_back(range.hi + 1);
      for (auto v : values) {
        Header h = corner;
        h[f] = v;
        out.push_back(h);
      }
    }
  }
  return out;
}

std::vector<Header> gen_trace(std::span<const Header> universe, std::size_t length, const TraceParams& params,
                              std::uint64_t seed) {
  std::vector<Header> out;
  if (length == 0) return out;
  if (universe.empty()) throw std::invalid_argument("trace universe is empty");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  std::vector<std::uint32_t> rank(universe.size());
  std::iota(rank.begin(), rank.end(), 0u);
  std::shuffle(rank.begin(), rank.end(), rng);
  std::vector<double> cdf(universe.size());
  double acc = 0.0;
  for (std::size_t r = 0; r < cdf.size(); ++r) {
    acc += std::pow(static_cast<double>(r + 1), -params.zipf_alpha);
    cdf[r] = acc;
  }

  std::deque<std::uint32_t> recent;
  out.reserve(length);
  for (std::size_t i = 0; i < length; ++i) {
    std::uint32_t idx;
    if (!recent.empty() && u01(rng) < params.reuse) {
      idx = recent[std::uniform_int_distribution<std::size_t>(0, recent.size() - 1)(rng)];
    } else {
      const double x = u01(rng) * acc;
      const auto r = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), x) - cdf.begin());
      idx = rank[std::min(r, rank.size() - 1)];
    }
    const auto it = std::find(recent.begin(), recent.end(), idx);
    if (it != recent.end()) recent.erase(it);
    recent.push_front(idx);
    if (recent.size() > params.stack_depth) recent.pop_back();
    out.push_back(universe[idx]);
  }
  return out;
}

std::size_t unique_keys(std::span<const Header> keys) {
  std::unordered_set<Header, HeaderHash> s(keys.begin(), keys.end());
  return s.size();
}

TraceParams calibrate_alpha(std::span<const Header> universe, std::size_t length, double target_ratio,
                            TraceParams params, std::uint64_t seed, double max_alpha) {
  double lo = 0.0;
  double hi = max_alpha;
  auto ratio = [&](double alpha) {
    params.zipf_alpha = alpha;
    const auto t = gen_trace(universe, length, params, seed);
    return static_cast<double>(unique_keys(t)) / static_cast<double>(length);
  };
  // Unique ratio falls as alpha grows.
  for (int it = 0; it < 30; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (ratio(mid) > target_ratio) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double rl = std::abs(ratio(lo) - target_ratio);
  const double rh = std::abs(ratio(hi) - target_ratio);
  params.zipf_alpha = rl <= rh ? lo : hi;
  return params;
}

}  // namespace bipipe
