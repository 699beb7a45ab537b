#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "bipipe/prefix.hpp"
#include "bipipe/rule.hpp"
#include "bipipe/simulator.hpp"

namespace bipipe {

struct LoadReport {
  std::size_t lines = 0;
  std::size_t entries = 0;     // kept after de-duplication
  std::size_t duplicates = 0;  // repeated keys dropped (first occurrence kept)
};

// Routing tables: `a.b.c.d/len hop` or `0101* hop` per line, `#` comments.
// Parse failures are collected and thrown together as one ParseError whose
// message lists the offending line numbers.
std::vector<Prefix> read_routing_table(std::istream& in, LoadReport* report = nullptr);
std::vector<Prefix> load_routing_table(const std::string& path, LoadReport* report = nullptr);
void write_routing_table(std::ostream& out, std::span<const Prefix> prefixes);

// ClassBench filter lines; ids and priorities follow file order.
std::vector<Rule> read_ruleset(std::istream& in);
std::vector<Rule> load_ruleset(const std::string& path);
void write_ruleset(std::ostream& out, std::span<const Rule> rules);

// One key per line: an address, or `sip dip sport dport proto`.
Trace read_trace(std::istream& in);
Trace load_trace(const std::string& path);
void write_trace(std::ostream& out, const Trace& trace, bool five_tuple);

// Relative weight of each prefix length 0..32.
using LengthDistribution = std::array<double, kMaxPrefixLength + 1>;
// Backbone-like shape: about half /24, the bulk in 16..24, few below 16.
LengthDistribution backbone_lengths();

// `n` distinct prefixes clustered inside random allocation blocks of length
// 8..16, lengths drawn from `dist`, next hops in 1..255.
std::vector<Prefix> gen_routing_table(std::size_t n, std::uint64_t seed,
                                      const LengthDistribution& dist = backbone_lengths());

// `count` addresses, each inside a uniformly chosen prefix of the table.
std::vector<std::uint32_t> matchable_addresses(std::span<const Prefix> prefixes, std::size_t count,
                                               std::uint64_t seed);

enum class RuleFlavor : std::uint8_t { kAcl, kFirewall, kIpChain };
std::string_view to_string(RuleFlavor f);

// Synthetic 5-tuple rules drawn from a small pool of networks so rules
// overlap the way real filter sets do.
std::vector<Rule> gen_ruleset(std::size_t n, std::uint64_t seed, RuleFlavor flavor = RuleFlavor::kAcl);

// Headers inside random rules, mixed with uniformly random points.
std::vector<Header> gen_rule_headers(std::span<const Rule> rules, std::size_t count, std::uint64_t seed);
// Every rule's range endpoints and their outside neighbours, one field varied
// at a time from the rule's lower corner.
std::vector<Header> boundary_headers(std::span<const Rule> rules);

struct TraceParams {
  double zipf_alpha = 1.0;  // popularity skew over the universe (0 = uniform)
  double reuse = 0.8;         // probability of repeating a recently seen key
  unsigned stack_depth = 128; // recent distinct keys eligible for reuse
};

// Packet count of the reference backbone trace.
inline constexpr std::size_t kReferenceTraceLength = 769100;

// Draws `length` keys: with probability `reuse` one of the `stack_depth`
// most recent distinct keys, otherwise a Zipf(alpha) pick over `universe`
// (ranks assigned by a seeded shuffle).
std::vector<Header> gen_trace(std::span<const Header> universe, std::size_t length, const TraceParams& params,
                              std::uint64_t seed);

std::size_t unique_keys(std::span<const Header> keys);

// Bisects zipf_alpha in [0, max_alpha] so that unique/length approaches
// `target_ratio`; other fields of `params` are kept.
TraceParams calibrate_alpha(std::span<const Header> universe, std::size_t length, double target_ratio,
                            TraceParams params, std::uint64_t seed, double max_alpha = 4.0);

// Packets over distinct addresses in the reference backbone trace.
inline constexpr double kReferenceUniqueRatio = 17628.0 / kReferenceTraceLength;

}  // namespace bipipe
