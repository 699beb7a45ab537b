#pragma once

#include <algorithm>
#include <random>
#include <vector>

#include "bipipe/bipipe.hpp"

namespace bipipe::testing {

// Independent LPM reference for a small key space: paints every prefix's
// address range, shortest first, so longer prefixes overwrite shorter ones.
inline std::vector<Answer> painted_lpm(std::span<const Prefix> prefixes, unsigned key_width) {
  std::vector<Answer> table(std::size_t{1} << key_width);
  std::vector<Prefix> sorted(prefixes.begin(), prefixes.end());
  std::stable_sort(sorted.begin(), sorted.end(), [](const Prefix& a, const Prefix& b) { return a.length < b.length; });
  for (const auto& p : sorted) {
    const std::uint32_t first = p.bits >> (32 - key_width);
    const std::size_t span = std::size_t{1} << (key_width - p.length);
    std::fill_n(table.begin() + first, span, Answer{p.next_hop});
  }
  return table;
}

// Random distinct prefixes no longer than `max_len` (hops 1..255).
inline std::vector<Prefix> random_prefixes(std::size_t n, unsigned max_len, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Prefix> out;
  LpmIndex seen;
  while (out.size() < n) {
    const unsigned len = static_cast<unsigned>(rng() % (max_len + 1));
    const Prefix p = make_prefix(static_cast<std::uint32_t>(rng()), len, 1 + static_cast<std::uint32_t>(rng() % 255));
    if (seen.find(p)) continue;
    seen.insert(p);
    out.push_back(p);
  }
  return out;
}

// Every prefix of length `depth`: a complete binary trie after building.
inline std::vector<Prefix> complete_prefixes(unsigned depth) {
  std::vector<Prefix> out;
  for (std::uint32_t v = 0; v < (1u << depth); ++v) out.push_back(make_prefix(v << (32 - depth), depth, v + 1));
  return out;
}

// A chain of `n` nodes, each with one child.
inline SearchTree path_tree(unsigned n) {
  SearchTree t(TreeKind::kDecisionTree);
  std::vector<NodeId> ids;
  for (unsigned i = 0; i < n; ++i) ids.push_back(t.add_node(i + 1 == n ? NodeKind::kLeaf : NodeKind::kInternal));
  for (unsigned i = 0; i + 1 < n; ++i) t.set_children(ids[i], std::span<const NodeId>(&ids[i + 1], 1));
  t.add_root(ids[0]);
  t.finalize();
  return t;
}

inline std::vector<std::uint32_t> all_subtrees(const PartitionSet& p) {
  std::vector<std::uint32_t> v(p.subtrees.size());
  for (std::uint32_t i = 0; i < v.size(); ++i) v[i] = i;
  return v;
}

}  // namespace bipipe::testing
