#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "bipipe/prefix.hpp"
#include "bipipe/search_tree.hpp"

namespace bipipe {

using Answer = std::optional<std::uint32_t>;

// Uni-bit trie: each prefix is a node at depth == length along its bit path.
// Internal nodes store their prefix's next hop in `payload`; missing children
// are kNoNode. Throws std::invalid_argument on duplicate prefixes or prefixes
// longer than `key_width`.
SearchTree build_unibit_trie(std::span<const Prefix> prefixes, unsigned key_width = 32);

// Trie over the bits of `base` below position `start_bit`. Prefixes must have
// length >= start_bit and agree with `base` on the first start_bit bits;
// `inherited_hop` is the payload covering the whole region (a shorter prefix).
SearchTree build_subtrie(std::span<const Prefix> prefixes, std::uint32_t base, unsigned start_bit,
                         Answer inherited_hop, unsigned key_width = 32);

// Leaf-pushing: internal nodes keep only child links; every missing child
// becomes a leaf holding the nearest covering prefix's hop, or a null leaf.
// Output node ids are in breadth-first order, siblings adjacent.
SearchTree leaf_push(const SearchTree& raw);

// Walks the trie (raw or leaf-pushed) and returns the longest match.
Answer trie_lookup(const SearchTree& trie, std::uint32_t address);

// Reference LPM: scans every prefix.
Answer lpm_linear_scan(std::span<const Prefix> prefixes, std::uint32_t address);

// Reference LPM indexed by prefix length; supports incremental updates.
class LpmIndex {
 public:
  LpmIndex() = default;
  explicit LpmIndex(std::span<const Prefix> prefixes);

  // Inserts or replaces; returns the previous next hop if the key existed.
  Answer insert(const Prefix& p);
  Answer erase(const Prefix& p);
  Answer lookup(std::uint32_t address) const;
  // Exact-match lookup of a stored prefix key.
  Answer find(const Prefix& key) const;
  // Longest stored prefix strictly shorter than `length` covering `bits`.
  Answer covering(std::uint32_t bits, unsigned length) const;
  std::vector<Prefix> prefixes() const;
  // Stored prefixes of length >= `length` lying inside the region bits/length.
  std::vector<Prefix> within(std::uint32_t bits, unsigned length) const;
  std::size_t size() const { return size_; }

 private:
  std::array<std::unordered_map<std::uint32_t, std::uint32_t>, kMaxPrefixLength + 1> by_length_;
  std::size_t size_ = 0;
};

}  // namespace bipipe
