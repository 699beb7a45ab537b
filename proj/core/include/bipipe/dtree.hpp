#pragma once

#include <optional>
#include <span>

#include "bipipe/rule.hpp"
#include "bipipe/search_tree.hpp"

namespace bipipe {

struct DTreeParams {
  std::size_t bucket_capacity = 16;
  std::uint32_t max_cut_fanout = 16;
  // Cell doubling stops once rule copies plus child pointers would exceed
  // space_factor times the node's rule count.
  double space_factor = 4.0;
  unsigned max_depth = 24;
};

// Simplified HyperCuts: each internal node cuts one or two fields into
// equal-width cells. Fields are ranked by the number of distinct rule
// endpoints inside the node region; cell counts double while the mean
// rules-per-child keeps falling and the fanout and space caps allow. A node
// stays a leaf when its largest child would keep every rule. Leaves hold the
// priority-ordered rules intersecting their cell; empty cells are null leaves.
SearchTree build_hypercuts(std::span<const Rule> rules, const DTreeParams& params = {});

// Rule id of the highest-priority matching rule, or nullopt.
std::optional<std::uint32_t> classify(const SearchTree& tree, const Header& header);

// Priority-ordered linear scan; the first full match wins.
std::optional<std::uint32_t> classify_oracle(std::span<const Rule> rules, const Header& header);

// Matches a header against a leaf bucket of `tree`.
std::optional<std::uint32_t> match_bucket(const SearchTree& tree, std::uint32_t bucket, const Header& header);

// The hyper-rectangle covered by the whole key space.
std::array<Range, kNumFields> full_region();

}  // namespace bipipe
