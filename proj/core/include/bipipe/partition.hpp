#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "bipipe/search_tree.hpp"

namespace bipipe {

enum class IndexKind : std::uint8_t {
  kWhole,        // one subtree, every key routed to it
  kInitialBits,  // 2^I cells keyed by the first I address bits
  kFirstCut,     // cells of the decision-tree root's cut
};

struct Subtree {
  NodeId root = kNoNode;
  std::uint32_t first_node = 0;  // subtree nodes occupy [first_node, first_node + node_count)
  std::uint32_t node_count = 0;
  std::uint32_t cell = 0;        // first index cell routed here
};

// Disjoint subtrees copied into one forest plus the index that routes a key
// to its subtree. Subtrees are ordered by decreasing node count (ties by
// cell), and each subtree's nodes are contiguous and breadth-first, so a
// lower node id means a larger subtree or an earlier node within it.
struct PartitionSet {
  SearchTree forest;
  std::vector<Subtree> subtrees;
  std::vector<std::uint32_t> subtree_of;  // per forest node

  IndexKind index_kind = IndexKind::kWhole;
  unsigned initial_bits = 0;
  std::optional<Cut> first_cut;
  static constexpr std::int32_t kNoSubtree = -1;
  std::vector<std::int32_t> index;  // cell -> subtree id or kNoSubtree

  std::size_t node_count() const { return forest.size(); }
  std::uint32_t cell_of(const Header& h) const;
  std::optional<std::uint32_t> subtree_for(const Header& h) const;
};

// Splits a leaf-pushed trie at depth `initial_bits`. Depth-I nodes become
// subtree roots; a leaf above depth I is copied into every cell it covers;
// null cells route nowhere.
PartitionSet partition_trie(const SearchTree& trie, unsigned initial_bits);

// Each child of the decision-tree root becomes a subtree; the root's cut is
// the index. A single-leaf tree yields one subtree.
PartitionSet partition_dtree(const SearchTree& dtree);

// The whole tree as one subtree (used by the level-by-level baselines).
PartitionSet whole_tree_partition(const SearchTree& tree);

struct SubtreeMetrics {
  std::uint32_t leaves = 0;
  std::uint32_t height = 0;
  std::uint64_t leaf_depth_sum = 0;
  std::uint32_t nodes = 0;
  // Leaves whose siblings are all leaves too: with sibling blocks mapped as
  // one unit, these are the nodes of an inverted subtree ready at stage 1.
  std::uint32_t ready_leaves = 0;

  double leaf_per_height() const { return static_cast<double>(leaves) / (height == 0 ? 1 : height); }
  double avg_depth_per_leaf() const { return static_cast<double>(leaf_depth_sum) / leaves; }
};

SubtreeMetrics subtree_metrics(const PartitionSet& partition, std::uint32_t subtree);
std::vector<SubtreeMetrics> all_subtree_metrics(const PartitionSet& partition);

// Checks node-disjointness and that index entries point at valid subtrees.
bool partition_is_consistent(const PartitionSet& partition);

}  // namespace bipipe
