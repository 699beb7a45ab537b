#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "bipipe/rule.hpp"

namespace bipipe {

using NodeId = std::uint32_t;
inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();
inline constexpr std::uint32_t kNoPayload = std::numeric_limits<std::uint32_t>::max();
inline constexpr std::uint32_t kNoCut = std::numeric_limits<std::uint32_t>::max();

enum class NodeKind : std::uint8_t { kInternal, kLeaf, kNull };
enum class TreeKind : std::uint8_t { kTrie, kDecisionTree };

// One dimension of a decision-tree cut: `parts` equal-width cells of `width`
// starting at `lo`. The last cell absorbs any remainder of the region.
struct CutDim {
  Field field = Field::kSrcIp;
  std::uint32_t lo = 0;
  std::uint64_t width = 1;
  std::uint32_t parts = 1;
};

struct Cut {
  std::vector<CutDim> dims;

  std::uint32_t cells() const {
    std::uint32_t n = 1;
    for (const auto& d : dims) n *= d.parts;
    return n;
  }
  // Mixed-radix cell index, first dimension most significant.
  std::uint32_t cell_of(const Header& h) const {
    std::uint32_t cell = 0;
    for (const auto& d : dims) {
      const std::uint64_t off = static_cast<std::uint64_t>(get(h, d.field)) - d.lo;
      std::uint64_t k = off / d.width;
      if (k >= d.parts) k = d.parts - 1;
      cell = cell * d.parts + static_cast<std::uint32_t>(k);
    }
    return cell;
  }
};

struct TreeNode {
  NodeKind kind = NodeKind::kNull;
  NodeId parent = kNoNode;
  std::uint32_t child_begin = 0;
  std::uint32_t child_count = 0;
  // Next hop (trie) or bucket index (decision tree). Internal nodes of a
  // trie that has not been leaf-pushed may also carry a prefix payload.
  std::uint32_t payload = kNoPayload;
  std::uint32_t cut = kNoCut;
  std::uint16_t depth = 0;
  std::uint16_t height = 0;
};

// Node-pool tree shared by routing tries and decision trees. A pool may hold
// several roots, in which case it is a forest of disjoint subtrees and depth
// and height are measured relative to each node's own root.
class SearchTree {
 public:
  SearchTree() = default;
  explicit SearchTree(TreeKind kind) : kind_(kind) {}

  TreeKind kind() const { return kind_; }

  NodeId add_node(NodeKind kind, std::uint32_t payload = kNoPayload);
  // Appends a contiguous child list; entries may be kNoNode only in raw tries.
  void set_children(NodeId node, std::span<const NodeId> children);
  void add_root(NodeId root) { roots_.push_back(root); }

  // Recomputes parent links, depth and height from the roots. Throws if the
  // pool contains a cycle, a node with two parents, or an unreachable node.
  void finalize();

  std::size_t size() const { return nodes_.size(); }
  const TreeNode& node(NodeId id) const { return nodes_[id]; }
  TreeNode& node(NodeId id) { return nodes_[id]; }
  std::span<const NodeId> children(NodeId id) const {
    const auto& n = nodes_[id];
    return {links_.data() + n.child_begin, n.child_count};
  }
  std::span<const NodeId> roots() const { return roots_; }
  NodeId root() const;
  bool is_leaf(NodeId id) const { return nodes_[id].kind != NodeKind::kInternal; }

  // Height of the tree rooted at `root()` (equal to its depth).
  unsigned height() const;

  // Every internal node has exactly two children and no payload.
  bool is_leaf_pushed_trie() const;

  // Decision-tree side tables.
  std::vector<Cut> cuts;
  std::vector<Rule> rules;                          // sorted by priority
  std::vector<std::vector<std::uint32_t>> buckets;  // indices into `rules`

  // Bit position consumed at depth 0 (a trie partition starts below its index bits).
  unsigned bit_offset = 0;
  unsigned key_width = 32;

 private:
  TreeKind kind_ = TreeKind::kTrie;
  std::vector<TreeNode> nodes_;
  std::vector<NodeId> links_;
  std::vector<NodeId> roots_;
};

struct TreeStats {
  std::vector<std::size_t> by_depth;   // nodes per depth 0..depth
  std::vector<std::size_t> by_height;  // nodes per height 0..height
  std::size_t total = 0;
  std::size_t leaves = 0;
  unsigned depth = 0;
};

TreeStats tree_stats(const SearchTree& tree);

// Node ids of the tree in breadth-first order from all roots.
std::vector<NodeId> bfs_order(const SearchTree& tree);

}  // namespace bipipe
