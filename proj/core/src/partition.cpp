#include "bipipe/partition.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace bipipe {

namespace {

std::vector<std::uint32_t> subtree_sizes(const SearchTree& tree) {
  std::vector<std::uint32_t> size(tree.size(), 1);
  const auto order = bfs_order(tree);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    for (NodeId c : tree.children(*it)) {
      if (c != kNoNode) size[*it] += size[c];
    }
  }
  return size;
}

struct Pending {
  NodeId src_root;
  std::uint32_t cell;
};

// Copies the listed source subtrees into `out.forest`, largest first, and
// fills `out.subtrees` / `out.subtree_of`. Returns the subtree id per entry
// of `pending` (in input order).
std::vector<std::uint32_t> copy_subtrees(const SearchTree& src, std::vector<Pending> pending, PartitionSet& out) {
  const auto sizes = subtree_sizes(src);
  std::vector<std::uint32_t> order(pending.size());
  for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    const auto sa = sizes[pending[a].src_root];
    const auto sb = sizes[pending[b].src_root];
    return sa != sb ? sa > sb : pending[a].cell < pending[b].cell;
  });

  out.forest = SearchTree(src.kind());
  out.forest.cuts = src.cuts;
  out.forest.rules = src.rules;
  out.forest.buckets = src.buckets;
  out.forest.key_width = src.key_width;

  std::vector<std::uint32_t> id_of(pending.size());
  std::vector<NodeId> bfs;
  std::vector<NodeId> kids;
  for (std::uint32_t sid = 0; sid < order.size(); ++sid) {
    const Pending& p = pending[order[sid]];
    id_of[order[sid]] = sid;
    const auto base = static_cast<NodeId>(out.forest.size());
    bfs.assign(1, p.src_root);
    for (std::size_t k = 0; k < bfs.size(); ++k) {
      const auto& n = src.node(bfs[k]);
      const NodeId id = out.forest.add_node(n.kind, n.payload);
      out.forest.node(id).cut = n.cut;
      kids.clear();
      for (NodeId c : src.children(bfs[k])) {
        if (c == kNoNode) throw std::invalid_argument("partitioning requires a tree without missing children");
        kids.push_back(base + static_cast<NodeId>(bfs.size()));
        bfs.push_back(c);
      }
      if (!kids.empty()) out.forest.set_children(id, kids);
    }
    out.forest.add_root(base);
    out.subtrees.push_back(Subtree{base, base, static_cast<std::uint32_t>(bfs.size()), p.cell});
    out.subtree_of.insert(out.subtree_of.end(), bfs.size(), sid);
  }
  out.forest.finalize();
  return id_of;
}

}  // namespace

std::uint32_t PartitionSet::cell_of(const Header& h) const {
  switch (index_kind) {
    case IndexKind::kWhole: return 0;
    case IndexKind::kInitialBits:
      return initial_bits == 0 ? 0 : get(h, Field::kDstIp) >> (32 - initial_bits);
    case IndexKind::kFirstCut: return first_cut->cell_of(h);
  }
  return 0;
}

std::optional<std::uint32_t> PartitionSet::subtree_for(const Header& h) const {
  const auto s = index[cell_of(h)];
  if (s == kNoSubtree) return std::nullopt;
  return static_cast<std::uint32_t>(s);
}

PartitionSet partition_trie(const SearchTree& trie, unsigned initial_bits) {
  if (trie.kind() != TreeKind::kTrie) throw std::invalid_argument("partition_trie needs a trie");
  if (initial_bits > 16) throw std::invalid_argument("at most 16 initial bits are supported");
  if (!trie.is_leaf_pushed_trie()) throw std::invalid_argument("partition_trie needs a leaf-pushed trie");

  PartitionSet out;
  out.index_kind = initial_bits == 0 ? IndexKind::kWhole : IndexKind::kInitialBits;
  out.initial_bits = initial_bits;
  const std::uint32_t cells = 1u << initial_bits;

  std::vector<Pending> pending;
  std::vector<std::uint32_t> cell_pending(cells, kNoNode);
  struct Frame {
    NodeId node;
    unsigned depth;
    std::uint32_t value;
  };
  std::vector<Frame> stack{{trie.root(), 0, 0}};
  while (!stack.empty()) {
    const Frame f = stack.back();
    stack.pop_back();
    const auto& n = trie.node(f.node);
    if (f.depth == initial_bits || n.kind != NodeKind::kInternal) {
      if (n.kind == NodeKind::kNull) continue;
      const unsigned span_bits = initial_bits - f.depth;
      const std::uint32_t first = f.value << span_bits;
      for (std::uint32_t c = first; c < first + (1u << span_bits); ++c) {
        cell_pending[c] = static_cast<std::uint32_t>(pending.size());
        pending.push_back({f.node, c});
      }
      continue;
    }
    const auto kids = trie.children(f.node);
    stack.push_back({kids[1], f.depth + 1, f.value * 2 + 1});
    stack.push_back({kids[0], f.depth + 1, f.value * 2});
  }

  const auto ids = copy_subtrees(trie, pending, out);
  out.forest.bit_offset = trie.bit_offset + initial_bits;
  out.index.assign(cells, PartitionSet::kNoSubtree);
  for (std::uint32_t c = 0; c < cells; ++c) {
    if (cell_pending[c] != kNoNode) out.index[c] = static_cast<std::int32_t>(ids[cell_pending[c]]);
  }
  return out;
}

PartitionSet partition_dtree(const SearchTree& dtree) {
  if (dtree.kind() != TreeKind::kDecisionTree) throw std::invalid_argument("partition_dtree needs a decision tree");
  const NodeId root = dtree.root();
  const auto& rn = dtree.node(root);
  if (rn.kind != NodeKind::kInternal) return whole_tree_partition(dtree);

  PartitionSet out;
  out.index_kind = IndexKind::kFirstCut;
  out.first_cut = dtree.cuts[rn.cut];
  const auto kids = dtree.children(root);
  std::vector<Pending> pending;
  std::vector<std::uint32_t> cell_pending(kids.size(), kNoNode);
  for (std::uint32_t c = 0; c < kids.size(); ++c) {
    if (dtree.node(kids[c]).kind == NodeKind::kNull) continue;
    cell_pending[c] = static_cast<std::uint32_t>(pending.size());
    pending.push_back({kids[c], c});
  }
  const auto ids = copy_subtrees(dtree, pending, out);
  out.index.assign(kids.size(), PartitionSet::kNoSubtree);
  for (std::uint32_t c = 0; c < kids.size(); ++c) {
    if (cell_pending[c] != kNoNode) out.index[c] = static_cast<std::int32_t>(ids[cell_pending[c]]);
  }
  return out;
}

PartitionSet whole_tree_partition(const SearchTree& tree) {
  PartitionSet out;
  out.index_kind = IndexKind::kWhole;
  copy_subtrees(tree, {{tree.root(), 0}}, out);
  out.forest.bit_offset = tree.bit_offset;
  out.index.assign(1, 0);
  return out;
}

SubtreeMetrics subtree_metrics(const PartitionSet& partition, std::uint32_t subtree) {
  const Subtree& st = partition.subtrees.at(subtree);
  SubtreeMetrics m;
  m.nodes = st.node_count;
  m.height = partition.forest.node(st.root).height;
  const SearchTree& f = partition.forest;
  for (NodeId id = st.first_node; id < st.first_node + st.node_count; ++id) {
    const auto& n = f.node(id);
    if (n.child_count == 0) {
      ++m.leaves;
      m.leaf_depth_sum += n.depth;
      continue;
    }
    const auto kids = f.children(id);
    if (std::all_of(kids.begin(), kids.end(), [&](NodeId c) { return f.node(c).child_count == 0; })) {
      m.ready_leaves += n.child_count;
    }
  }
  if (st.node_count == 1) m.ready_leaves = 1;
  return m;
}

std::vector<SubtreeMetrics> all_subtree_metrics(const PartitionSet& partition) {
  std::vector<SubtreeMetrics> out;
  out.reserve(partition.subtrees.size());
  for (std::uint32_t s = 0; s < partition.subtrees.size(); ++s) out.push_back(subtree_metrics(partition, s));
  return out;
}

bool partition_is_consistent(const PartitionSet& partition) {
  if (partition.subtree_of.size() != partition.forest.size()) return false;
  for (std::uint32_t s = 0; s < partition.subtrees.size(); ++s) {
    const auto& st = partition.subtrees[s];
    if (st.root != st.first_node) return false;
    for (NodeId id = st.first_node; id < st.first_node + st.node_count; ++id) {
      if (partition.subtree_of[id] != s) return false;
      const NodeId parent = partition.forest.node(id).parent;
      if (id != st.root && (parent == kNoNode || partition.subtree_of[parent] != s)) return false;
    }
  }
  for (auto e : partition.index) {
    if (e != PartitionSet::kNoSubtree && (e < 0 || static_cast<std::size_t>(e) >= partition.subtrees.size())) {
      return false;
    }
  }
  return true;
}

}  // namespace bipipe
