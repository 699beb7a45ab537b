#include "bipipe/search_tree.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace bipipe {

NodeId SearchTree::add_node(NodeKind kind, std::uint32_t payload) {
  TreeNode n;
  n.kind = kind;
  n.payload = payload;
  nodes_.push_back(n);
  return static_cast<NodeId>(nodes_.size() - 1);
}

void SearchTree::set_children(NodeId node, std::span<const NodeId> children) {
  auto& n = nodes_[node];
  n.child_begin = static_cast<std::uint32_t>(links_.size());
  n.child_count = static_cast<std::uint32_t>(children.size());
  links_.insert(links_.end(), children.begin(), children.end());
}

NodeId SearchTree::root() const {
  if (roots_.size() != 1) {
    throw std::logic_error("tree has " + std::to_string(roots_.size()) + " roots, expected exactly one");
  }
  return roots_.front();
}

std::vector<NodeId> bfs_order(const SearchTree& tree) {
  std::vector<NodeId> order;
  order.reserve(tree.size());
  for (NodeId r : tree.roots()) order.push_back(r);
  for (std::size_t head = 0; head < order.size(); ++head) {
    for (NodeId c : tree.children(order[head])) {
      if (c != kNoNode) order.push_back(c);
    }
    if (order.size() > tree.size()) throw std::logic_error("search tree contains a cycle or shared node");
  }
  return order;
}

void SearchTree::finalize() {
  for (auto& n : nodes_) n.parent = kNoNode;
  std::vector<char> seen(nodes_.size(), 0);
  for (NodeId r : roots_) {
    if (seen[r]) throw std::logic_error("root listed twice");
    seen[r] = 1;
  }
  const auto order = bfs_order(*this);
  for (NodeId id : order) {
    auto& n = nodes_[id];
    if (n.parent == kNoNode) n.depth = 0;
    for (NodeId c : children(id)) {
      if (c == kNoNode) continue;
      if (seen[c]) throw std::logic_error("node " + std::to_string(c) + " reachable twice");
      seen[c] = 1;
      nodes_[c].parent = id;
      nodes_[c].depth = static_cast<std::uint16_t>(n.depth + 1);
    }
  }
  if (order.size() != nodes_.size()) {
    throw std::logic_error("search tree has " + std::to_string(nodes_.size() - order.size()) +
                           " unreachable nodes");
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    auto& n = nodes_[*it];
    std::uint16_t h = 0;
    bool any = false;
    for (NodeId c : children(*it)) {
      if (c == kNoNode) continue;
      h = std::max<std::uint16_t>(h, nodes_[c].height);
      any = true;
    }
    n.height = any ? static_cast<std::uint16_t>(h + 1) : 0;
  }
}

unsigned SearchTree::height() const { return nodes_[root()].height; }

bool SearchTree::is_leaf_pushed_trie() const {
  for (NodeId id = 0; id < nodes_.size(); ++id) {
    const auto& n = nodes_[id];
    if (n.kind == NodeKind::kInternal) {
      if (n.child_count != 2 || n.payload != kNoPayload) return false;
      for (NodeId c : children(id)) {
        if (c == kNoNode) return false;
      }
    } else if (n.child_count != 0) {
      return false;
    }
  }
  return true;
}

TreeStats tree_stats(const SearchTree& tree) {
  TreeStats s;
  s.total = tree.size();
  unsigned max_depth = 0;
  unsigned max_height = 0;
  for (NodeId id = 0; id < tree.size(); ++id) {
    max_depth = std::max<unsigned>(max_depth, tree.node(id).depth);
    max_height = std::max<unsigned>(max_height, tree.node(id).height);
  }
  s.by_depth.assign(tree.size() ? max_depth + 1 : 0, 0);
  s.by_height.assign(tree.size() ? max_height + 1 : 0, 0);
  for (NodeId id = 0; id < tree.size(); ++id) {
    const auto& n = tree.node(id);
    ++s.by_depth[n.depth];
    ++s.by_height[n.height];
    if (n.child_count == 0) ++s.leaves;
  }
  s.depth = max_depth;
  return s;
}

}  // namespace bipipe
