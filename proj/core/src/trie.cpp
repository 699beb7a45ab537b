#include "bipipe/trie.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>
#include <string>

namespace bipipe {

namespace {

struct RawNode {
  std::array<std::uint32_t, 2> child{kNoNode, kNoNode};
  std::uint32_t payload = kNoPayload;
};

}  // namespace

SearchTree build_subtrie(std::span<const Prefix> prefixes, std::uint32_t base, unsigned start_bit,
                         Answer inherited_hop, unsigned key_width) {
  if (key_width == 0 || key_width > 32) throw std::invalid_argument("key width must be in 1..32");
  std::vector<RawNode> raw(1);
  if (inherited_hop) raw[0].payload = *inherited_hop;
  bool root_explicit = false;

  for (const auto& p : prefixes) {
    if (p.length > key_width) {
      throw std::invalid_argument("prefix " + format_prefix_key(p) + " longer than key width " +
                                  std::to_string(key_width));
    }
    if (p.length < start_bit || ((p.bits ^ base) & prefix_mask(start_bit)) != 0) {
      throw std::invalid_argument("prefix " + format_prefix_key(p) + " outside the subtrie region");
    }
    std::uint32_t cur = 0;
    for (unsigned i = start_bit; i < p.length; ++i) {
      const unsigned b = msb_bit(p.bits, i);
      if (raw[cur].child[b] == kNoNode) {
        raw[cur].child[b] = static_cast<std::uint32_t>(raw.size());
        raw.emplace_back();
      }
      cur = raw[cur].child[b];
    }
    if (cur == 0) {
      if (root_explicit) throw std::invalid_argument("duplicate prefix " + format_prefix_key(p));
      root_explicit = true;
      raw[0].payload = p.next_hop;
      continue;
    }
    if (raw[cur].payload != kNoPayload) throw std::invalid_argument("duplicate prefix " + format_prefix_key(p));
    raw[cur].payload = p.next_hop;
  }

  // Relabel in breadth-first order.
  SearchTree tree(TreeKind::kTrie);
  tree.key_width = key_width;
  tree.bit_offset = start_bit;
  std::vector<NodeId> order{0};
  std::vector<NodeId> new_id(raw.size(), kNoNode);
  for (std::size_t head = 0; head < order.size(); ++head) {
    const auto& r = raw[order[head]];
    const bool has_child = r.child[0] != kNoNode || r.child[1] != kNoNode;
    new_id[order[head]] = tree.add_node(has_child ? NodeKind::kInternal
                                        : r.payload != kNoPayload ? NodeKind::kLeaf
                                                                  : NodeKind::kNull,
                                        r.payload);
    for (auto c : r.child) {
      if (c != kNoNode) order.push_back(c);
    }
  }
  for (NodeId old : order) {
    const auto& r = raw[old];
    if (r.child[0] == kNoNode && r.child[1] == kNoNode) continue;
    const std::array<NodeId, 2> kids{r.child[0] == kNoNode ? kNoNode : new_id[r.child[0]],
                                     r.child[1] == kNoNode ? kNoNode : new_id[r.child[1]]};
    tree.set_children(new_id[old], kids);
  }
  tree.add_root(0);
  tree.finalize();
  return tree;
}

SearchTree build_unibit_trie(std::span<const Prefix> prefixes, unsigned key_width) {
  return build_subtrie(prefixes, 0, 0, std::nullopt, key_width);
}

SearchTree leaf_push(const SearchTree& raw) {
  SearchTree out(TreeKind::kTrie);
  out.key_width = raw.key_width;
  out.bit_offset = raw.bit_offset;

  struct Item {
    NodeId src;  // kNoNode for a synthesized leaf
    std::uint32_t inherited;
  };
  std::vector<Item> queue;
  queue.push_back({raw.root(), kNoPayload});
  std::vector<NodeId> out_ids;

  // First pass assigns breadth-first ids; children of item k are appended
  // contiguously so sibling pairs stay adjacent.
  std::vector<std::array<std::uint32_t, 2>> kids;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const Item it = queue[head];
    std::uint32_t hop = it.inherited;
    bool internal = false;
    if (it.src != kNoNode) {
      const auto& n = raw.node(it.src);
      if (n.payload != kNoPayload) hop = n.payload;
      for (NodeId c : raw.children(it.src)) internal |= (c != kNoNode);
    }
    if (!internal) {
      out_ids.push_back(out.add_node(hop == kNoPayload ? NodeKind::kNull : NodeKind::kLeaf, hop));
      kids.push_back({kNoNode, kNoNode});
      continue;
    }
    out_ids.push_back(out.add_node(NodeKind::kInternal));
    const auto ch = raw.children(it.src);
    std::array<std::uint32_t, 2> k{};
    for (unsigned b = 0; b < 2; ++b) {
      k[b] = static_cast<std::uint32_t>(queue.size());
      queue.push_back({b < ch.size() ? ch[b] : kNoNode, hop});
    }
    kids.push_back(k);
  }
  for (std::size_t i = 0; i < queue.size(); ++i) {
    if (kids[i][0] == kNoNode) continue;
    const std::array<NodeId, 2> c{out_ids[kids[i][0]], out_ids[kids[i][1]]};
    out.set_children(out_ids[i], c);
  }
  out.add_root(out_ids.front());
  out.finalize();
  return out;
}

Answer trie_lookup(const SearchTree& trie, std::uint32_t address) {
  Answer best;
  NodeId cur = trie.root();
  unsigned bit = trie.bit_offset;
  while (cur != kNoNode) {
    const auto& n = trie.node(cur);
    if (n.payload != kNoPayload) best = n.payload;
    if (n.kind != NodeKind::kInternal || bit >= 32) break;
    const auto kids = trie.children(cur);
    const unsigned b = msb_bit(address, bit++);
    cur = b < kids.size() ? kids[b] : kNoNode;
  }
  return best;
}

Answer lpm_linear_scan(std::span<const Prefix> prefixes, std::uint32_t address) {
  Answer best;
  int best_len = -1;
  for (const auto& p : prefixes) {
    if (p.matches(address) && static_cast<int>(p.length) > best_len) {
      best_len = p.length;
      best = p.next_hop;
    }
  }
  return best;
}

LpmIndex::LpmIndex(std::span<const Prefix> prefixes) {
  for (const auto& p : prefixes) insert(p);
}

Answer LpmIndex::insert(const Prefix& p) {
  auto& table = by_length_[p.length];
  const auto [it, inserted] = table.try_emplace(p.bits, p.next_hop);
  if (inserted) {
    ++size_;
    return std::nullopt;
  }
  const Answer old = it->second;
  it->second = p.next_hop;
  return old;
}

Answer LpmIndex::erase(const Prefix& p) {
  auto& table = by_length_[p.length];
  const auto it = table.find(p.bits & prefix_mask(p.length));
  if (it == table.end()) return std::nullopt;
  const Answer old = it->second;
  table.erase(it);
  --size_;
  return old;
}

Answer LpmIndex::lookup(std::uint32_t address) const {
  for (int len = static_cast<int>(kMaxPrefixLength); len >= 0; --len) {
    const auto& table = by_length_[len];
    if (table.empty()) continue;
    const auto it = table.find(address & prefix_mask(static_cast<unsigned>(len)));
    if (it != table.end()) return it->second;
  }
  return std::nullopt;
}

Answer LpmIndex::covering(std::uint32_t bits, unsigned length) const {
  for (int len = static_cast<int>(length) - 1; len >= 0; --len) {
    const auto& table = by_length_[len];
    if (table.empty()) continue;
    const auto it = table.find(bits & prefix_mask(static_cast<unsigned>(len)));
    if (it != table.end()) return it->second;
  }
  return std::nullopt;
}

Answer LpmIndex::find(const Prefix& key) const {
  const auto& table = by_length_[key.length];
  const auto it = table.find(key.bits & prefix_mask(key.length));
  return it == table.end() ? Answer{} : Answer{it->second};
}

std::vector<Prefix> LpmIndex::within(std::uint32_t bits, unsigned length) const {
  std::vector<Prefix> out;
  const std::uint32_t mask = prefix_mask(length);
  for (unsigned len = length; len <= kMaxPrefixLength; ++len) {
    for (const auto& [b, hop] : by_length_[len]) {
      if (((b ^ bits) & mask) == 0) out.push_back(Prefix{b, static_cast<std::uint8_t>(len), hop});
    }
  }
  return out;
}

std::vector<Prefix> LpmIndex::prefixes() const {
  std::vector<Prefix> out;
  out.reserve(size_);
  for (unsigned len = 0; len <= kMaxPrefixLength; ++len) {
    for (const auto& [bits, hop] : by_length_[len]) {
      out.push_back(Prefix{bits, static_cast<std::uint8_t>(len), hop});
    }
  }
  std::sort(out.begin(), out.end(), [](const Prefix& a, const Prefix& b) {
    return a.length != b.length ? a.length < b.length : a.bits < b.bits;
  });
  return out;
}

}  // namespace bipipe
