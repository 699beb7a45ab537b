#include "bipipe/mapping.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <ostream>
#include <queue>
#include <sstream>

namespace bipipe {

std::string_view to_string(Heuristic h) {
  switch (h) {
    case Heuristic::kLargestLeaf: return "largest_leaf";
    case Heuristic::kLeastHeight: return "least_height";
    case Heuristic::kLargestLeafPerHeight: return "largest_leaf_per_height";
    case Heuristic::kLeastAvgDepthPerLeaf: return "least_avg_depth_per_leaf";
  }
  return "?";
}

std::optional<Heuristic> parse_heuristic(std::string_view name) {
  for (auto h : kAllHeuristics) {
    if (to_string(h) == name) return h;
  }
  return std::nullopt;
}

std::string_view to_string(Direction d) { return d == Direction::kForward ? "forward" : "reverse"; }

std::string_view to_string(Violation::Kind kind) {
  switch (kind) {
    case Violation::Kind::kUnassigned: return "unassigned";
    case Violation::Kind::kDuplicate: return "duplicate";
    case Violation::Kind::kStageRange: return "stage_range";
    case Violation::Kind::kOrder: return "order";
    case Violation::Kind::kAddress: return "address";
    case Violation::Kind::kDit: return "dit";
    case Violation::Kind::kSiblingSplit: return "sibling_split";
  }
  return "?";
}

std::vector<std::uint32_t> inversion_order(std::span<const SubtreeMetrics> metrics, Heuristic heuristic) {
  std::vector<std::uint32_t> order(metrics.size());
  std::iota(order.begin(), order.end(), 0u);
  // true when a is strictly preferred over b
  auto better = [&](std::uint32_t a, std::uint32_t b) {
    const auto& ma = metrics[a];
    const auto& mb = metrics[b];
    switch (heuristic) {
      case Heuristic::kLargestLeaf: return ma.leaves > mb.leaves;
      case Heuristic::kLeastHeight: return ma.height < mb.height;
      case Heuristic::kLargestLeafPerHeight: {
        const std::uint64_t ha = std::max<std::uint32_t>(ma.height, 1);
        const std::uint64_t hb = std::max<std::uint32_t>(mb.height, 1);
        return std::uint64_t{ma.leaves} * hb > std::uint64_t{mb.leaves} * ha;
      }
      case Heuristic::kLeastAvgDepthPerLeaf:
        return ma.leaf_depth_sum * mb.leaves < mb.leaf_depth_sum * ma.leaves;
    }
    return false;
  };
  std::stable_sort(order.begin(), order.end(), better);
  return order;
}

std::vector<std::uint32_t> select_inversions(std::span<const SubtreeMetrics> metrics, Heuristic heuristic,
                                             double ifr, unsigned stages, std::size_t total_nodes,
                                             FirstStageEstimate estimate) {
  if (stages == 0) throw std::invalid_argument("stage count must be positive");
  if (ifr < 0) throw std::invalid_argument("inversion factor must be non-negative");
  const auto order = inversion_order(metrics, heuristic);
  const std::size_t k = metrics.size();
  const double limit = ifr * static_cast<double>((total_nodes + stages - 1) / stages);
  std::vector<std::uint32_t> picked;
  double w = static_cast<double>(k);
  while (picked.size() < k && w < limit) {
    const auto s = order[picked.size()];
    picked.push_back(s);
    const auto grown = estimate == FirstStageEstimate::kAllLeaves ? metrics[s].leaves : metrics[s].ready_leaves;
    w += static_cast<double>(grown) - 1.0;
  }
  return picked;
}

std::vector<std::uint32_t> select_inversions(const PartitionSet& partition, Heuristic heuristic, double ifr,
                                             unsigned stages, FirstStageEstimate estimate) {
  const auto metrics = all_subtree_metrics(partition);
  return select_inversions(metrics, heuristic, ifr, stages, partition.node_count(), estimate);
}

namespace {

// Mapping units: a subtree root alone, or all children of one internal node
// (single nodes when sibling blocks are off).
// Children are contiguous in the forest, so a unit is an id range and units
// sorted by first id follow the forest's tie-break order.
struct Units {
  std::vector<NodeId> first;
  std::vector<std::uint32_t> size;
  std::vector<std::uint32_t> unit_of;        // per node
};

Units build_units(const SearchTree& forest, bool sibling_blocks) {
  Units u;
  const std::size_t n = forest.size();
  u.unit_of.assign(n, kNoNode);
  for (NodeId id = 0; id < n; ++id) {
    const auto& node = forest.node(id);
    const bool starts = !sibling_blocks || node.parent == kNoNode || forest.children(node.parent).front() == id;
    if (starts) {
      u.first.push_back(id);
      u.size.push_back(!sibling_blocks || node.parent == kNoNode ? 1u : forest.node(node.parent).child_count);
    }
    u.unit_of[id] = static_cast<std::uint32_t>(u.first.size() - 1);
  }
  return u;
}

void fill_dit(const PartitionSet& partition, MappingResult& m) {
  m.dit.resize(partition.subtrees.size());
  for (std::uint32_t s = 0; s < partition.subtrees.size(); ++s) {
    const auto& p = m.placement[partition.subtrees[s].root];
    DitRecord rec;
    rec.direction = m.direction[s];
    rec.root_stage = p.stage;
    rec.root_addr = p.addr;
    rec.distance = static_cast<std::uint16_t>(rec.direction == Direction::kForward ? p.stage - 1
                                                                                   : m.stages - p.stage);
    m.dit[s] = rec;
  }
}

}  // namespace

MappingResult map_bidirectional(const PartitionSet& partition, std::span<const std::uint32_t> inverted,
                                unsigned stages, const BidirOptions& options) {
  if (stages == 0) throw std::invalid_argument("stage count must be positive");
  const SearchTree& forest = partition.forest;
  const std::size_t total = forest.size();

  MappingResult m;
  m.stages = stages;
  m.stage_nodes.resize(stages);
  m.critical_pops.assign(stages, 0);
  m.placement.assign(total, NodePlacement{});
  m.direction.assign(partition.subtrees.size(), Direction::kForward);
  for (auto s : inverted) m.direction.at(s) = Direction::kReverse;

  const Units units = build_units(forest, options.sibling_blocks);
  const std::size_t nunits = units.first.size();
  auto reverse_unit = [&](std::uint32_t u) {
    return m.direction[partition.subtree_of[units.first[u]]] == Direction::kReverse;
  };
  std::vector<std::uint32_t> priority(nunits, 0);
  std::vector<std::uint32_t> pending(nunits, 0);  // reverse: child units still unplaced
  unsigned max_priority = 0;
  for (std::uint32_t u = 0; u < nunits; ++u) {
    const bool rev = reverse_unit(u);
    for (NodeId id = units.first[u]; id < units.first[u] + units.size[u]; ++id) {
      const auto& n = forest.node(id);
      priority[u] = std::max<std::uint32_t>(priority[u], rev ? n.depth : n.height);
      if (rev) pending[u] += options.sibling_blocks ? n.child_count > 0 : n.child_count;
    }
    max_priority = std::max(max_priority, priority[u]);
  }

  // Ready list: one min-heap of unit ids per priority value.
  using MinHeap = std::priority_queue<std::uint32_t, std::vector<std::uint32_t>, std::greater<>>;
  std::vector<MinHeap> buckets(max_priority + 1);
  std::size_t ready_count = 0;
  int top = -1;
  auto push_ready = [&](std::uint32_t u) {
    buckets[priority[u]].push(u);
    ++ready_count;
    top = std::max(top, static_cast<int>(priority[u]));
  };
  auto top_priority = [&]() -> int {
    while (top >= 0 && buckets[top].empty()) --top;
    return top;
  };

  for (std::uint32_t u = 0; u < nunits; ++u) {
    const bool is_root_unit = forest.node(units.first[u]).parent == kNoNode;
    if (reverse_unit(u) ? pending[u] == 0 : is_root_unit) push_ready(u);
  }

  std::vector<std::uint32_t> next_ready;
  std::size_t remaining_nodes = total;
  for (unsigned stage = 1; stage <= stages; ++stage) {
    const unsigned remaining_stages = stages - stage + 1;
    if (ready_count > 0 && top_priority() > static_cast<int>(remaining_stages) - 1) {
      const auto u = buckets[top_priority()].top();
      throw MappingError("node " + std::to_string(units.first[u]) + " needs " + std::to_string(priority[u]) +
                             " more stages after stage " + std::to_string(stage) + " but only " +
                             std::to_string(remaining_stages - 1) + " remain",
                         units.first[u]);
    }
    const std::size_t target = (remaining_nodes + remaining_stages - 1) / remaining_stages;
    std::size_t placed = 0;
    std::uint32_t addr = 0;
    bool critical = false;
    auto& stage_list = m.stage_nodes[stage - 1];
    while (critical || (placed < target && ready_count > 0)) {
      const int p = top_priority();
      const std::uint32_t u = buckets[p].top();
      buckets[p].pop();
      --ready_count;
      if (placed >= target) m.critical_pops[stage - 1] += units.size[u];

      for (NodeId id = units.first[u]; id < units.first[u] + units.size[u]; ++id) {
        m.placement[id] = NodePlacement{static_cast<std::uint16_t>(stage), addr++};
        stage_list.push_back(id);
      }
      placed += units.size[u];

      if (!reverse_unit(u)) {
        for (NodeId id = units.first[u]; id < units.first[u] + units.size[u]; ++id) {
          const auto kids = forest.children(id);
          for (std::size_t k = 0; k < kids.size(); k += options.sibling_blocks ? kids.size() : 1) {
            next_ready.push_back(units.unit_of[kids[k]]);
          }
        }
      } else {
        const NodeId parent = forest.node(units.first[u]).parent;
        if (parent != kNoNode) {
          const auto pu = units.unit_of[parent];
          if (--pending[pu] == 0) next_ready.push_back(pu);
        }
      }
      critical = ready_count > 0 && top_priority() >= static_cast<int>(remaining_stages) - 1;
    }
    remaining_nodes -= placed;
    for (auto u : next_ready) push_ready(u);
    next_ready.clear();
  }
  if (remaining_nodes > 0) {
    NodeId missing = 0;
    while (missing < total && m.placement[missing].stage != 0) ++missing;
    throw MappingError(std::to_string(remaining_nodes) + " nodes left unmapped after " + std::to_string(stages) +
                           " stages (first: node " + std::to_string(missing) + ")",
                       missing);
  }
  fill_dit(partition, m);
  return m;
}

MappingResult map_level_by_level(const PartitionSet& partition, unsigned stages, LevelMode mode) {
  if (stages == 0) throw std::invalid_argument("stage count must be positive");
  const SearchTree& forest = partition.forest;
  MappingResult m;
  m.stages = stages;
  m.stage_nodes.resize(stages);
  m.critical_pops.assign(stages, 0);
  m.placement.assign(forest.size(), NodePlacement{});
  m.direction.assign(partition.subtrees.size(),
                     mode == LevelMode::kDepth ? Direction::kForward : Direction::kReverse);
  std::vector<std::uint32_t> next_addr(stages, 0);
  for (NodeId id = 0; id < forest.size(); ++id) {
    const auto& n = forest.node(id);
    const unsigned level = mode == LevelMode::kDepth ? n.depth : n.height;
    if (level >= stages) {
      throw MappingError("node " + std::to_string(id) + " at level " + std::to_string(level) + " does not fit " +
                             std::to_string(stages) + " stages",
                         id);
    }
    m.placement[id] = NodePlacement{static_cast<std::uint16_t>(level + 1), next_addr[level]++};
    m.stage_nodes[level].push_back(id);
  }
  fill_dit(partition, m);
  return m;
}

ValidationReport validate_mapping(const PartitionSet& partition, const MappingResult& mapping) {
  ValidationReport r;
  const SearchTree& forest = partition.forest;
  const std::size_t n = forest.size();
  auto add = [&](Violation::Kind k, NodeId id, std::string detail) {
    r.violations.push_back(Violation{k, id, std::move(detail)});
  };
  if (mapping.placement.size() != n) {
    add(Violation::Kind::kUnassigned, kNoNode, "placement table size mismatch");
    return r;
  }

  std::vector<std::uint32_t> seen(n, 0);
  for (unsigned s = 1; s <= mapping.stages && s <= mapping.stage_nodes.size(); ++s) {
    std::vector<std::uint32_t> addrs;
    for (NodeId id : mapping.stage_nodes[s - 1]) {
      if (id >= n) {
        add(Violation::Kind::kStageRange, id, "unknown node in stage list");
        continue;
      }
      ++seen[id];
      if (mapping.placement[id].stage != s) {
        add(Violation::Kind::kDuplicate, id, "stage list and placement disagree");
      }
      addrs.push_back(mapping.placement[id].addr);
    }
    std::sort(addrs.begin(), addrs.end());
    if (std::adjacent_find(addrs.begin(), addrs.end()) != addrs.end()) {
      add(Violation::Kind::kAddress, kNoNode, "duplicate address in stage " + std::to_string(s));
    }
  }
  for (NodeId id = 0; id < n; ++id) {
    const auto st = mapping.placement[id].stage;
    if (st == 0 || st > mapping.stages) {
      add(Violation::Kind::kStageRange, id, "stage " + std::to_string(st) + " out of range");
    }
    if (seen[id] == 0) add(Violation::Kind::kUnassigned, id, "node not in any stage");
    if (seen[id] > 1) add(Violation::Kind::kDuplicate, id, "node assigned " + std::to_string(seen[id]) + " times");

    const NodeId parent = forest.node(id).parent;
    if (parent == kNoNode) continue;
    const auto dir = mapping.direction[partition.subtree_of[id]];
    const auto ps = mapping.placement[parent].stage;
    const bool ok = dir == Direction::kForward ? ps < st : st < ps;
    if (!ok) {
      add(Violation::Kind::kOrder, id,
          "parent " + std::to_string(parent) + " at stage " + std::to_string(ps) + ", child at stage " +
              std::to_string(st) + " in " + std::string(to_string(dir)) + " subtree");
    }
  }
  for (NodeId id = 0; id < n; ++id) {
    const auto kids = forest.children(id);
    if (kids.empty()) continue;
    const auto& first = mapping.placement[kids.front()];
    for (std::size_t k = 1; k < kids.size(); ++k) {
      const auto& p = mapping.placement[kids[k]];
      if (p.stage != first.stage || p.addr != first.addr + k) {
        r.layout_warnings.push_back(Violation{Violation::Kind::kSiblingSplit, id,
                                              "children of node " + std::to_string(id) +
                                                  " are not one contiguous block"});
        break;
      }
    }
  }
  if (mapping.dit.size() != partition.subtrees.size()) {
    add(Violation::Kind::kDit, kNoNode, "DIT size mismatch");
  } else {
    for (std::uint32_t s = 0; s < partition.subtrees.size(); ++s) {
      const auto& d = mapping.dit[s];
      const auto& p = mapping.placement[partition.subtrees[s].root];
      const unsigned expect = d.direction == Direction::kForward ? p.stage - 1u : mapping.stages - p.stage;
      if (d.direction != mapping.direction[s] || d.root_stage != p.stage || d.root_addr != p.addr ||
          d.distance != expect) {
        add(Violation::Kind::kDit, partition.subtrees[s].root, "DIT record disagrees with root placement");
      }
    }
  }
  return r;
}

BalanceReport balance_report(const MappingResult& mapping) {
  BalanceReport r;
  for (const auto& s : mapping.stage_nodes) r.counts.push_back(s.size());
  r.total = std::accumulate(r.counts.begin(), r.counts.end(), std::size_t{0});
  r.max = r.counts.empty() ? 0 : *std::max_element(r.counts.begin(), r.counts.end());
  const std::size_t h = std::max<std::size_t>(mapping.stages, 1);
  r.mean = static_cast<double>(r.total) / static_cast<double>(h);
  r.ceil_target = (r.total + h - 1) / h;
  r.max_over_mean = r.total ? static_cast<double>(r.max) / r.mean : 0.0;
  r.max_over_ceil = r.ceil_target ? static_cast<double>(r.max) / static_cast<double>(r.ceil_target) : 0.0;
  return r;
}

void write_balance_csv(std::ostream& os, const BalanceReport& report) {
  os << "stage,count\n";
  for (std::size_t i = 0; i < report.counts.size(); ++i) os << (i + 1) << ',' << report.counts[i] << '\n';
}

std::string balance_csv_row(std::string_view label, const BalanceReport& report) {
  std::ostringstream os;
  os.precision(6);
  os << label << ',' << report.counts.size() << ',' << report.total << ',' << report.max << ',' << report.mean
     << ',' << report.max_over_mean << ',' << report.max_over_ceil;
  return os.str();
}

std::string_view to_string(MapMode m) {
  switch (m) {
    case MapMode::kBidirectional: return "bidir";
    case MapMode::kDepth: return "depth";
    case MapMode::kHeight: return "height";
  }
  return "?";
}

std::optional<MapMode> parse_map_mode(std::string_view name) {
  for (auto m : {MapMode::kBidirectional, MapMode::kDepth, MapMode::kHeight}) {
    if (to_string(m) == name) return m;
  }
  return std::nullopt;
}

MappedTree map_tree(const SearchTree& tree, const MapParams& params) {
  MappedTree out;
  out.partition = tree.kind() == TreeKind::kTrie ? partition_trie(tree, params.initial_bits) : partition_dtree(tree);
  switch (params.mode) {
    case MapMode::kBidirectional:
      out.inverted = select_inversions(out.partition, params.heuristic, params.ifr, params.stages,
                                       params.sibling_blocks ? FirstStageEstimate::kReadyLeaves
                                                             : FirstStageEstimate::kAllLeaves);
      out.mapping = map_bidirectional(out.partition, out.inverted, params.stages, {params.sibling_blocks});
      break;
    case MapMode::kDepth:
      out.mapping = map_level_by_level(out.partition, params.stages, LevelMode::kDepth);
      break;
    case MapMode::kHeight:
      out.mapping = map_level_by_level(out.partition, params.stages, LevelMode::kHeight);
      for (std::uint32_t s = 0; s < out.partition.subtrees.size(); ++s) out.inverted.push_back(s);
      break;
  }
  return out;
}

void write_mapping_dump(std::ostream& os, const PartitionSet& partition, const MappingResult& mapping) {
  os << "node_id,stage,addr,direction\n";
  for (NodeId id = 0; id < mapping.placement.size(); ++id) {
    const auto& p = mapping.placement[id];
    os << id << ',' << p.stage << ',' << p.addr << ',' << to_string(mapping.direction[partition.subtree_of[id]])
       << '\n';
  }
}

}  // namespace bipipe
