#include "bipipe/dtree.hpp"

#include <algorithm>
#include <deque>
#include <numeric>
#include <stdexcept>

namespace bipipe {

namespace {

using Region = std::array<Range, kNumFields>;

std::uint64_t span_of(const Range& r) { return static_cast<std::uint64_t>(r.hi) - r.lo + 1; }

struct CutScore {
  std::uint64_t total = 0;  // sum of rules over children
  std::uint64_t max_child = 0;
  std::uint64_t min_child = 0;
  std::uint32_t cells = 1;
  double mean() const { return static_cast<double>(total) / cells; }
};

// Builds a dimension only if every one of its cells is non-empty.
std::optional<CutDim> make_dim(const Region& region, Field f, std::uint32_t parts) {
  const Range& r = region[static_cast<std::size_t>(f)];
  const std::uint64_t size = span_of(r);
  if (parts < 2 || parts > size) return std::nullopt;
  const std::uint64_t width = (size + parts - 1) / parts;
  if ((parts - 1) * width >= size) return std::nullopt;
  return CutDim{f, r.lo, width, parts};
}

std::pair<std::uint32_t, std::uint32_t> cell_span(const CutDim& d, const Range& clipped) {
  auto cell = [&](std::uint32_t v) {
    const std::uint64_t k = (static_cast<std::uint64_t>(v) - d.lo) / d.width;
    return static_cast<std::uint32_t>(std::min<std::uint64_t>(k, d.parts - 1));
  };
  return {cell(clipped.lo), cell(clipped.hi)};
}

Range clip(const Range& r, const Range& region) {
  return Range{std::max(r.lo, region.lo), std::min(r.hi, region.hi)};
}

// Calls fn(cell) for every child cell the rule intersects.
template <typename Fn>
void for_each_cell(const Cut& cut, const Region& region, const Rule& rule, Fn&& fn) {
  std::array<std::pair<std::uint32_t, std::uint32_t>, 2> spans{};
  const std::size_t nd = cut.dims.size();
  for (std::size_t i = 0; i < nd; ++i) {
    const auto f = static_cast<std::size_t>(cut.dims[i].field);
    spans[i] = cell_span(cut.dims[i], clip(rule.fields[f], region[f]));
  }
  if (nd == 1) {
    for (auto a = spans[0].first; a <= spans[0].second; ++a) fn(a);
    return;
  }
  for (auto a = spans[0].first; a <= spans[0].second; ++a) {
    for (auto b = spans[1].first; b <= spans[1].second; ++b) fn(a * cut.dims[1].parts + b);
  }
}

CutScore score(const Cut& cut, const Region& region, std::span<const Rule> rules,
               std::span<const std::uint32_t> members) {
  CutScore s;
  s.cells = cut.cells();
  std::vector<std::uint64_t> counts(s.cells, 0);
  for (auto idx : members) {
    for_each_cell(cut, region, rules[idx], [&](std::uint32_t c) { ++counts[c]; });
  }
  s.total = std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
  s.max_child = *std::max_element(counts.begin(), counts.end());
  s.min_child = *std::min_element(counts.begin(), counts.end());
  return s;
}

std::optional<Cut> choose_cut(const Region& region, std::span<const Rule> rules,
                              std::span<const std::uint32_t> members, const DTreeParams& params) {
  // Rank fields by distinct rule endpoints strictly inside the region.
  std::array<std::size_t, kNumFields> endpoints{};
  std::vector<std::uint64_t> pts;
  for (std::size_t f = 0; f < kNumFields; ++f) {
    pts.clear();
    const Range& reg = region[f];
    for (auto idx : members) {
      const Range c = clip(rules[idx].fields[f], reg);
      if (c.lo > reg.lo) pts.push_back(c.lo);
      if (c.hi < reg.hi) pts.push_back(static_cast<std::uint64_t>(c.hi) + 1);
    }
    std::sort(pts.begin(), pts.end());
    endpoints[f] = static_cast<std::size_t>(std::unique(pts.begin(), pts.end()) - pts.begin());
  }
  std::array<std::size_t, kNumFields> order{};
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return endpoints[a] > endpoints[b]; });
  if (endpoints[order[0]] == 0 || params.max_cut_fanout < 2) return std::nullopt;

  // Rule copies plus child pointers may not exceed space_factor per rule;
  // the smallest cut is always allowed.
  const double space_limit = params.space_factor * static_cast<double>(members.size());
  auto within_space = [&](const CutScore& s) { return static_cast<double>(s.total + s.cells) <= space_limit; };

  const auto f1 = static_cast<Field>(order[0]);
  auto d1 = make_dim(region, f1, 2);
  if (!d1) return std::nullopt;
  Cut best{{*d1}};
  CutScore best_score = score(best, region, rules, members);

  for (std::uint32_t parts = 4; parts <= params.max_cut_fanout; parts *= 2) {
    auto d = make_dim(region, f1, parts);
    if (!d) break;
    Cut cand{{*d}};
    const CutScore s = score(cand, region, rules, members);
    if (s.mean() >= best_score.mean() || !within_space(s)) break;
    best = cand;
    best_score = s;
  }

  if (endpoints[order[1]] > 0 && best.cells() * 2 <= params.max_cut_fanout) {
    const auto f2 = static_cast<Field>(order[1]);
    for (std::uint32_t parts = 2; best.dims[0].parts * parts <= params.max_cut_fanout; parts *= 2) {
      auto d = make_dim(region, f2, parts);
      if (!d) break;
      Cut cand{{best.dims[0], *d}};
      const CutScore s = score(cand, region, rules, members);
      if (s.mean() >= best_score.mean() || !within_space(s)) break;
      best = cand;
      best_score = s;
    }
  }
  // The largest child keeps every rule: this cut does not shrink the bucket.
  if (best_score.max_child == members.size()) return std::nullopt;
  return best;
}

}  // namespace

std::array<Range, kNumFields> full_region() {
  Region r{};
  for (std::size_t f = 0; f < kNumFields; ++f) r[f] = Range{0, field_max(static_cast<Field>(f))};
  return r;
}

SearchTree build_hypercuts(std::span<const Rule> input, const DTreeParams& params) {
  if (input.empty()) throw std::invalid_argument("decision tree needs at least one rule");
  SearchTree tree(TreeKind::kDecisionTree);
  tree.rules.assign(input.begin(), input.end());
  std::stable_sort(tree.rules.begin(), tree.rules.end(),
                   [](const Rule& a, const Rule& b) { return a.priority < b.priority; });
  for (const auto& r : tree.rules) {
    for (const auto& f : r.fields) {
      if (f.lo > f.hi) throw std::invalid_argument("rule " + std::to_string(r.id) + " has an inverted range");
    }
  }

  struct Work {
    NodeId node;
    Region region;
    std::vector<std::uint32_t> members;
    unsigned depth;
  };
  std::deque<Work> queue;
  std::vector<std::uint32_t> all(tree.rules.size());
  std::iota(all.begin(), all.end(), 0u);
  const NodeId root = tree.add_node(NodeKind::kNull);
  tree.add_root(root);
  queue.push_back({root, full_region(), std::move(all), 0});

  while (!queue.empty()) {
    Work w = std::move(queue.front());
    queue.pop_front();
    std::optional<Cut> cut;
    if (w.members.size() > params.bucket_capacity && w.depth < params.max_depth) {
      cut = choose_cut(w.region, tree.rules, w.members, params);
    }
    if (!cut) {
      auto& n = tree.node(w.node);
      if (w.members.empty()) {
        n.kind = NodeKind::kNull;
      } else {
        n.kind = NodeKind::kLeaf;
        n.payload = static_cast<std::uint32_t>(tree.buckets.size());
        tree.buckets.push_back(std::move(w.members));
      }
      continue;
    }

    const std::uint32_t cells = cut->cells();
    std::vector<std::vector<std::uint32_t>> child_members(cells);
    for (auto idx : w.members) {
      for_each_cell(*cut, w.region, tree.rules[idx], [&](std::uint32_t c) { child_members[c].push_back(idx); });
    }
    std::vector<NodeId> kids(cells);
    for (auto& k : kids) k = tree.add_node(NodeKind::kNull);
    tree.node(w.node).kind = NodeKind::kInternal;
    tree.node(w.node).cut = static_cast<std::uint32_t>(tree.cuts.size());
    tree.set_children(w.node, kids);

    for (std::uint32_t c = 0; c < cells; ++c) {
      Region child = w.region;
      std::uint32_t rem = c;
      for (std::size_t i = cut->dims.size(); i-- > 0;) {
        const auto& d = cut->dims[i];
        const std::uint32_t k = rem % d.parts;
        rem /= d.parts;
        auto& r = child[static_cast<std::size_t>(d.field)];
        const std::uint64_t lo = d.lo + k * d.width;
        const std::uint64_t hi = std::min<std::uint64_t>(lo + d.width - 1, r.hi);
        r = Range{static_cast<std::uint32_t>(lo), static_cast<std::uint32_t>(hi)};
      }
      queue.push_back({kids[c], child, std::move(child_members[c]), w.depth + 1});
    }
    tree.cuts.push_back(std::move(*cut));
  }
  tree.finalize();
  return tree;
}

std::optional<std::uint32_t> match_bucket(const SearchTree& tree, std::uint32_t bucket, const Header& header) {
  for (auto idx : tree.buckets[bucket]) {
    if (tree.rules[idx].matches(header)) return tree.rules[idx].id;
  }
  return std::nullopt;
}

std::optional<std::uint32_t> classify(const SearchTree& tree, const Header& header) {
  NodeId cur = tree.root();
  for (;;) {
    const auto& n = tree.node(cur);
    switch (n.kind) {
      case NodeKind::kNull: return std::nullopt;
      case NodeKind::kLeaf: return match_bucket(tree, n.payload, header);
      case NodeKind::kInternal: cur = tree.children(cur)[tree.cuts[n.cut].cell_of(header)]; break;
    }
  }
}

std::optional<std::uint32_t> classify_oracle(std::span<const Rule> rules, const Header& header) {
  const Rule* best = nullptr;
  for (const auto& r : rules) {
    if (r.matches(header) && (best == nullptr || r.priority < best->priority)) best = &r;
  }
  return best ? std::optional<std::uint32_t>(best->id) : std::nullopt;
}

}  // namespace bipipe
