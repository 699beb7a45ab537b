#include "bipipe/update.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <stdexcept>

namespace bipipe {

std::string_view to_string(PlanStatus s) {
  switch (s) {
    case PlanStatus::kApplied: return "applied";
    case PlanStatus::kNoChange: return "no_change";
    case PlanStatus::kNeedsRemap: return "needs_remap";
  }
  return "?";
}

std::size_t UpdatePlan::entry_writes() const {
  std::size_t n = 0;
  for (const auto& b : bubbles) {
    for (const auto& w : b.writes) n += w.entries.size();
  }
  return n;
}

// Tentative slot allocation for one change; copied back only on success.
struct UpdatePlanner::Allocator {
  std::vector<std::vector<std::uint32_t>> free;
  std::vector<std::uint32_t> tail;
  std::uint32_t capacity = 0;

  std::optional<std::uint32_t> take_pair(unsigned stage) {
    auto& f = free[stage - 1];
    if (!f.empty()) {
      const auto b = f.back();
      f.pop_back();
      return b;
    }
    if (tail[stage - 1] + 2 <= capacity) {
      const auto b = tail[stage - 1];
      tail[stage - 1] += 2;
      return b;
    }
    return std::nullopt;
  }
};

namespace {

struct SingleWrite {
  std::uint16_t stage;
  std::uint32_t addr;
  StageEntry entry;
  bool fresh;
};

StageEntry leaf_entry(const TreeNode& n) {
  StageEntry e;
  e.kind = n.kind;
  if (n.kind == NodeKind::kLeaf) e.payload = n.payload;
  return e;
}

// Walks the current image subtree alongside the desired subtrie and records
// the entry writes that turn one into the other.
struct Differ {
  const PipelineImage& img;
  const SearchTree& want;
  Direction dir;
  UpdatePlanner::Allocator& alloc;
  std::vector<SingleWrite>& writes;
  std::vector<std::pair<std::uint16_t, std::uint32_t>>& freed;
  std::string failure;

  unsigned child_stage(unsigned s, const StageEntry& e) const {
    return dir == Direction::kForward ? s + e.child_skip + 1 : s - e.child_skip - 1;
  }

  void release(unsigned s, std::uint32_t a) {
    const StageEntry& e = img.memory[s - 1][a];
    if (e.kind != NodeKind::kInternal) return;
    const unsigned cs = child_stage(s, e);
    freed.emplace_back(static_cast<std::uint16_t>(cs), e.child_base);
    release(cs, e.child_base);
    release(cs, e.child_base + 1);
  }

  bool place(NodeId n, unsigned s, std::uint32_t a, bool fresh) {
    const TreeNode& node = want.node(n);
    if (node.kind != NodeKind::kInternal) {
      writes.push_back({static_cast<std::uint16_t>(s), a, leaf_entry(node), fresh});
      return true;
    }
    const int below = node.height - 1;  // stages the child block still needs after its own
    const int h = static_cast<int>(img.stages);
    for (int k = 1;; ++k) {
      const int cs = dir == Direction::kForward ? static_cast<int>(s) + k : static_cast<int>(s) - k;
      if (dir == Direction::kForward ? cs + below > h : cs - below < 1) break;
      const auto base = alloc.take_pair(static_cast<unsigned>(cs));
      if (!base) continue;
      StageEntry e;
      e.kind = NodeKind::kInternal;
      e.child_base = *base;
      e.child_skip = static_cast<std::uint16_t>(k - 1);
      writes.push_back({static_cast<std::uint16_t>(s), a, e, fresh});
      const auto kids = want.children(n);
      return place(kids[0], static_cast<unsigned>(cs), *base, true) &&
             place(kids[1], static_cast<unsigned>(cs), *base + 1, true);
    }
    failure = "no free child slots within reach of stage " + std::to_string(s);
    return false;
  }

  bool diff(unsigned s, std::uint32_t a, NodeId n) {
    const StageEntry& old = img.memory[s - 1][a];
    const TreeNode& node = want.node(n);
    const bool old_internal = old.kind == NodeKind::kInternal;
    const bool new_internal = node.kind == NodeKind::kInternal;
    if (old_internal && new_internal) {
      const unsigned cs = child_stage(s, old);
      const auto kids = want.children(n);
      return diff(cs, old.child_base, kids[0]) && diff(cs, old.child_base + 1, kids[1]);
    }
    if (!old_internal && !new_internal) {
      const StageEntry e = leaf_entry(node);
      if (!(e == old)) writes.push_back({static_cast<std::uint16_t>(s), a, e, false});
      return true;
    }
    if (old_internal) {
      release(s, a);
      writes.push_back({static_cast<std::uint16_t>(s), a, leaf_entry(node), false});
      return true;
    }
    return place(n, s, a, false);
  }
};

}  // namespace

UpdatePlanner::UpdatePlanner(PipelineImage image, std::span<const Prefix> table)
    : image_(std::move(image)), table_(table), free_blocks_(image_.stages) {}

UpdatePlan UpdatePlanner::plan(const RouteChange& change) {
  if (image_.kind != TreeKind::kTrie) throw std::invalid_argument("route changes apply to trie images");
  const unsigned ibits = image_.index_kind == IndexKind::kInitialBits ? image_.initial_bits : 0;
  const Prefix p = make_prefix(change.prefix.bits, change.prefix.length, change.prefix.next_hop);
  UpdatePlan out;
  if (p.length < ibits) {
    out.status = PlanStatus::kNeedsRemap;
    out.reason = "prefix shorter than the " + std::to_string(ibits) + " index bits";
    return out;
  }
  const Answer old = table_.find(p);
  if (change.op == RouteChange::Op::kInsert ? (old && *old == p.next_hop) : !old) {
    out.status = PlanStatus::kNoChange;
    out.reason = "table already in the requested state";
    return out;
  }
  if (change.op == RouteChange::Op::kInsert) {
    table_.insert(p);
  } else {
    table_.erase(p);
  }
  auto revert = [&] {
    if (old) {
      table_.insert(Prefix{p.bits, p.length, *old});
    } else {
      table_.erase(p);
    }
  };

  const std::uint32_t cell = ibits == 0 ? 0 : p.bits >> (32 - ibits);
  const std::uint32_t base = ibits == 0 ? 0 : cell << (32 - ibits);
  const auto inside = table_.within(base, ibits);
  const SearchTree want =
      leaf_push(build_subtrie(inside, base, ibits, table_.covering(base, ibits), image_.key_width));

  const auto sid = image_.index[cell];
  if (sid == PartitionSet::kNoSubtree) {
    if (want.node(want.root()).kind == NodeKind::kNull) {
      out.status = PlanStatus::kApplied;
      out.change = next_change_++;
      return out;
    }
    revert();
    out.status = PlanStatus::kNeedsRemap;
    out.reason = "index cell " + std::to_string(cell) + " has no subtree";
    return out;
  }

  const DitRecord& d = image_.dit[static_cast<std::size_t>(sid)];
  Allocator alloc{free_blocks_, {}, image_.stage_capacity};
  for (const auto& m : image_.memory) alloc.tail.push_back(static_cast<std::uint32_t>(m.size()));
  std::vector<SingleWrite> writes;
  std::vector<std::pair<std::uint16_t, std::uint32_t>> freed;
  Differ differ{image_, want, d.direction, alloc, writes, freed, {}};
  if (!differ.diff(d.root_stage, d.root_addr, want.root())) {
    revert();
    out.status = PlanStatus::kNeedsRemap;
    out.reason = differ.failure;
    return out;
  }

  // Merge into per-stage runs: fresh runs are written by the earliest
  // bubbles, rewrites of live entries by the latest, so a new block is
  // always in place before (or in the same pass as) its parent pointer.
  std::sort(writes.begin(), writes.end(), [](const SingleWrite& x, const SingleWrite& y) {
    if (x.stage != y.stage) return x.stage < y.stage;
    if (x.fresh != y.fresh) return x.fresh > y.fresh;
    return x.addr < y.addr;
  });
  std::map<unsigned, std::vector<MemoryWrite>> runs;  // stage -> fresh runs then rewrites
  for (const auto& w : writes) {
    auto& list = runs[w.stage];
    if (!list.empty() && list.back().fresh == w.fresh &&
        list.back().addr + list.back().entries.size() == w.addr) {
      list.back().entries.push_back(w.entry);
      continue;
    }
    list.push_back(MemoryWrite{w.stage, w.addr, {w.entry}, w.fresh});
  }
  std::size_t nbubbles = 0;
  for (const auto& [s, list] : runs) nbubbles = std::max(nbubbles, list.size());

  std::vector<WriteBubble> bubbles(nbubbles);
  std::map<std::pair<unsigned, std::uint32_t>, std::size_t> fresh_bubble;  // (stage, addr) -> bubble
  std::vector<std::pair<const MemoryWrite*, std::size_t>> assigned;
  for (const auto& [s, list] : runs) {
    const auto nfresh = static_cast<std::size_t>(
        std::count_if(list.begin(), list.end(), [](const MemoryWrite& w) { return w.fresh; }));
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::size_t b = list[i].fresh ? i : nbubbles - (list.size() - i);
      if (list[i].fresh && i >= nfresh) throw std::logic_error("run ordering");
      assigned.emplace_back(&list[i], b);
      if (list[i].fresh) {
        for (std::uint32_t k = 0; k < list[i].entries.size(); ++k) fresh_bubble[{s, list[i].addr + k}] = b;
      }
    }
  }
  for (const auto& [w, b] : assigned) {
    for (const auto& e : w->entries) {
      if (e.kind != NodeKind::kInternal) continue;
      const unsigned cs = d.direction == Direction::kForward ? w->stage + e.child_skip + 1u
                                                             : w->stage - e.child_skip - 1u;
      const auto it = fresh_bubble.find({cs, e.child_base});
      if (it != fresh_bubble.end() && it->second > b) {
        revert();
        out.status = PlanStatus::kNeedsRemap;
        out.reason = "new block cannot be written before its parent";
        return out;
      }
    }
  }

  out.status = PlanStatus::kApplied;
  out.change = next_change_++;
  for (std::size_t b = 0; b < nbubbles; ++b) {
    bubbles[b].id = next_bubble_++;
    bubbles[b].change = out.change;
    bubbles[b].direction = d.direction;
    bubbles[b].completes_change = b + 1 == nbubbles;
    bubbles[b].invalidate = CacheInvalidation{CacheInvalidation::Kind::kPrefix, p};
  }
  for (const auto& [w, b] : assigned) bubbles[b].writes.push_back(*w);
  for (auto& bub : bubbles) {
    std::sort(bub.writes.begin(), bub.writes.end(), [&](const MemoryWrite& x, const MemoryWrite& y) {
      return d.direction == Direction::kForward ? x.stage < y.stage : x.stage > y.stage;
    });
    apply_bubble(image_, bub);
  }
  free_blocks_ = std::move(alloc.free);
  for (const auto& [s, a] : freed) free_blocks_[s - 1].push_back(a);
  out.bubbles = std::move(bubbles);
  return out;
}

UpdatePlan UpdatePlanner::plan(const LeafPayloadChange& change) {
  UpdatePlan out;
  auto w = begin_walk(image_, change.key);
  if (!w) {
    out.status = PlanStatus::kNeedsRemap;
    out.reason = "key routes to an empty index cell";
    return out;
  }
  unsigned stage = 0;
  std::uint32_t addr = 0;
  for (unsigned pos = 0; pos < image_.stages && !w->done; ++pos) {
    const unsigned s = stage_at(image_, w->direction, pos);
    const std::uint32_t a = w->addr;
    if (step_walk(image_, *w, s, change.key)) {
      stage = s;
      addr = a;
    }
  }
  StageEntry e = image_.memory[stage - 1][addr];
  if (e.kind == NodeKind::kLeaf && e.payload == change.payload) {
    out.status = PlanStatus::kNoChange;
    out.reason = "leaf already holds that payload";
    return out;
  }
  e = StageEntry{};
  e.kind = NodeKind::kLeaf;
  e.payload = change.payload;

  WriteBubble bub;
  bub.id = next_bubble_++;
  bub.change = next_change_++;
  bub.direction = w->direction;
  bub.writes.push_back(MemoryWrite{static_cast<std::uint16_t>(stage), addr, {e}, false});
  bub.invalidate.kind = CacheInvalidation::Kind::kAll;
  apply_bubble(image_, bub);
  out.status = PlanStatus::kApplied;
  out.change = bub.change;
  out.bubbles.push_back(std::move(bub));
  return out;
}

void apply_bubble(PipelineImage& image, const WriteBubble& bubble) {
  for (const auto& w : bubble.writes) {
    auto& mem = image.memory[w.stage - 1];
    if (mem.size() < w.addr + w.entries.size()) mem.resize(w.addr + w.entries.size());
    std::copy(w.entries.begin(), w.entries.end(), mem.begin() + w.addr);
  }
}

void install_bubble(PipelineImage& image, const WriteBubble& bubble) {
  if (image.bubble_tables.size() < image.stages) image.bubble_tables.resize(image.stages);
  for (const auto& w : bubble.writes) {
    image.bubble_tables[w.stage - 1][bubble.id] = BubbleRow{w.addr, w.entries, true};
  }
}

ConsistencyReport check_update_consistency(std::span<const Prefix> base, std::span<const TimedChange> changes,
                                           std::span<const TimedLookup> lookups) {
  const LpmIndex index(base);
  ConsistencyReport r;
  std::vector<std::size_t> relevant;
  for (std::size_t i = 0; i < lookups.size(); ++i) {
    const auto& q = lookups[i];
    const std::uint32_t k = get(q.key, Field::kDstIp);
    std::array<Answer, kMaxPrefixLength + 1> state;
    for (unsigned len = 0; len <= kMaxPrefixLength; ++len) {
      state[len] = index.find(Prefix{k & prefix_mask(len), static_cast<std::uint8_t>(len), 0});
    }
    auto answer = [&]() -> Answer {
      for (int len = kMaxPrefixLength; len >= 0; --len) {
        if (state[len]) return state[len];
      }
      return std::nullopt;
    };
    relevant.clear();
    std::size_t lo = 0;
    std::size_t hi = 0;
    for (std::size_t j = 0; j < changes.size(); ++j) {
      if (!changes[j].change.prefix.matches(k)) continue;
      relevant.push_back(j);
      if (changes[j].last_complete < q.accept) ++lo;
      if (changes[j].first_admit <= q.complete) ++hi;
    }
    bool ok = false;
    const Answer first = answer();
    for (std::size_t v = 0;; ++v) {
      if (v >= lo && v <= hi && answer() == q.answer) ok = true;
      if (v == relevant.size()) break;
      const auto& c = changes[relevant[v]].change;
      state[c.prefix.length] = c.op == RouteChange::Op::kInsert ? Answer{c.prefix.next_hop} : Answer{};
    }
    ++r.checked;
    if (q.answer == first) ++r.saw_old;
    if (q.answer == answer()) ++r.saw_new;
    if (!ok) {
      ++r.mismatches;
      if (r.bad.size() < 16) r.bad.push_back(i);
    }
  }
  return r;
}

}  // namespace bipipe
