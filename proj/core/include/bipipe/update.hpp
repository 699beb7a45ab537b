#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bipipe/pipeline_image.hpp"
#include "bipipe/trie.hpp"

namespace bipipe {

// Insert (or re-point) a route, or withdraw it.
struct RouteChange {
  enum class Op : std::uint8_t { kInsert, kDelete };
  Op op = Op::kInsert;
  Prefix prefix;
};

// Overwrites the payload of the leaf that `key` reaches.
struct LeafPayloadChange {
  Header key{};
  std::uint32_t payload = 0;
};

// A contiguous block of entries written into one stage.
struct MemoryWrite {
  std::uint16_t stage = 0;
  std::uint32_t addr = 0;
  std::vector<StageEntry> entries;
  bool fresh = false;  // newly allocated slots, unreachable until a parent is rewritten
};

// Which cached keys a completed update must evict.
struct CacheInvalidation {
  enum class Kind : std::uint8_t { kNone, kPrefix, kAll };
  Kind kind = Kind::kNone;
  Prefix prefix;

  bool matches(const Header& key) const {
    switch (kind) {
      case Kind::kNone: return false;
      case Kind::kPrefix: return prefix.matches(get(key, Field::kDstIp));
      case Kind::kAll: return true;
    }
    return false;
  }
};

// Update token that travels the pipeline in one direction, writing at most
// one block per stage as it passes.
struct WriteBubble {
  std::uint32_t id = 0;
  std::uint32_t change = 0;  // planner-assigned change sequence number
  Direction direction = Direction::kForward;
  std::vector<MemoryWrite> writes;  // in traversal order
  bool completes_change = true;
  CacheInvalidation invalidate;
};

enum class PlanStatus : std::uint8_t { kApplied, kNoChange, kNeedsRemap };
std::string_view to_string(PlanStatus s);

struct UpdatePlan {
  PlanStatus status = PlanStatus::kNoChange;
  std::string reason;
  std::uint32_t change = 0;
  std::vector<WriteBubble> bubbles;

  std::size_t entry_writes() const;
};

// Computes write bubbles offline against a private copy of the image.
// Accepted changes are committed to that copy (and, for routes, to the
// planner's prefix table), so consecutive plans compose.
class UpdatePlanner {
 public:
  explicit UpdatePlanner(PipelineImage image, std::span<const Prefix> table = {});

  // Trie images only. Prefixes shorter than the index bits, or ones that
  // would populate an empty index cell, need a re-mapping.
  UpdatePlan plan(const RouteChange& change);
  UpdatePlan plan(const LeafPayloadChange& change);

  const PipelineImage& image() const { return image_; }
  const LpmIndex& table() const { return table_; }

  struct Allocator;  // slot bookkeeping, defined in the source file

 private:
  PipelineImage image_;
  LpmIndex table_;
  std::vector<std::vector<std::uint32_t>> free_blocks_;  // per stage, bases of free child blocks
  std::uint32_t next_bubble_ = 0;
  std::uint32_t next_change_ = 0;
};

// Writes every block of a bubble directly (offline application).
void apply_bubble(PipelineImage& image, const WriteBubble& bubble);
// Loads a bubble's rows into the image's per-stage bubble tables.
void install_bubble(PipelineImage& image, const WriteBubble& bubble);

// Checks each lookup against the answers the table could legally give it:
// with lo = route changes finished before the lookup was accepted and
// hi = changes started before the lookup completed, the answer must equal
// the table after j of the changes touching that key, for some j in [lo, hi].
struct TimedChange {
  RouteChange change;
  std::uint64_t first_admit = 0;   // cycle its first bubble entered
  std::uint64_t last_complete = 0; // cycle its last bubble left
};

struct TimedLookup {
  Header key{};
  std::uint64_t accept = 0;
  std::uint64_t complete = 0;
  Answer answer;
};

struct ConsistencyReport {
  std::size_t checked = 0;
  std::size_t mismatches = 0;
  std::size_t saw_old = 0;  // answer equals the pre-change table
  std::size_t saw_new = 0;  // answer equals the table after all changes
  std::vector<std::size_t> bad;  // indices into the lookup list (first 16)
};

ConsistencyReport check_update_consistency(std::span<const Prefix> base, std::span<const TimedChange> changes,
                                           std::span<const TimedLookup> lookups);

}  // namespace bipipe
