#pragma once

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "bipipe/mapping.hpp"
#include "bipipe/trie.hpp"

namespace bipipe {

// One word of stage memory. Internal entries point at a block of children
// in a later stage (along the subtree's direction): the child for branch b
// sits at child_base + b after child_skip idle stages.
struct StageEntry {
  NodeKind kind = NodeKind::kNull;
  std::uint16_t child_skip = 0;
  std::uint32_t child_base = 0;
  std::uint32_t payload = kNoPayload;  // next hop or bucket index (leaves)
  std::uint32_t cut = kNoCut;          // decision-tree internal entries

  friend bool operator==(const StageEntry&, const StageEntry&) = default;
};

// A write staged in a bubble table: a contiguous block starting at `addr`.
struct BubbleRow {
  std::uint32_t addr = 0;
  std::vector<StageEntry> entries;
  bool write_enable = true;
};

struct PipelineImage {
  TreeKind kind = TreeKind::kTrie;
  unsigned stages = 0;
  std::uint32_t stage_capacity = 0;  // addressable entries per stage
  unsigned bit_offset = 0;           // key bit read by a subtree root
  unsigned key_width = 32;

  std::vector<std::vector<StageEntry>> memory;  // index 0 is stage 1

  // Direction Index Table, addressed through `index` like the partition.
  IndexKind index_kind = IndexKind::kWhole;
  unsigned initial_bits = 0;
  std::optional<Cut> first_cut;
  std::vector<std::int32_t> index;
  std::vector<DitRecord> dit;

  // Decision-tree tables referenced by entries.
  std::vector<Cut> cuts;
  std::vector<Rule> rules;
  std::vector<std::vector<std::uint32_t>> buckets;

  // Per target stage: bubble id -> row written when that bubble arrives.
  // The table physically belongs to the stage the bubble leaves (or the
  // entrance) just before the write.
  std::vector<std::unordered_map<std::uint32_t, BubbleRow>> bubble_tables;

  std::size_t entries(unsigned stage) const { return memory[stage - 1].size(); }
  std::size_t total_entries() const;
  std::uint32_t cell_of(const Header& h) const;
  // DIT lookup; nullopt for a cell routed nowhere.
  std::optional<std::uint32_t> subtree_for(const Header& h) const;
};

struct ImageOptions {
  // 0 picks the next power of two at or above the largest stage.
  std::uint32_t stage_capacity = 0;
};

// Materializes a validated, sibling-contiguous mapping. Throws
// std::invalid_argument on an invalid mapping and std::length_error when a
// stage exceeds the requested capacity (the message gives the address bits
// needed).
PipelineImage build_pipeline(const PartitionSet& partition, const MappingResult& mapping,
                             const ImageOptions& options = {});

// Per-packet traversal state shared by the static walk and the simulator.
struct Walk {
  Direction direction = Direction::kForward;
  std::uint32_t addr = 0;
  std::uint32_t skip = 0;  // stages still to pass before the next read
  std::uint32_t reads = 0;
  bool done = false;
  Answer result;
};

// Starts a walk at the DIT. Returns nullopt when the key's cell is empty.
std::optional<Walk> begin_walk(const PipelineImage& image, const Header& key);

// Stage visited at pipeline position `pos` (0-based) in a direction.
inline unsigned stage_at(const PipelineImage& image, Direction d, unsigned pos) {
  return d == Direction::kForward ? pos + 1 : image.stages - pos;
}

// Visits one stage. Returns true when the stage memory was read.
bool step_walk(const PipelineImage& image, Walk& walk, unsigned stage, const Header& key);

// Untimed lookup: DIT then every stage in the packet's direction.
Answer lookup_static(const PipelineImage& image, const Header& key);
inline Answer lookup_static(const PipelineImage& image, std::uint32_t address) {
  return lookup_static(image, header_for_address(address));
}

enum class EntryBits : std::uint8_t {
  kPaper20,  // 15-bit address + 5-bit distance per entry
  kActual,   // kind + address + distance + payload (+ cut) fields
};

struct MemoryFootprint {
  unsigned entry_bits = 0;
  std::vector<std::uint64_t> stage_bits;
  std::uint64_t total_bits = 0;
  std::uint64_t total_bytes = 0;
  double max_stage_kib = 0.0;
  // KiB / 1000 and bits / 1,024,000: the mixed convention under which
  // 25 stages of 80 KiB read as "2 MB" and "16 Mb".
  double total_mb = 0.0;
  double total_mbit = 0.0;
};

MemoryFootprint memory_footprint(const PipelineImage& image, EntryBits mode);
// Footprint for explicit per-stage entry counts at a fixed entry width.
MemoryFootprint memory_footprint(std::span<const std::size_t> stage_entries, unsigned entry_bits);
unsigned actual_entry_bits(const PipelineImage& image);

// Smallest b with 2^b >= n (0 for n <= 1).
unsigned bits_for(std::uint64_t n);

}  // namespace bipipe
