#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "bipipe/partition.hpp"

namespace bipipe {

enum class Heuristic : std::uint8_t {
  kLargestLeaf,
  kLeastHeight,
  kLargestLeafPerHeight,
  kLeastAvgDepthPerLeaf,
};
inline constexpr Heuristic kAllHeuristics[] = {Heuristic::kLargestLeaf, Heuristic::kLeastHeight,
                                               Heuristic::kLargestLeafPerHeight,
                                               Heuristic::kLeastAvgDepthPerLeaf};

std::string_view to_string(Heuristic h);
std::optional<Heuristic> parse_heuristic(std::string_view name);

enum class Direction : std::uint8_t { kForward, kReverse };
std::string_view to_string(Direction d);

// Subtree ids in the order the heuristic prefers them for inversion (best
// first, ties broken by lower subtree id).
std::vector<std::uint32_t> inversion_order(std::span<const SubtreeMetrics> metrics, Heuristic heuristic);

// How an inverted subtree grows the first-stage estimate W.
enum class FirstStageEstimate : std::uint8_t {
  kAllLeaves,    // W += leaves - 1
  kReadyLeaves,  // W += ready_leaves - 1 (leaves placeable before any parent)
};

// Greedy inversion selection with inversion factor `ifr`: keeps inverting the
// next preferred subtree while fewer than all are inverted and the estimated
// first-stage population W (starting at K) is below ifr * ceil(N / stages).
std::vector<std::uint32_t> select_inversions(std::span<const SubtreeMetrics> metrics, Heuristic heuristic,
                                             double ifr, unsigned stages, std::size_t total_nodes,
                                             FirstStageEstimate estimate = FirstStageEstimate::kReadyLeaves);
std::vector<std::uint32_t> select_inversions(const PartitionSet& partition, Heuristic heuristic, double ifr,
                                             unsigned stages,
                                             FirstStageEstimate estimate = FirstStageEstimate::kReadyLeaves);

struct NodePlacement {
  std::uint16_t stage = 0;  // 1..H, 0 when unassigned
  std::uint32_t addr = 0;
};

// Direction Index Table record for one subtree. `distance` counts stages
// skipped from the subtree's entrance (stage 1 forward, stage H reverse) to
// the stage holding its root.
struct DitRecord {
  Direction direction = Direction::kForward;
  std::uint16_t distance = 0;
  std::uint16_t root_stage = 0;
  std::uint32_t root_addr = 0;
};

struct MappingResult {
  unsigned stages = 0;
  std::vector<std::vector<NodeId>> stage_nodes;  // index 0 is stage 1
  std::vector<NodePlacement> placement;          // per forest node
  std::vector<Direction> direction;              // per subtree
  std::vector<DitRecord> dit;                    // per subtree
  std::vector<std::uint32_t> critical_pops;      // per stage, nodes placed past the fill target

  std::size_t stage_size(unsigned stage) const { return stage_nodes[stage - 1].size(); }
};

class MappingError : public std::runtime_error {
 public:
  MappingError(const std::string& what, NodeId node) : std::runtime_error(what), node_(node) {}
  NodeId node() const { return node_; }

 private:
  NodeId node_;
};

// Bidirectional fine-grained mapping. Forward subtrees are placed root
// first from stage 1, inverted subtrees leaf first so their roots land near
// stage H. Each stage takes ready nodes in decreasing priority (height for
// forward nodes, depth for reverse nodes) until it reaches
// ceil(remaining nodes / remaining stages), continuing past that while a
// ready node's priority reaches the remaining stage budget.
//
// With `sibling_blocks`, siblings are placed as one unit so a parent can
// address its children with a single base address; the unit's priority is
// its members' maximum. Without it every node is scheduled on its own: the
// result still satisfies the ordering constraint but is balance-only (no
// pipeline image can be built from it).
// Throws MappingError when `stages` is too small.
struct BidirOptions {
  bool sibling_blocks = true;
};
MappingResult map_bidirectional(const PartitionSet& partition, std::span<const std::uint32_t> inverted,
                                unsigned stages, const BidirOptions& options = {});

enum class LevelMode : std::uint8_t { kDepth, kHeight };

// Depth mode: depth d -> stage d+1, all subtrees forward.
// Height mode: height h -> stage h+1, all subtrees reverse.
MappingResult map_level_by_level(const PartitionSet& partition, unsigned stages, LevelMode mode);

struct Violation {
  enum class Kind : std::uint8_t { kUnassigned, kDuplicate, kStageRange, kOrder, kAddress, kDit, kSiblingSplit };
  Kind kind;
  NodeId node;
  std::string detail;
};
std::string_view to_string(Violation::Kind kind);

struct ValidationReport {
  std::vector<Violation> violations;
  // Siblings not stored as a contiguous block in one stage: legal for the
  // ordering constraint but not addressable by a single child pointer.
  std::vector<Violation> layout_warnings;

  bool ok() const { return violations.empty(); }
  bool image_compatible() const { return violations.empty() && layout_warnings.empty(); }
};

ValidationReport validate_mapping(const PartitionSet& partition, const MappingResult& mapping);

struct BalanceReport {
  std::vector<std::size_t> counts;  // per stage
  std::size_t total = 0;
  std::size_t max = 0;
  std::size_t ceil_target = 0;  // ceil(total / stages)
  double mean = 0.0;
  double max_over_mean = 0.0;
  double max_over_ceil = 0.0;
};

BalanceReport balance_report(const MappingResult& mapping);

// `stage,count` lines with header.
void write_balance_csv(std::ostream& os, const BalanceReport& report);
// One summary row: label,stages,total,max,mean,max_over_mean,max_over_ceil
std::string balance_csv_row(std::string_view label, const BalanceReport& report);
inline constexpr std::string_view kBalanceCsvRowHeader = "series,stages,total,max,mean,max_over_mean,max_over_ceil";

enum class MapMode : std::uint8_t { kBidirectional, kDepth, kHeight };
std::string_view to_string(MapMode m);
std::optional<MapMode> parse_map_mode(std::string_view name);

struct MapParams {
  unsigned stages = 25;
  unsigned initial_bits = 12;  // tries only
  Heuristic heuristic = Heuristic::kLeastAvgDepthPerLeaf;
  double ifr = 1.0;
  MapMode mode = MapMode::kBidirectional;
  bool sibling_blocks = true;  // false: node-level scheduling, balance studies only
};

struct MappedTree {
  PartitionSet partition;
  std::vector<std::uint32_t> inverted;
  MappingResult mapping;
};

// Partitions `tree` (initial bits for tries, first cut for decision trees),
// then maps it with the chosen mode. Level-by-level modes map the same
// partition with every subtree in one direction.
MappedTree map_tree(const SearchTree& tree, const MapParams& params);

// `node_id,stage,addr,direction` lines with header.
void write_mapping_dump(std::ostream& os, const PartitionSet& partition, const MappingResult& mapping);

}  // namespace bipipe
