#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "bipipe/pipeline_image.hpp"
#include "bipipe/update.hpp"

namespace bipipe {

enum class QueuePolicy : std::uint8_t { kStall, kDrop };

struct SimConfig {
  unsigned P = 4;           // packets taken from the input per cycle
  unsigned H = 0;           // 0 = the image's stage count; otherwise must match it
  unsigned Q = 2;           // per-direction queue capacity
  std::size_t C = 160;      // cache entries
  bool cache_enabled = true;
  QueuePolicy queue_policy = QueuePolicy::kStall;
  bool reorder = true;      // release results in input order
  bool record_occupancy = false;
  std::uint64_t seed = 1;   // carried into reports; the cycle loop is deterministic
};

// Keys in input order. Without arrival cycles the input is saturated: every
// cycle offers the next P packets.
struct Trace {
  std::vector<Header> keys;
  std::vector<std::uint64_t> arrivals;  // optional, non-decreasing
};

struct OccupancySample {
  std::uint32_t forward_inflight = 0;
  std::uint32_t reverse_inflight = 0;
  std::uint32_t forward_queue = 0;
  std::uint32_t reverse_queue = 0;
  std::uint32_t released = 0;
};

struct SimMetrics {
  std::uint64_t cycles = 0;
  std::uint64_t packets_in = 0;
  std::uint64_t packets_out = 0;
  // packets_out over the cycles from the first to the last release.
  double throughput_ppc = 0.0;
  // packets_out over all cycles, pipeline fill and drain included.
  double overall_ppc = 0.0;
  std::uint64_t first_release = 0;
  std::uint64_t last_release = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t cache_misses = 0;
  std::uint64_t drops = 0;
  std::uint64_t stall_cycles = 0;
  std::uint64_t unrouted = 0;  // keys whose index cell is empty
  std::uint64_t forward_entries = 0;
  std::uint64_t reverse_entries = 0;
  std::uint64_t bubbles = 0;
  std::uint64_t order_violations = 0;
  std::uint64_t direction_order_violations = 0;
  std::uint64_t dual_port_violations = 0;
  std::vector<std::uint64_t> latency_histogram;  // index = cycles from acceptance to completion
  double mean_latency = 0.0;
  std::vector<OccupancySample> occupancy;
};

struct PacketRecord {
  std::uint64_t accept = 0;
  std::uint64_t complete = 0;
  std::uint64_t release = 0;
  Answer answer;
  Direction direction = Direction::kForward;
  bool dropped = false;
  bool cache_hit = false;
  bool routed = true;
};

struct BubbleRecord {
  std::uint32_t id = 0;
  std::uint32_t change = 0;
  Direction direction = Direction::kForward;
  std::uint64_t scheduled = 0;
  std::uint64_t admit = 0;
  std::uint64_t complete = 0;
};

struct SimResult {
  SimMetrics metrics;
  std::vector<PacketRecord> packets;  // per trace key
  std::vector<BubbleRecord> bubbles;
};

struct ScheduledBubble {
  WriteBubble bubble;
  std::uint64_t cycle = 0;  // earliest admission cycle
};

// Cycle loop, per cycle:
//  1. each direction admits one item: a due write bubble, else its queue head;
//  2. up to P input packets probe the cache; hits complete now, misses go
//     through the DIT and enter directly when their direction's entrance is
//     free and its queue empty, else queue (stall or drop when full);
//  3. every in-flight item visits its stage; items leaving stage H complete,
//     fill the cache, or (bubbles) apply their invalidation;
//  4. up to P results are released, in input order when `reorder` is set.
SimResult simulate(const PipelineImage& image, const Trace& trace, const SimConfig& config);
SimResult simulate_with_updates(const PipelineImage& image, const Trace& trace,
                                std::span<const ScheduledBubble> bubbles, const SimConfig& config);

// `param,value` rows.
void write_metrics_csv(std::ostream& os, const SimMetrics& m);
// `cycle,forward_inflight,reverse_inflight,forward_queue,reverse_queue,released`
void write_occupancy_csv(std::ostream& os, const SimMetrics& m);

}  // namespace bipipe
