#include "bipipe/simulator.hpp"

#include <algorithm>
#include <deque>
#include <ostream>
#include <stdexcept>
#include <string>

#include "bipipe/lru_cache.hpp"

namespace bipipe {

namespace {

enum class SlotKind : std::uint8_t { kEmpty, kPacket, kBubble };

struct Slot {
  SlotKind kind = SlotKind::kEmpty;
  std::uint32_t id = 0;
  std::uint64_t admit = 0;
};

struct InFlight {
  Walk walk;
  std::uint64_t epoch = 0;
};

constexpr int dir_index(Direction d) { return d == Direction::kForward ? 0 : 1; }

class Engine {
 public:
  Engine(const PipelineImage& image, const Trace& trace, std::span<const ScheduledBubble> bubbles,
         const SimConfig& cfg)
      : img_(image), trace_(trace), cfg_(cfg), h_(image.stages), cache_(cfg.cache_enabled ? cfg.C : 0) {
    if (cfg.P == 0) throw std::invalid_argument("P must be at least 1");
    if (h_ == 0) throw std::invalid_argument("image has no stages");
    if (cfg.H != 0 && cfg.H != h_) {
      throw std::invalid_argument("config H=" + std::to_string(cfg.H) + " but image has " + std::to_string(h_) +
                                  " stages");
    }
    if (!trace.arrivals.empty() && trace.arrivals.size() != trace.keys.size()) {
      throw std::invalid_argument("arrival list length differs from key count");
    }
    if (img_.bubble_tables.size() < h_) img_.bubble_tables.resize(h_);
    for (auto& r : ring_) r.assign(h_, Slot{});
    for (auto& a : last_access_) a.assign(h_, kNever);
    for (std::uint32_t b = 0; b < bubbles.size(); ++b) {
      const auto& sb = bubbles[b];
      due_[dir_index(sb.bubble.direction)].push_back(b);
      result_.bubbles.push_back(BubbleRecord{sb.bubble.id, sb.bubble.change, sb.bubble.direction, sb.cycle, 0, 0});
    }
    for (auto& q : due_) {
      std::stable_sort(q.begin(), q.end(),
                       [&](std::uint32_t x, std::uint32_t y) { return bubbles[x].cycle < bubbles[y].cycle; });
    }
    bubbles_ = bubbles;
    result_.packets.resize(trace.keys.size());
    state_.resize(trace.keys.size());
    done_.assign(trace.keys.size(), false);
  }

  SimResult run() {
    auto& m = result_.metrics;
    const std::size_t n = trace_.keys.size();
    std::uint64_t t = 0;
    for (;; ++t) {
      if (resolved_ == n && bubbles_left() == 0 && inflight_ == 0) break;
      released_this_cycle_ = 0;
      admit_from_queues(t);
      take_arrivals(t);
      advance(t);
      release(t);
      if (cfg_.record_occupancy) {
        m.occupancy.push_back(OccupancySample{inflight_dir_[0], inflight_dir_[1],
                                              static_cast<std::uint32_t>(queue_[0].size()),
                                              static_cast<std::uint32_t>(queue_[1].size()), released_this_cycle_});
      }
    }
    m.cycles = t;
    m.packets_in = n;
    m.bubbles = bubbles_.size();
    if (m.packets_out > 0) {
      m.throughput_ppc = static_cast<double>(m.packets_out) / static_cast<double>(m.last_release - m.first_release + 1);
      m.overall_ppc = static_cast<double>(m.packets_out) / static_cast<double>(m.cycles);
    }
    std::uint64_t lat_sum = 0;
    std::uint64_t lat_n = 0;
    for (std::size_t l = 0; l < m.latency_histogram.size(); ++l) {
      lat_sum += l * m.latency_histogram[l];
      lat_n += m.latency_histogram[l];
    }
    m.mean_latency = lat_n ? static_cast<double>(lat_sum) / static_cast<double>(lat_n) : 0.0;
    if (m.packets_out + m.drops != m.packets_in) throw std::logic_error("packet conservation violated");
    return std::move(result_);
  }

 private:
  static constexpr std::uint64_t kNever = ~std::uint64_t{0};

  std::size_t bubbles_left() const { return due_[0].size() + due_[1].size(); }

  Header cache_key(const Header& h) const {
    return img_.kind == TreeKind::kTrie ? header_for_address(get(h, Field::kDstIp)) : h;
  }

  void occupy(int d, std::uint64_t t, SlotKind kind, std::uint32_t id) {
    Slot& s = ring_[d][t % h_];
    if (s.kind != SlotKind::kEmpty) throw std::logic_error("pipeline entrance already occupied");
    s = Slot{kind, id, t};
    ++inflight_;
    ++inflight_dir_[d];
    entrance_used_[d] = t;
  }

  void admit_packet(int d, std::uint32_t i, std::uint64_t t) {
    occupy(d, t, SlotKind::kPacket, i);
    state_[i].epoch = epoch_;
    auto& m = result_.metrics;
    (d == 0 ? m.forward_entries : m.reverse_entries)++;
  }

  void admit_from_queues(std::uint64_t t) {
    for (int d = 0; d < 2; ++d) {
      if (!due_[d].empty() && bubbles_[due_[d].front()].cycle <= t) {
        const std::uint32_t b = due_[d].front();
        due_[d].pop_front();
        install_bubble(img_, bubbles_[b].bubble);
        result_.bubbles[b].admit = t;
        occupy(d, t, SlotKind::kBubble, b);
        continue;
      }
      if (!queue_[d].empty()) {
        admit_packet(d, queue_[d].front(), t);
        queue_[d].pop_front();
      }
    }
  }

  void complete_now(std::uint32_t i, std::uint64_t t) {
    result_.packets[i].complete = t;
    completed_.push_back(i);
  }

  void take_arrivals(std::uint64_t t) {
    auto& m = result_.metrics;
    const std::size_t n = trace_.keys.size();
    for (unsigned taken = 0; taken < cfg_.P && next_ < n; ++taken) {
      if (!trace_.arrivals.empty() && trace_.arrivals[next_] > t) break;
      const std::uint32_t i = static_cast<std::uint32_t>(next_);
      const Header& key = trace_.keys[i];
      PacketRecord& rec = result_.packets[i];

      if (cfg_.cache_enabled && cfg_.C > 0) {
        if (auto hit = cache_.get(cache_key(key))) {
          ++m.cache_hits;
          rec.accept = t;
          rec.cache_hit = true;
          rec.answer = *hit;
          ++next_;
          complete_now(i, t);
          continue;
        }
      }
      auto walk = begin_walk(img_, key);
      if (!walk) {
        if (cfg_.cache_enabled && cfg_.C > 0) ++m.cache_misses;
        ++m.unrouted;
        rec.accept = t;
        rec.routed = false;
        ++next_;
        complete_now(i, t);
        continue;
      }
      const int d = dir_index(walk->direction);
      if (entrance_used_[d] != t && queue_[d].empty()) {
        state_[i].walk = *walk;
        admit_packet(d, i, t);
      } else if (queue_[d].size() < cfg_.Q) {
        state_[i].walk = *walk;
        queue_[d].push_back(i);
      } else if (cfg_.queue_policy == QueuePolicy::kStall) {
        ++m.stall_cycles;
        break;
      } else {
        if (cfg_.cache_enabled && cfg_.C > 0) ++m.cache_misses;
        ++m.drops;
        rec.accept = t;
        rec.dropped = true;
        rec.direction = walk->direction;
        ++next_;
        ++resolved_;
        continue;
      }
      if (cfg_.cache_enabled && cfg_.C > 0) ++m.cache_misses;
      rec.accept = t;
      rec.direction = walk->direction;
      ++next_;
    }
  }

  void touch(int d, unsigned stage, std::uint64_t t) {
    auto& last = last_access_[d][stage - 1];
    if (last == t) {
      ++result_.metrics.dual_port_violations;
      throw std::logic_error("stage " + std::to_string(stage) + " accessed twice from one direction in cycle " +
                             std::to_string(t));
    }
    last = t;
  }

  void advance(std::uint64_t t) {
    auto& m = result_.metrics;
    for (int d = 0; d < 2; ++d) {
      const Direction dir = d == 0 ? Direction::kForward : Direction::kReverse;
      for (auto& slot : ring_[d]) {
        if (slot.kind == SlotKind::kEmpty) continue;
        const auto pos = static_cast<unsigned>(t - slot.admit);
        const unsigned stage = stage_at(img_, dir, pos);
        if (slot.kind == SlotKind::kPacket) {
          auto& st = state_[slot.id];
          if (step_walk(img_, st.walk, stage, trace_.keys[slot.id])) touch(d, stage, t);
        } else {
          auto& table = img_.bubble_tables[stage - 1];
          const auto it = table.find(bubbles_[slot.id].bubble.id);
          if (it != table.end()) {
            if (it->second.write_enable) {
              auto& mem = img_.memory[stage - 1];
              const auto& row = it->second;
              if (mem.size() < row.addr + row.entries.size()) mem.resize(row.addr + row.entries.size());
              std::copy(row.entries.begin(), row.entries.end(), mem.begin() + row.addr);
              touch(d, stage, t);
            }
            table.erase(it);
          }
        }
        if (pos + 1 < h_) continue;

        if (slot.kind == SlotKind::kPacket) {
          auto& st = state_[slot.id];
          if (!st.walk.done) throw std::logic_error("packet left the pipeline without a result");
          PacketRecord& rec = result_.packets[slot.id];
          rec.answer = st.walk.result;
          if (cfg_.cache_enabled && cfg_.C > 0 && st.epoch == epoch_) {
            cache_.put(cache_key(trace_.keys[slot.id]), st.walk.result);
          }
          if (last_done_[d] != kNever && last_done_[d] > slot.id) ++m.direction_order_violations;
          last_done_[d] = slot.id;
          complete_now(slot.id, t);
        } else {
          const auto& bub = bubbles_[slot.id].bubble;
          ++epoch_;
          if (cfg_.cache_enabled && cfg_.C > 0) {
            cache_.erase_if([&](const Header& k) { return bub.invalidate.matches(k); });
          }
          result_.bubbles[slot.id].complete = t;
        }
        slot = Slot{};
        --inflight_;
        --inflight_dir_[d];
      }
    }
  }

  void emit(std::uint32_t i, std::uint64_t t) {
    auto& m = result_.metrics;
    PacketRecord& rec = result_.packets[i];
    rec.release = t;
    if (m.packets_out == 0) m.first_release = t;
    m.last_release = t;
    ++m.packets_out;
    ++resolved_;
    ++released_this_cycle_;
    if (max_released_ != kNever && i < max_released_) ++m.order_violations;
    if (max_released_ == kNever || i > max_released_) max_released_ = i;
    const std::uint64_t lat = rec.complete - rec.accept + 1;
    if (m.latency_histogram.size() <= lat) m.latency_histogram.resize(lat + 1, 0);
    ++m.latency_histogram[lat];
  }

  void release(std::uint64_t t) {
    std::sort(completed_.begin(), completed_.end());
    if (cfg_.reorder) {
      for (auto i : completed_) done_[i] = true;
      completed_.clear();
      const std::size_t n = trace_.keys.size();
      while (released_this_cycle_ < cfg_.P && next_release_ < n) {
        const auto i = static_cast<std::uint32_t>(next_release_);
        if (result_.packets[i].dropped) {
          ++next_release_;
          continue;
        }
        if (!done_[i]) break;
        emit(i, t);
        ++next_release_;
      }
      return;
    }
    out_fifo_.insert(out_fifo_.end(), completed_.begin(), completed_.end());
    completed_.clear();
    while (released_this_cycle_ < cfg_.P && !out_fifo_.empty()) {
      emit(out_fifo_.front(), t);
      out_fifo_.pop_front();
    }
  }

  PipelineImage img_;
  const Trace& trace_;
  SimConfig cfg_;
  unsigned h_;
  std::span<const ScheduledBubble> bubbles_;
  LruCache<Header, Answer, HeaderHash> cache_;
  SimResult result_;

  std::vector<InFlight> state_;
  std::vector<bool> done_;
  std::vector<std::uint32_t> completed_;
  std::deque<std::uint32_t> out_fifo_;
  std::array<std::vector<Slot>, 2> ring_;
  std::array<std::deque<std::uint32_t>, 2> queue_;
  std::array<std::deque<std::uint32_t>, 2> due_;
  std::array<std::vector<std::uint64_t>, 2> last_access_;
  std::array<std::uint64_t, 2> entrance_used_{kNever, kNever};
  std::array<std::uint64_t, 2> last_done_{kNever, kNever};
  std::array<std::uint32_t, 2> inflight_dir_{0, 0};
  std::size_t inflight_ = 0;
  std::size_t next_ = 0;
  std::size_t next_release_ = 0;
  std::size_t resolved_ = 0;
  std::uint64_t epoch_ = 0;
  std::uint64_t max_released_ = kNever;
  std::uint32_t released_this_cycle_ = 0;
};

}  // namespace

SimResult simulate(const PipelineImage& image, const Trace& trace, const SimConfig& config) {
  return Engine(image, trace, {}, config).run();
}

SimResult simulate_with_updates(const PipelineImage& image, const Trace& trace,
                                std::span<const ScheduledBubble> bubbles, const SimConfig& config) {
  return Engine(image, trace, bubbles, config).run();
}

void write_metrics_csv(std::ostream& os, const SimMetrics& m) {
  os << "param,value\n";
  os << "cycles," << m.cycles << '\n';
  os << "packets_in," << m.packets_in << '\n';
  os << "packets_out," << m.packets_out << '\n';
  os << "throughput_ppc," << m.throughput_ppc << '\n';
  os << "overall_ppc," << m.overall_ppc << '\n';
  os << "cache_hits," << m.cache_hits << '\n';
  os << "cache_misses," << m.cache_misses << '\n';
  os << "drops," << m.drops << '\n';
  os << "stall_cycles," << m.stall_cycles << '\n';
  os << "unrouted," << m.unrouted << '\n';
  os << "forward_entries," << m.forward_entries << '\n';
  os << "reverse_entries," << m.reverse_entries << '\n';
  os << "bubbles," << m.bubbles << '\n';
  os << "order_violations," << m.order_violations << '\n';
  os << "direction_order_violations," << m.direction_order_violations << '\n';
  os << "dual_port_violations," << m.dual_port_violations << '\n';
  os << "mean_latency," << m.mean_latency << '\n';
}

void write_occupancy_csv(std::ostream& os, const SimMetrics& m) {
  os << "cycle,forward_inflight,reverse_inflight,forward_queue,reverse_queue,released\n";
  for (std::size_t c = 0; c < m.occupancy.size(); ++c) {
    const auto& o = m.occupancy[c];
    os << c << ',' << o.forward_inflight << ',' << o.reverse_inflight << ',' << o.forward_queue << ','
       << o.reverse_queue << ',' << o.released << '\n';
  }
}

}  // namespace bipipe
