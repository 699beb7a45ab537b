#include <gtest/gtest.h>

#include <sstream>

#include "support.hpp"

namespace bipipe {
namespace {

TEST(LruCache, EvictsLeastRecentlyUsed) {
  LruCache<int, int> c(2);
  c.put(1, 10);
  c.put(2, 20);
  ASSERT_TRUE(c.get(1).has_value());  // 2 is now the oldest
  c.put(3, 30);
  EXPECT_FALSE(c.contains(2));
  EXPECT_EQ(c.get(1), 10);
  EXPECT_EQ(c.get(3), 30);
  EXPECT_EQ(c.size(), 2u);
}

TEST(LruCache, EraseIfAndZeroCapacity) {
  LruCache<int, int> c(8);
  for (int i = 0; i < 8; ++i) c.put(i, i);
  EXPECT_EQ(c.erase_if([](int k) { return k % 2 == 0; }), 4u);
  EXPECT_EQ(c.size(), 4u);
  EXPECT_FALSE(c.contains(4));
  LruCache<int, int> none(0);
  none.put(1, 1);
  EXPECT_FALSE(none.get(1).has_value());
}

class Sim : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    table_ = new std::vector<Prefix>(gen_routing_table(20000, 5));
    const auto trie = leaf_push(build_unibit_trie(*table_));
    const auto mt = map_tree(trie, MapParams{});
    image_ = new PipelineImage(build_pipeline(mt.partition, mt.mapping));
    fwd_ = new std::vector<Header>;
    rev_ = new std::vector<Header>;
    for (auto a : matchable_addresses(*table_, 20000, 6)) {
      const Header h = header_for_address(a);
      const auto s = image_->subtree_for(h);
      (image_->dit[*s].direction == Direction::kForward ? fwd_ : rev_)->push_back(h);
    }
  }
  static void TearDownTestSuite() {
    delete table_;
    delete image_;
    delete fwd_;
    delete rev_;
  }

  static SimConfig no_cache(unsigned p) {
    SimConfig c;
    c.P = p;
    c.cache_enabled = false;
    return c;
  }

  static std::vector<Prefix>* table_;
  static PipelineImage* image_;
  static std::vector<Header>* fwd_;
  static std::vector<Header>* rev_;
};
std::vector<Prefix>* Sim::table_ = nullptr;
PipelineImage* Sim::image_ = nullptr;
std::vector<Header>* Sim::fwd_ = nullptr;
std::vector<Header>* Sim::rev_ = nullptr;

TEST_F(Sim, AlternatingDirectionsGiveTwoPerCycle) {
  ASSERT_GE(rev_->size(), 1000u);
  Trace t;
  for (std::size_t i = 0; i < 1000; ++i) {
    t.keys.push_back((*fwd_)[i]);
    t.keys.push_back((*rev_)[i]);
  }
  const auto r = simulate(*image_, t, no_cache(2));
  EXPECT_DOUBLE_EQ(r.metrics.throughput_ppc, 2.0);
  EXPECT_EQ(r.metrics.forward_entries, 1000u);
  EXPECT_EQ(r.metrics.reverse_entries, 1000u);
  EXPECT_EQ(r.metrics.dual_port_violations, 0u);
}

TEST_F(Sim, OneDirectionGivesOnePerCycle) {
  Trace t;
  t.keys.assign(fwd_->begin(), fwd_->begin() + 2000);
  const auto r = simulate(*image_, t, no_cache(2));
  EXPECT_DOUBLE_EQ(r.metrics.throughput_ppc, 1.0);
  t.keys.assign(rev_->begin(), rev_->begin() + 1000);
  EXPECT_DOUBLE_EQ(simulate(*image_, t, no_cache(2)).metrics.throughput_ppc, 1.0);
}

TEST_F(Sim, UncachedLatencyIsPipelineDepth) {
  Trace t;
  t.keys.assign(fwd_->begin(), fwd_->begin() + 500);
  const auto r = simulate(*image_, t, no_cache(1));
  ASSERT_GT(r.metrics.latency_histogram.size(), image_->stages);
  EXPECT_EQ(r.metrics.latency_histogram[image_->stages], 500u);
  EXPECT_DOUBLE_EQ(r.metrics.mean_latency, image_->stages);
}

TEST_F(Sim, AnswersMatchStaticLookupUnderEveryConfig) {
  Trace t;
  t.keys = gen_trace(*fwd_, 20000, TraceParams{}, 1);
  for (std::size_t i = 0; i < 5000; ++i) t.keys.push_back((*rev_)[i % rev_->size()]);
  std::vector<Answer> expected;
  for (const auto& k : t.keys) expected.push_back(lookup_static(*image_, k));
  for (unsigned p : {1u, 3u, 4u, 8u}) {
    for (unsigned q : {0u, 2u, 16u}) {
      for (auto policy : {QueuePolicy::kStall, QueuePolicy::kDrop}) {
        for (bool cache : {false, true}) {
          SimConfig c;
          c.P = p;
          c.Q = q;
          c.queue_policy = policy;
          c.cache_enabled = cache;
          const auto r = simulate(*image_, t, c);
          const auto& m = r.metrics;
          EXPECT_EQ(m.packets_out + m.drops, m.packets_in);
          EXPECT_EQ(m.order_violations, 0u);
          EXPECT_EQ(m.dual_port_violations, 0u);
          EXPECT_LE(m.throughput_ppc, static_cast<double>(p));
          if (!cache) EXPECT_LE(m.throughput_ppc, 2.0);
          if (policy == QueuePolicy::kStall) EXPECT_EQ(m.drops, 0u);
          for (std::size_t i = 0; i < t.keys.size(); ++i) {
            if (r.packets[i].dropped) continue;
            ASSERT_EQ(r.packets[i].answer, expected[i]) << "packet " << i << " p=" << p << " q=" << q;
          }
        }
      }
    }
  }
}

TEST_F(Sim, FifoPerDirectionWithoutReorder) {
  Trace t;
  t.keys = gen_trace(*fwd_, 10000, TraceParams{}, 2);
  SimConfig c;
  c.reorder = false;
  const auto r = simulate(*image_, t, c);
  EXPECT_EQ(r.metrics.direction_order_violations, 0u);
  EXPECT_GT(r.metrics.order_violations, 0u);  // cache hits overtake pipeline packets
}

TEST_F(Sim, CacheRaisesThroughput) {
  Trace t;
  t.keys = gen_trace(*fwd_, 50000, TraceParams{}, 3);
  SimConfig c;
  c.P = 4;
  c.C = 160;
  const auto cached = simulate(*image_, t, c);
  c.cache_enabled = false;
  const auto plain = simulate(*image_, t, c);
  EXPECT_GT(cached.metrics.throughput_ppc, plain.metrics.throughput_ppc);
  EXPECT_GT(cached.metrics.cache_hits, 0u);
  EXPECT_EQ(cached.metrics.cache_hits + cached.metrics.cache_misses, t.keys.size());
}

TEST_F(Sim, DropPolicyCountsDrops) {
  Trace t;
  t.keys.assign(fwd_->begin(), fwd_->begin() + 1000);
  SimConfig c = no_cache(4);
  c.Q = 0;
  c.queue_policy = QueuePolicy::kDrop;
  const auto r = simulate(*image_, t, c);
  EXPECT_GT(r.metrics.drops, 0u);
  EXPECT_EQ(r.metrics.packets_out + r.metrics.drops, 1000u);
}

TEST_F(Sim, ArrivalCyclesAreHonoured) {
  Trace t;
  for (std::size_t i = 0; i < 100; ++i) {
    t.keys.push_back((*fwd_)[i]);
    t.arrivals.push_back(i * 10);
  }
  const auto r = simulate(*image_, t, no_cache(4));
  for (std::size_t i = 0; i < 100; ++i) EXPECT_EQ(r.packets[i].accept, i * 10);
}

TEST_F(Sim, ZeroBubblesMatchPlainSimulation) {
  Trace t;
  t.keys = gen_trace(*fwd_, 5000, TraceParams{}, 4);
  const SimConfig c;
  const auto a = simulate(*image_, t, c);
  const auto b = simulate_with_updates(*image_, t, {}, c);
  EXPECT_EQ(a.metrics.cycles, b.metrics.cycles);
  EXPECT_EQ(a.metrics.cache_hits, b.metrics.cache_hits);
  EXPECT_DOUBLE_EQ(a.metrics.throughput_ppc, b.metrics.throughput_ppc);
}

TEST_F(Sim, PayloadBubbleSwitchesAnswerAtomically) {
  const Header key = (*fwd_)[0];
  const auto old_hop = lookup_static(*image_, key);
  ASSERT_TRUE(old_hop.has_value());
  UpdatePlanner planner(*image_, *table_);
  const auto plan = planner.plan(LeafPayloadChange{key, *old_hop + 1000});
  ASSERT_EQ(plan.status, PlanStatus::kApplied);
  ASSERT_EQ(plan.bubbles.size(), 1u);
  ASSERT_EQ(plan.entry_writes(), 1u);

  Trace t;
  for (int i = 0; i < 4000; ++i) t.keys.push_back(i % 2 ? key : (*fwd_)[1 + i % 500]);
  SimConfig c = no_cache(1);
  const auto base = simulate(*image_, t, c);
  const std::vector<ScheduledBubble> sched{{plan.bubbles[0], 1000}};
  const auto r = simulate_with_updates(*image_, t, sched, c);
  ASSERT_EQ(r.bubbles.size(), 1u);
  const auto& b = r.bubbles[0];
  EXPECT_GE(b.admit, 1000u);
  EXPECT_EQ(b.complete, b.admit + image_->stages - 1);
  const std::uint64_t base_span = base.metrics.last_release - base.metrics.first_release;
  const std::uint64_t span = r.metrics.last_release - r.metrics.first_release;
  EXPECT_LE(span, base_span + 1);
  for (std::size_t i = 1; i < t.keys.size(); i += 2) {
    const auto& p = r.packets[i];
    if (p.complete < b.admit) EXPECT_EQ(p.answer, old_hop);
    if (p.accept > b.complete) EXPECT_EQ(p.answer, *old_hop + 1000);
    EXPECT_TRUE(p.answer == old_hop || p.answer == *old_hop + 1000);
  }
}

TEST_F(Sim, ForwardBubbleLeavesReverseSearchesAlone) {
  UpdatePlanner planner(*image_, *table_);
  std::vector<ScheduledBubble> sched;
  for (std::size_t i = 0; i < 20; ++i) {
    const auto plan = planner.plan(LeafPayloadChange{(*fwd_)[i * 7], 4242});
    for (const auto& b : plan.bubbles) sched.push_back({b, 50 + i * 40});
  }
  ASSERT_FALSE(sched.empty());
  Trace t;
  for (std::size_t i = 0; i < 3000; ++i) t.keys.push_back(i % 3 == 0 ? (*fwd_)[i % 200] : (*rev_)[i % rev_->size()]);
  const SimConfig c = no_cache(2);
  const auto base = simulate(*image_, t, c);
  const auto r = simulate_with_updates(*image_, t, sched, c);
  for (std::size_t i = 0; i < t.keys.size(); ++i) {
    if (r.packets[i].direction != Direction::kReverse) continue;
    ASSERT_EQ(r.packets[i].answer, base.packets[i].answer);
  }
}

TEST_F(Sim, CsvOutputs) {
  Trace t;
  t.keys.assign(fwd_->begin(), fwd_->begin() + 100);
  SimConfig c;
  c.record_occupancy = true;
  const auto r = simulate(*image_, t, c);
  std::ostringstream m, o;
  write_metrics_csv(m, r.metrics);
  write_occupancy_csv(o, r.metrics);
  EXPECT_EQ(m.str().substr(0, 12), "param,value\n");
  EXPECT_NE(m.str().find("throughput_ppc,"), std::string::npos);
  EXPECT_EQ(o.str().substr(0, o.str().find('\n')),
            "cycle,forward_inflight,reverse_inflight,forward_queue,reverse_queue,released");
  EXPECT_EQ(r.metrics.occupancy.size(), r.metrics.cycles);
}

}  // namespace
}  // namespace bipipe
