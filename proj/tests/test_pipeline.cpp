#include <gtest/gtest.h>

#include <random>

#include "support.hpp"

namespace bipipe {
namespace {

PipelineImage image_of(const SearchTree& tree, const MapParams& params = {}, const ImageOptions& opts = {}) {
  const auto mt = map_tree(tree, params);
  return build_pipeline(mt.partition, mt.mapping, opts);
}

TEST(BuildPipeline, SingleLeaf) {
  MapParams params;
  params.initial_bits = 0;
  const auto img = image_of(build_unibit_trie(std::vector{parse_prefix("* 5")}), params);
  EXPECT_EQ(img.total_entries(), 1u);
  EXPECT_EQ(img.entries(1), 1u);
  EXPECT_EQ(lookup_static(img, 0xdeadbeefu), 5u);
}

TEST(BuildPipeline, ChainHasOneBlockPerStage) {
  // A single /5 leaf-pushes to a chain of internal nodes, each with a null
  // sibling; depth mapping puts one root then one pair per stage.
  const auto trie = leaf_push(build_unibit_trie(std::vector{parse_prefix("10110* 4")}));
  MapParams params;
  params.initial_bits = 0;
  params.stages = 6;
  params.mode = MapMode::kDepth;
  const auto img = image_of(trie, params);
  EXPECT_EQ(img.entries(1), 1u);
  for (unsigned s = 2; s <= 6; ++s) EXPECT_EQ(img.entries(s), 2u) << "stage " << s;
  for (unsigned s = 1; s <= 6; ++s) {
    for (const auto& e : img.memory[s - 1]) {
      if (e.kind == NodeKind::kInternal) EXPECT_EQ(e.child_skip, 0);
    }
  }
  EXPECT_EQ(lookup_static(img, 0xb0000000u), 4u);
  EXPECT_FALSE(lookup_static(img, 0xb8000000u).has_value());
}

TEST(BuildPipeline, WalkEqualsTrieWalk) {
  const auto table = gen_routing_table(20000, 8);
  const auto trie = leaf_push(build_unibit_trie(table));
  const auto mt = map_tree(trie, MapParams{});
  const auto img = build_pipeline(mt.partition, mt.mapping);
  std::mt19937 rng(2);
  std::size_t reverse_hits = 0;
  auto check = [&](std::uint32_t a) {
    ASSERT_EQ(lookup_static(img, a), trie_lookup(trie, a)) << format_ipv4(a);
    if (const auto s = img.subtree_for(header_for_address(a)); s && img.dit[*s].direction == Direction::kReverse) {
      ++reverse_hits;
    }
  };
  for (int i = 0; i < 100000; ++i) check(rng());
  for (auto a : matchable_addresses(table, 20000, 3)) check(a);
  EXPECT_GT(reverse_hits, 0u);
}

TEST(BuildPipeline, EmptyCellIsUnrouted) {
  const auto trie = leaf_push(build_unibit_trie(std::vector{parse_prefix("10.0.0.0/8 1")}));
  const auto img = image_of(trie);
  EXPECT_EQ(lookup_static(img, 0x0a010203u), 1u);
  EXPECT_FALSE(lookup_static(img, 0xc0a80001u).has_value());
  EXPECT_FALSE(begin_walk(img, header_for_address(0xc0a80001u)).has_value());
}

TEST(BuildPipeline, DecisionTreeWalkEqualsClassify) {
  const auto rules = gen_ruleset(1000, 12, RuleFlavor::kFirewall);
  const auto dt = build_hypercuts(rules);
  const auto img = image_of(dt);
  EXPECT_EQ(img.kind, TreeKind::kDecisionTree);
  for (const auto& h : gen_rule_headers(rules, 20000, 5)) ASSERT_EQ(lookup_static(img, h), classify(dt, h));
}

TEST(BuildPipeline, DirectionAgnosticResults) {
  const auto table = gen_routing_table(5000, 9);
  const auto trie = leaf_push(build_unibit_trie(table));
  MapParams fwd;
  fwd.ifr = 0.0;
  MapParams rev;
  rev.ifr = 25.0;  // every subtree inverted
  const auto a = image_of(trie, fwd);
  const auto b = image_of(trie, rev);
  for (const auto& d : b.dit) ASSERT_EQ(d.direction, Direction::kReverse);
  for (auto addr : matchable_addresses(table, 5000, 1)) ASSERT_EQ(lookup_static(a, addr), lookup_static(b, addr));
}

TEST(BuildPipeline, RejectsInvalidMapping) {
  const auto trie = leaf_push(build_unibit_trie(testing::complete_prefixes(3)));
  const auto p = whole_tree_partition(trie);
  auto m = map_level_by_level(p, 4, LevelMode::kDepth);
  std::swap(m.placement[1], m.placement[3]);
  EXPECT_THROW(build_pipeline(p, m), std::invalid_argument);
}

TEST(BuildPipeline, CapacityOverflowReportsBits) {
  const auto trie = leaf_push(build_unibit_trie(gen_routing_table(2000, 1)));
  ImageOptions opts;
  opts.stage_capacity = 16;
  try {
    image_of(trie, {}, opts);
    FAIL() << "expected length_error";
  } catch (const std::length_error& e) {
    EXPECT_NE(std::string(e.what()).find("bits"), std::string::npos);
  }
}

TEST(MemoryFootprint, ReferenceArithmetic) {
  const std::vector<std::size_t> stages(25, 32768);
  const auto f = memory_footprint(stages, 20);
  EXPECT_EQ(f.total_bits, 16384000u);
  EXPECT_EQ(f.total_bytes, 2048000u);
  EXPECT_DOUBLE_EQ(f.max_stage_kib, 80.0);
  EXPECT_DOUBLE_EQ(f.total_mb, 2.0);
  EXPECT_DOUBLE_EQ(f.total_mbit, 16.0);
}

TEST(MemoryFootprint, OneEntryIsTwentyBits) {
  MapParams params;
  params.initial_bits = 0;
  const auto img = image_of(build_unibit_trie(std::vector{parse_prefix("* 1")}), params);
  EXPECT_EQ(memory_footprint(img, EntryBits::kPaper20).total_bits, 20u);
}

TEST(MemoryFootprint, TotalIsEntriesTimesWidth) {
  const auto img = image_of(leaf_push(build_unibit_trie(gen_routing_table(20000, 2))));
  for (auto mode : {EntryBits::kPaper20, EntryBits::kActual}) {
    const auto f = memory_footprint(img, mode);
    EXPECT_EQ(f.total_bits, img.total_entries() * f.entry_bits);
    EXPECT_EQ(f.stage_bits.size(), img.stages);
  }
  EXPECT_GT(actual_entry_bits(img), 20u);
  EXPECT_EQ(bits_for(32768), 15u);
  EXPECT_EQ(bits_for(32769), 16u);
  EXPECT_EQ(bits_for(1), 0u);
}

}  // namespace
}  // namespace bipipe
