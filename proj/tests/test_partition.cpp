#include <gtest/gtest.h>

#include "support.hpp"

namespace bipipe {
namespace {

TEST(PartitionTrie, ZeroBitsIsWholeTrie) {
  const auto trie = leaf_push(build_unibit_trie(testing::random_prefixes(200, 24, 1)));
  const auto p = partition_trie(trie, 0);
  ASSERT_EQ(p.subtrees.size(), 1u);
  EXPECT_EQ(p.node_count(), trie.size());
  EXPECT_TRUE(partition_is_consistent(p));
}

TEST(PartitionTrie, CompleteDepthTwoOneBit) {
  const auto trie = leaf_push(build_unibit_trie(testing::complete_prefixes(2)));
  const auto p = partition_trie(trie, 1);
  ASSERT_EQ(p.subtrees.size(), 2u);
  for (std::uint32_t s = 0; s < 2; ++s) {
    EXPECT_EQ(p.forest.node(p.subtrees[s].root).height, 1);
    EXPECT_EQ(p.subtrees[s].node_count, 3u);
  }
  EXPECT_EQ(p.index, (std::vector<std::int32_t>{0, 1}));
}

TEST(PartitionTrie, TwelveBitsOnSyntheticTable) {
  const auto table = gen_routing_table(30000, 2);
  const auto trie = leaf_push(build_unibit_trie(table));
  const auto p = partition_trie(trie, 12);
  EXPECT_LE(p.subtrees.size(), 4096u);
  EXPECT_EQ(p.index.size(), 4096u);
  EXPECT_TRUE(partition_is_consistent(p));
  for (std::size_t s = 1; s < p.subtrees.size(); ++s) {
    EXPECT_GE(p.subtrees[s - 1].node_count, p.subtrees[s].node_count);
  }
  // Every table address still resolves through its cell's subtree.
  for (auto a : matchable_addresses(table, 2000, 5)) {
    ASSERT_TRUE(p.subtree_for(header_for_address(a)).has_value());
  }
}

TEST(PartitionTrie, ShortLeafIsReplicatedIntoCells) {
  // "0*" is a leaf at depth 1; with I=3 it covers four cells.
  const auto trie = leaf_push(build_unibit_trie(std::vector{parse_prefix("0* 1"), parse_prefix("111* 2")}));
  const auto p = partition_trie(trie, 3);
  std::size_t routed = 0;
  for (auto s : p.index) routed += s != PartitionSet::kNoSubtree;
  EXPECT_EQ(routed, 5u);
  EXPECT_EQ(p.index[6], PartitionSet::kNoSubtree);
}

TEST(PartitionDtree, SubtreePerRootCell) {
  const auto rules = gen_ruleset(1000, 3);
  const auto dt = build_hypercuts(rules);
  const auto p = partition_dtree(dt);
  EXPECT_EQ(p.subtrees.size(), dt.children(dt.root()).size());
  EXPECT_EQ(p.index_kind, IndexKind::kFirstCut);
  EXPECT_TRUE(partition_is_consistent(p));
  EXPECT_EQ(p.node_count() + 1, dt.size());
}

TEST(PartitionDtree, SingleLeafTree) {
  const auto dt = build_hypercuts(std::vector{wildcard_rule(0)});
  const auto p = partition_dtree(dt);
  EXPECT_EQ(p.subtrees.size(), 1u);
}

TEST(SubtreeMetrics, SingleLeaf) {
  const auto p = whole_tree_partition(build_unibit_trie(std::vector{parse_prefix("* 1")}));
  const auto m = subtree_metrics(p, 0);
  EXPECT_EQ(m.leaves, 1u);
  EXPECT_EQ(m.height, 0u);
  EXPECT_DOUBLE_EQ(m.avg_depth_per_leaf(), 0.0);
}

TEST(SubtreeMetrics, CompleteDepthTwo) {
  const auto p = whole_tree_partition(leaf_push(build_unibit_trie(testing::complete_prefixes(2))));
  const auto m = subtree_metrics(p, 0);
  EXPECT_EQ(m.leaves, 4u);
  EXPECT_EQ(m.height, 2u);
  EXPECT_DOUBLE_EQ(m.avg_depth_per_leaf(), 2.0);
  EXPECT_EQ(m.ready_leaves, 4u);
}

TEST(SubtreeMetrics, PathOfLengthThree) {
  const auto p = whole_tree_partition(testing::path_tree(4));
  const auto m = subtree_metrics(p, 0);
  EXPECT_EQ(m.leaves, 1u);
  EXPECT_EQ(m.height, 3u);
  EXPECT_DOUBLE_EQ(m.leaf_per_height(), 1.0 / 3.0);
}

}  // namespace
}  // namespace bipipe
