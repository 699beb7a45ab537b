#include <gtest/gtest.h>

#include "support.hpp"

namespace bipipe {
namespace {

using testing::painted_lpm;
using testing::random_prefixes;

TEST(ParsePrefix, DefaultRoute) {
  const Prefix p = parse_prefix("0.0.0.0/0 1");
  EXPECT_EQ(p.length, 0);
  EXPECT_EQ(p.bits, 0u);
  EXPECT_EQ(p.next_hop, 1u);
}

TEST(ParsePrefix, BitString) {
  const Prefix p = parse_prefix("010* 3");
  EXPECT_EQ(p.length, 3);
  EXPECT_EQ(p.bits, 0x40000000u);
  EXPECT_EQ(p.next_hop, 3u);
  EXPECT_EQ(format_prefix_bits(p), "010*");
}

TEST(ParsePrefix, DottedQuad) {
  const Prefix p = parse_prefix("192.168.0.0/16 7");
  EXPECT_EQ(p.length, 16);
  EXPECT_EQ(p.bits >> 16, 0b1100000010101000u);
  EXPECT_EQ(format_prefix(p), "192.168.0.0/16 7");
}

TEST(ParsePrefix, MasksTrailingBits) {
  EXPECT_EQ(parse_prefix("10.1.2.3/8 1").bits, 0x0a000000u);
}

TEST(ParsePrefix, RejectsMalformed) {
  EXPECT_THROW(parse_prefix("1.2.3.4/33 1"), ParseError);
  EXPECT_THROW(parse_prefix("300.1.1.1/8 1"), ParseError);
  EXPECT_THROW(parse_prefix("1.2.3/8 1"), ParseError);
  EXPECT_THROW(parse_prefix("10.0.0.0/8"), ParseError);
  EXPECT_THROW(parse_prefix("01x* 2"), ParseError);
}

TEST(UnibitTrie, DefaultRouteIsSingleLeaf) {
  const auto t = build_unibit_trie(std::vector{parse_prefix("* 1")});
  ASSERT_EQ(t.size(), 1u);
  EXPECT_TRUE(t.is_leaf(t.root()));
  EXPECT_EQ(t.node(t.root()).payload, 1u);
}

TEST(UnibitTrie, PrefixSitsAtItsBitPath) {
  const auto t = build_unibit_trie(std::vector{parse_prefix("010* 3"), parse_prefix("1* 1")});
  NodeId n = t.root();
  for (unsigned b : {0u, 1u, 0u}) {
    const auto kids = t.children(n);
    ASSERT_EQ(kids.size(), 2u);
    n = kids[b];
    ASSERT_NE(n, kNoNode);
  }
  EXPECT_EQ(t.node(n).depth, 3);
  EXPECT_EQ(t.node(n).payload, 3u);
}

TEST(UnibitTrie, RejectsDuplicates) {
  EXPECT_THROW(build_unibit_trie(std::vector{parse_prefix("10* 1"), parse_prefix("10* 2")}), std::invalid_argument);
}

TEST(LeafPush, SingleLeafUnchanged) {
  const auto t = leaf_push(build_unibit_trie(std::vector{parse_prefix("* 1")}));
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t.node(t.root()).kind, NodeKind::kLeaf);
  EXPECT_EQ(t.node(t.root()).payload, 1u);
}

TEST(LeafPush, TwoNestedPrefixes) {
  const auto t = leaf_push(build_unibit_trie(std::vector{parse_prefix("0* 1"), parse_prefix("01* 2")}));
  ASSERT_TRUE(t.is_leaf_pushed_trie());
  const auto root = t.children(t.root());
  const auto& left = t.node(root[0]);
  const auto& right = t.node(root[1]);
  EXPECT_EQ(left.kind, NodeKind::kInternal);
  EXPECT_EQ(right.kind, NodeKind::kNull);
  const auto kids = t.children(root[0]);
  EXPECT_EQ(t.node(kids[0]).kind, NodeKind::kLeaf);
  EXPECT_EQ(t.node(kids[0]).payload, 1u);
  EXPECT_EQ(t.node(kids[1]).payload, 2u);
  EXPECT_EQ(t.size(), 5u);
}

TEST(LeafPush, InternalNodesCarryNoPayload) {
  const auto prefixes = random_prefixes(300, 20, 4);
  const auto t = leaf_push(build_unibit_trie(prefixes));
  EXPECT_TRUE(t.is_leaf_pushed_trie());
  const auto raw = build_unibit_trie(prefixes);
  EXPECT_GE(t.size(), raw.size());
  EXPECT_LE(t.height(), 32u);
}

TEST(LeafPush, MatchesOracleOnEveryEightBitAddress) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto prefixes = random_prefixes(40, 8, seed);
    const auto raw = build_unibit_trie(prefixes, 8);
    const auto pushed = leaf_push(raw);
    const auto oracle = painted_lpm(prefixes, 8);
    for (std::uint32_t a = 0; a < 256; ++a) {
      const std::uint32_t addr = a << 24;
      ASSERT_EQ(trie_lookup(raw, addr), oracle[a]) << "seed " << seed << " addr " << a;
      ASSERT_EQ(trie_lookup(pushed, addr), oracle[a]) << "seed " << seed << " addr " << a;
      ASSERT_EQ(lpm_linear_scan(prefixes, addr), oracle[a]);
    }
  }
}

TEST(LeafPush, ThousandPrefixesOnSixteenBitProbes) {
  const auto prefixes = random_prefixes(1000, 32, 17);
  const auto trie = leaf_push(build_unibit_trie(prefixes));
  std::mt19937 rng(5);
  for (std::uint32_t v = 0; v < (1u << 16); ++v) {
    const std::uint32_t addr = (v << 16) | (rng() & 0xffffu);
    ASSERT_EQ(trie_lookup(trie, addr), lpm_linear_scan(prefixes, addr)) << format_ipv4(addr);
  }
}

TEST(LpmOracle, EmptySetMatchesNothing) {
  EXPECT_FALSE(lpm_linear_scan({}, 0x12345678u).has_value());
  EXPECT_FALSE(LpmIndex{}.lookup(0x12345678u).has_value());
}

TEST(LpmOracle, LongerMatchWins) {
  const std::vector prefixes{parse_prefix("0* 1"), parse_prefix("01* 2")};
  EXPECT_EQ(lpm_linear_scan(prefixes, 0x40000000u), 2u);
  EXPECT_EQ(lpm_linear_scan(prefixes, 0x00000001u), 1u);
  EXPECT_FALSE(lpm_linear_scan(prefixes, 0x80000000u).has_value());
}

TEST(LpmIndex, AgreesWithLinearScan) {
  const auto prefixes = random_prefixes(1000, 32, 9);
  const LpmIndex index(prefixes);
  std::mt19937 rng(3);
  for (int i = 0; i < 20000; ++i) {
    const std::uint32_t a = rng();
    ASSERT_EQ(index.lookup(a), lpm_linear_scan(prefixes, a));
  }
}

TEST(LpmIndex, InsertEraseCoveringWithin) {
  LpmIndex idx;
  EXPECT_FALSE(idx.insert(parse_prefix("10.0.0.0/8 1")).has_value());
  EXPECT_EQ(idx.insert(parse_prefix("10.0.0.0/8 4")), 1u);
  idx.insert(parse_prefix("10.1.0.0/16 2"));
  idx.insert(parse_prefix("10.1.2.0/24 3"));
  EXPECT_EQ(idx.size(), 3u);
  EXPECT_EQ(idx.covering(0x0a010000u, 16), 4u);
  EXPECT_EQ(idx.covering(0x0a010200u, 24), 2u);
  EXPECT_EQ(idx.within(0x0a010000u, 16).size(), 2u);
  EXPECT_EQ(idx.erase(parse_prefix("10.1.0.0/16 0")), 2u);
  EXPECT_EQ(idx.lookup(0x0a010505u), 4u);
  EXPECT_EQ(idx.find(parse_prefix("10.1.2.0/24 0")), 3u);
}

TEST(TreeStats, SingleLeaf) {
  const auto st = tree_stats(build_unibit_trie(std::vector{parse_prefix("* 1")}));
  EXPECT_EQ(st.by_depth, std::vector<std::size_t>{1});
  EXPECT_EQ(st.by_height, std::vector<std::size_t>{1});
  EXPECT_EQ(st.total, 1u);
  EXPECT_EQ(st.depth, 0u);
}

TEST(TreeStats, CompleteDepthThreeTrie) {
  const auto t = leaf_push(build_unibit_trie(testing::complete_prefixes(3)));
  const auto st = tree_stats(t);
  EXPECT_EQ(st.by_depth, (std::vector<std::size_t>{1, 2, 4, 8}));
  EXPECT_EQ(st.by_height, (std::vector<std::size_t>{8, 4, 2, 1}));
  EXPECT_EQ(st.total, 15u);
  EXPECT_EQ(st.leaves, 8u);
  EXPECT_EQ(st.depth, t.height());
}

TEST(TreeStats, SyntheticTableSkewsDeep) {
  const auto t = leaf_push(build_unibit_trie(gen_routing_table(20000, 3)));
  const auto st = tree_stats(t);
  std::size_t sum = 0;
  for (auto c : st.by_depth) sum += c;
  EXPECT_EQ(sum, st.total);
  const auto peak = std::max_element(st.by_depth.begin(), st.by_depth.end()) - st.by_depth.begin();
  EXPECT_GE(peak, 16);
  EXPECT_LE(peak, 25);
}

}  // namespace
}  // namespace bipipe
