#include <gtest/gtest.h>

#include <random>
#include <set>

#include "support.hpp"

namespace bipipe {
namespace {

constexpr auto kWildcardLine = "@0.0.0.0/0 0.0.0.0/0 0 : 65535 0 : 65535 0x00/0x00";

TEST(ParseRule, Wildcard) {
  const Rule r = parse_rule(kWildcardLine, 0);
  EXPECT_EQ(r, wildcard_rule(0));
}

TEST(ParseRule, PrefixToRange) {
  const Rule r = parse_rule("@10.0.0.0/8 0.0.0.0/0 0 : 65535 80 : 80 0x06/0xFF", 3);
  EXPECT_EQ(r.range(Field::kSrcIp), (Range{0x0a000000u, 0x0affffffu}));
  EXPECT_EQ(r.range(Field::kDstPort), (Range{80, 80}));
  EXPECT_EQ(r.range(Field::kProto), (Range{6, 6}));
  EXPECT_EQ(r.id, 3u);
  EXPECT_EQ(parse_rule(format_rule(r), 3), r);
}

TEST(ParseRule, RejectsInvertedRange) {
  EXPECT_THROW(parse_rule("@0.0.0.0/0 0.0.0.0/0 90 : 80 0 : 65535 0x00/0x00", 0), ParseError);
  EXPECT_THROW(parse_rule("@0.0.0.0/0 0.0.0.0/0 0 : 65535", 0), ParseError);
}

TEST(Classify, IdenticalRulesEarlierWins) {
  const std::vector rules{parse_rule(kWildcardLine, 0), parse_rule(kWildcardLine, 1)};
  const auto t = build_hypercuts(rules);
  const Header h{1, 2, 3, 4, 5};
  EXPECT_EQ(classify_oracle(rules, h), 0u);
  EXPECT_EQ(classify(t, h), 0u);
  EXPECT_EQ(t.rules.size(), 2u);
}

TEST(HyperCuts, SingleRuleIsSingleLeaf) {
  const auto t = build_hypercuts(std::vector{wildcard_rule(0)});
  EXPECT_EQ(t.size(), 1u);
  EXPECT_EQ(t.node(t.root()).kind, NodeKind::kLeaf);
}

TEST(HyperCuts, ProtocolSplitGivesDepthOneTree) {
  std::vector<Rule> rules;
  for (std::uint32_t i = 0; i < 4; ++i) {
    Rule r = wildcard_rule(i);
    r.priority = i;
    r.range(Field::kProto) = Range{i * 64, i * 64};
    rules.push_back(r);
  }
  DTreeParams params;
  params.bucket_capacity = 1;
  const auto t = build_hypercuts(rules, params);
  EXPECT_EQ(t.height(), 1u);
  const auto& cut = t.cuts.at(t.node(t.root()).cut);
  ASSERT_EQ(cut.dims.size(), 1u);
  EXPECT_EQ(cut.dims[0].field, Field::kProto);
  for (std::uint32_t i = 0; i < 4; ++i) {
    Header h{};
    h[static_cast<std::size_t>(Field::kProto)] = i * 64;
    EXPECT_EQ(classify(t, h), i);
    h[static_cast<std::size_t>(Field::kProto)] = i * 64 + 1;
    EXPECT_FALSE(classify(t, h).has_value());
  }
}

TEST(Classify, WildcardOnlyAlwaysMatches) {
  const std::vector rules{wildcard_rule(7)};
  const auto t = build_hypercuts(rules);
  std::mt19937 gen(1);
  auto rng = [&] { return static_cast<std::uint32_t>(gen()); };
  for (int i = 0; i < 100; ++i) {
    const Header h{rng(), rng(), rng() & 0xffff, rng() & 0xffff, rng() & 0xff};
    EXPECT_EQ(classify(t, h), 7u);
  }
}

TEST(Classify, HeaderOutsideAllRules) {
  Rule r = wildcard_rule(0);
  r.range(Field::kDstPort) = Range{80, 80};
  const std::vector rules{r};
  const auto t = build_hypercuts(rules);
  const Header h{0, 0, 0, 443, 6};
  EXPECT_FALSE(classify_oracle(rules, h).has_value());
  EXPECT_FALSE(classify(t, h).has_value());
}

TEST(Classify, HundredRulesAgainstOracle) {
  for (auto flavor : {RuleFlavor::kAcl, RuleFlavor::kFirewall, RuleFlavor::kIpChain}) {
    const auto rules = gen_ruleset(100, 21, flavor);
    const auto t = build_hypercuts(rules);
    for (const auto& h : gen_rule_headers(rules, 10000, 4)) {
      ASSERT_EQ(classify(t, h), classify_oracle(rules, h)) << format_header(h, true);
    }
    for (const auto& h : boundary_headers(rules)) {
      ASSERT_EQ(classify(t, h), classify_oracle(rules, h)) << format_header(h, true);
    }
  }
}

TEST(HyperCuts, EveryRuleReachesSomeBucket) {
  const auto rules = gen_ruleset(300, 8);
  const auto t = build_hypercuts(rules);
  std::set<std::uint32_t> seen;
  for (const auto& b : t.buckets) {
    for (auto idx : b) seen.insert(t.rules[idx].id);
  }
  EXPECT_EQ(seen.size(), rules.size());
}

TEST(HyperCuts, RespectsFanoutCap) {
  DTreeParams params;
  params.max_cut_fanout = 8;
  const auto t = build_hypercuts(gen_ruleset(500, 2, RuleFlavor::kFirewall), params);
  for (const auto& c : t.cuts) EXPECT_LE(c.cells(), 8u);
}

}  // namespace
}  // namespace bipipe
