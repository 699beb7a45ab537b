#include <benchmark/benchmark.h>

#include <bipipe/bipipe.hpp>

using namespace bipipe;

static void BM_BuildUnibitTrie(benchmark::State& state) {
  const auto table = gen_routing_table(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(build_unibit_trie(table));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BuildUnibitTrie)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

static void BM_LeafPush(benchmark::State& state) {
  const auto raw = build_unibit_trie(gen_routing_table(static_cast<std::size_t>(state.range(0)), 1));
  for (auto _ : state) benchmark::DoNotOptimize(leaf_push(raw));
}
BENCHMARK(BM_LeafPush)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

static void BM_TrieLookup(benchmark::State& state) {
  const auto table = gen_routing_table(100000, 1);
  const auto trie = leaf_push(build_unibit_trie(table));
  const auto keys = matchable_addresses(table, 4096, 2);
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(trie_lookup(trie, keys[i++ & 4095]));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_TrieLookup);

static void BM_PipelineLookup(benchmark::State& state) {
  const auto table = gen_routing_table(100000, 1);
  const auto mt = map_tree(leaf_push(build_unibit_trie(table)), MapParams{});
  const auto img = build_pipeline(mt.partition, mt.mapping);
  const auto keys = matchable_addresses(table, 4096, 2);
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(lookup_static(img, keys[i++ & 4095]));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_PipelineLookup);

static void BM_BuildHypercuts(benchmark::State& state) {
  const auto rules = gen_ruleset(static_cast<std::size_t>(state.range(0)), 1, RuleFlavor::kAcl);
  for (auto _ : state) benchmark::DoNotOptimize(build_hypercuts(rules));
}
BENCHMARK(BM_BuildHypercuts)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

static void BM_Classify(benchmark::State& state) {
  const auto rules = gen_ruleset(1000, 1, RuleFlavor::kAcl);
  const auto dt = build_hypercuts(rules);
  const auto headers = gen_rule_headers(rules, 4096, 2);
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(classify(dt, headers[i++ & 4095]));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Classify);

BENCHMARK_MAIN();
