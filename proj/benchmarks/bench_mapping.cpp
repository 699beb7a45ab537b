#include <benchmark/benchmark.h>

#include <bipipe/bipipe.hpp>

using namespace bipipe;

namespace {

PartitionSet partitioned(std::size_t n) { return partition_trie(leaf_push(build_unibit_trie(gen_routing_table(n, 21))), 12); }

}  // namespace

// Linear in node count at fixed H; compare the per-item rate across sizes.
static void BM_MapBidirectional(benchmark::State& state) {
  const auto part = partitioned(static_cast<std::size_t>(state.range(0)));
  const auto inv = select_inversions(part, Heuristic::kLeastAvgDepthPerLeaf, 1.0, 25);
  for (auto _ : state) benchmark::DoNotOptimize(map_bidirectional(part, inv, 25));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(part.node_count()));
}
BENCHMARK(BM_MapBidirectional)->Arg(10000)->Arg(100000)->Arg(1000000)->Unit(benchmark::kMillisecond);

static void BM_SelectInversions(benchmark::State& state) {
  const auto part = partitioned(100000);
  const auto metrics = all_subtree_metrics(part);
  const auto h = static_cast<Heuristic>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(select_inversions(metrics, h, 1.0, 25, part.node_count()));
  }
  state.SetLabel(std::string(to_string(h)));
}
BENCHMARK(BM_SelectInversions)->DenseRange(0, 3);

static void BM_PartitionTrie(benchmark::State& state) {
  const auto trie = leaf_push(build_unibit_trie(gen_routing_table(100000, 21)));
  for (auto _ : state) benchmark::DoNotOptimize(partition_trie(trie, static_cast<unsigned>(state.range(0))));
}
BENCHMARK(BM_PartitionTrie)->Arg(8)->Arg(12)->Arg(16)->Unit(benchmark::kMillisecond);

static void BM_BuildPipeline(benchmark::State& state) {
  const auto mt = map_tree(leaf_push(build_unibit_trie(gen_routing_table(100000, 21))), MapParams{});
  for (auto _ : state) benchmark::DoNotOptimize(build_pipeline(mt.partition, mt.mapping));
}
BENCHMARK(BM_BuildPipeline)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
