#include <benchmark/benchmark.h>

#include <bipipe/bipipe.hpp>

using namespace bipipe;

namespace {

struct Fixture {
  PipelineImage image;
  std::vector<Prefix> table;
  Trace trace;

  Fixture() : table(gen_routing_table(100000, 1)) {
    const auto mt = map_tree(leaf_push(build_unibit_trie(table)), MapParams{});
    image = build_pipeline(mt.partition, mt.mapping);
    std::vector<Header> universe;
    for (auto a : matchable_addresses(table, 50000, 2)) universe.push_back(header_for_address(a));
    trace.keys = gen_trace(universe, 100000, TraceParams{}, 3);
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

}  // namespace

// Simulated packets per wall-clock second over P, with and without the cache.
static void BM_Simulate(benchmark::State& state) {
  const auto& f = fixture();
  SimConfig c;
  c.P = static_cast<unsigned>(state.range(0));
  c.cache_enabled = state.range(1) != 0;
  double ppc = 0.0;
  for (auto _ : state) ppc = simulate(f.image, f.trace, c).metrics.throughput_ppc;
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.trace.keys.size()));
  state.counters["ppc"] = ppc;
}
BENCHMARK(BM_Simulate)->ArgsProduct({{1, 2, 4, 8}, {0, 1}})->Unit(benchmark::kMillisecond);

static void BM_LruCache(benchmark::State& state) {
  LruCache<std::uint32_t, std::uint32_t> cache(static_cast<std::size_t>(state.range(0)));
  std::uint32_t k = 0;
  for (auto _ : state) {
    const std::uint32_t key = (k++ * 2654435761u) % 4096;
    if (!cache.get(key)) cache.put(key, key);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_LruCache)->Arg(160)->Arg(4096);

static void BM_PlanRouteChange(benchmark::State& state) {
  const auto& f = fixture();
  const auto addrs = matchable_addresses(f.table, 4096, 9);
  UpdatePlanner planner(f.image, f.table);
  std::uint32_t i = 0;
  for (auto _ : state) {
    const RouteChange ch{RouteChange::Op::kInsert, make_prefix(addrs[i & 4095], 20 + i % 9, 1 + i % 200)};
    benchmark::DoNotOptimize(planner.plan(ch));
    ++i;
  }
}
BENCHMARK(BM_PlanRouteChange);

BENCHMARK_MAIN();
