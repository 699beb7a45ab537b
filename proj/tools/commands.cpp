#include "commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>

#include "bipipe/bipipe.hpp"

namespace bipipe::cli {
namespace fs = std::filesystem;

namespace {

struct Source {
  std::string table;
  std::string rules;
  std::size_t gen_prefixes = 100000;
  std::size_t gen_rules = 0;
  std::string flavor = "acl";
  std::uint64_t seed = 1;
};

struct Loaded {
  std::vector<Prefix> prefixes;
  std::vector<Rule> rules;
  SearchTree tree;

  bool is_trie() const { return tree.kind() == TreeKind::kTrie; }
};

struct TraceOpts {
  std::string file;
  std::size_t length = 200000;
  std::size_t universe = 100000;
  std::optional<double> alpha;
  double reuse = TraceParams{}.reuse;
  unsigned stack_depth = TraceParams{}.stack_depth;
  double unique_ratio = kReferenceUniqueRatio;
};

// Enum-valued flags are parsed as checked strings and converted on use.
const std::map<std::string, RuleFlavor> kFlavors{
    {"acl", RuleFlavor::kAcl}, {"fw", RuleFlavor::kFirewall}, {"ipc", RuleFlavor::kIpChain}};
const std::map<std::string, QueuePolicy> kPolicies{{"stall", QueuePolicy::kStall}, {"drop", QueuePolicy::kDrop}};
const std::map<std::string, MapMode> kModes{
    {"bidir", MapMode::kBidirectional}, {"depth", MapMode::kDepth}, {"height", MapMode::kHeight}};

template <typename Map>
auto keys_of(const Map& m) {
  std::vector<std::string> k;
  for (const auto& [name, value] : m) k.push_back(name);
  return CLI::IsMember(k, CLI::ignore_case);
}

void add_source(CLI::App* cmd, Source& s) {
  auto* table = cmd->add_option("--table", s.table, "Routing table file (a.b.c.d/len hop)");
  auto* rules = cmd->add_option("--rules", s.rules, "ClassBench rule file");
  table->excludes(rules);
  cmd->add_option("--gen-prefixes", s.gen_prefixes, "Synthetic table size when no file is given")
      ->capture_default_str();
  cmd->add_option("--gen-rules", s.gen_rules, "Synthetic rule count; nonzero builds a decision tree");
  cmd->add_option("--flavor", s.flavor, "Synthetic rule flavor: acl, fw or ipc")->transform(keys_of(kFlavors));
  cmd->add_option("--seed", s.seed, "Generator seed")->capture_default_str();
}

void add_map_params(CLI::App* cmd, MapParams& p, std::string& heuristic, std::string& mode) {
  cmd->add_option("--stages", p.stages, "Pipeline depth H")->capture_default_str()->check(CLI::Range(1u, 4096u));
  cmd->add_option("--initial-bits", p.initial_bits, "Index bits I (tries)")
      ->capture_default_str()
      ->check(CLI::Range(0u, 16u));
  cmd->add_option("--heuristic", heuristic, "Inversion heuristic")->capture_default_str();
  cmd->add_option("--mode", mode, "bidir, depth or height")->transform(keys_of(kModes))->capture_default_str();
}

void add_trace_opts(CLI::App* cmd, TraceOpts& t) {
  cmd->add_option("--trace", t.file, "Trace file; generated when absent");
  cmd->add_option("--length", t.length, "Generated trace length")->capture_default_str();
  cmd->add_option("--universe", t.universe, "Distinct candidate keys for a generated trace")->capture_default_str();
  cmd->add_option("--alpha", t.alpha, "Zipf skew; calibrated to --unique-ratio when absent");
  cmd->add_option("--reuse", t.reuse, "Probability of repeating a recent key")->capture_default_str();
  cmd->add_option("--stack-depth", t.stack_depth, "Recent distinct keys eligible for reuse")->capture_default_str();
  cmd->add_option("--unique-ratio", t.unique_ratio, "Target unique/total ratio for calibration")
      ->capture_default_str();
}

Loaded load_source(const Source& s) {
  Loaded l;
  if (!s.rules.empty() || s.gen_rules > 0) {
    l.rules = s.rules.empty() ? gen_ruleset(s.gen_rules, s.seed, kFlavors.at(s.flavor)) : load_ruleset(s.rules);
    if (l.rules.empty()) throw std::runtime_error("rule set is empty");
    l.tree = build_hypercuts(l.rules);
  } else {
    LoadReport report;
    l.prefixes = s.table.empty() ? gen_routing_table(s.gen_prefixes, s.seed) : load_routing_table(s.table, &report);
    l.tree = leaf_push(build_unibit_trie(l.prefixes));
  }
  return l;
}

std::vector<Header> key_universe(const Loaded& l, std::size_t count, std::uint64_t seed) {
  if (l.is_trie()) {
    std::vector<Header> keys;
    for (auto a : matchable_addresses(l.prefixes, count, seed)) keys.push_back(header_for_address(a));
    return keys;
  }
  return gen_rule_headers(l.rules, count, seed);
}

struct BuiltTrace {
  Trace trace;
  TraceParams params;
  std::size_t unique = 0;
};

BuiltTrace make_trace(const Loaded& l, const TraceOpts& t, std::uint64_t seed) {
  BuiltTrace b;
  if (!t.file.empty()) {
    b.trace = load_trace(t.file);
  } else {
    const auto universe = key_universe(l, t.universe, seed + 1);
    b.params.reuse = t.reuse;
    b.params.stack_depth = t.stack_depth;
    if (t.alpha) {
      b.params.zipf_alpha = *t.alpha;
    } else {
      b.params = calibrate_alpha(universe, t.length, t.unique_ratio, b.params, seed + 2);
    }
    b.trace.keys = gen_trace(universe, t.length, b.params, seed + 2);
  }
  b.unique = unique_keys(b.trace.keys);
  return b;
}

std::vector<Heuristic> heuristics_from(const std::string& name) {
  if (name == "all") return {std::begin(kAllHeuristics), std::end(kAllHeuristics)};
  const auto h = parse_heuristic(name);
  if (!h) throw CLI::ValidationError("--heuristic", "unknown heuristic '" + name + "'");
  return {*h};
}

fs::path resolve_out_dir(const std::string& flag) {
  fs::path dir = flag;
  if (dir.empty()) {
    const char* env = std::getenv("BIPIPE_OUT_DIR");
    dir = env && *env ? fs::path(env) : fs::path(".");
  }
  fs::create_directories(dir);
  return dir;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  return os;
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v;
  return os.str();
}

void print_params(std::ostream& out, const TraceParams& p, std::size_t length, std::size_t unique) {
  out << "trace_length=" << length << '\n'
      << "unique_keys=" << unique << '\n'
      << "unique_ratio=" << fmt(length ? static_cast<double>(unique) / length : 0.0, 5) << '\n'
      << "zipf_alpha=" << fmt(p.zipf_alpha) << '\n';
}

// ---- subcommands -----------------------------------------------------------

struct GenTableArgs {
  std::size_t n = 100000;
  std::uint64_t seed = 1;
  std::string out = "table.txt";
};

int cmd_gen_table(const GenTableArgs& a, const fs::path& dir, std::ostream& out) {
  const auto table = gen_routing_table(a.n, a.seed);
  auto os = open_out(dir / a.out);
  write_routing_table(os, table);
  out << "prefixes=" << table.size() << "\nfile=" << (dir / a.out).string() << '\n';
  return kExitOk;
}

struct GenRulesArgs {
  std::size_t n = 1000;
  std::uint64_t seed = 1;
  std::string flavor = "acl";
  std::string out = "rules.txt";
};

int cmd_gen_rules(const GenRulesArgs& a, const fs::path& dir, std::ostream& out) {
  const auto rules = gen_ruleset(a.n, a.seed, kFlavors.at(a.flavor));
  auto os = open_out(dir / a.out);
  write_ruleset(os, rules);
  out << "rules=" << rules.size() << "\nfile=" << (dir / a.out).string() << '\n';
  return kExitOk;
}

struct GenTraceArgs {
  Source src;
  TraceOpts trace;
  std::string out = "trace.txt";
};

int cmd_gen_trace(const GenTraceArgs& a, const fs::path& dir, std::ostream& out) {
  const Loaded l = load_source(a.src);
  TraceOpts t = a.trace;
  t.file.clear();
  const BuiltTrace b = make_trace(l, t, a.src.seed);
  auto os = open_out(dir / a.out);
  write_trace(os, b.trace, !l.is_trie());
  print_params(out, b.params, b.trace.keys.size(), b.unique);
  out << "file=" << (dir / a.out).string() << '\n';
  return kExitOk;
}

struct BuildArgs {
  Source src;
  std::string histogram = "levels.csv";
};

int cmd_build(const BuildArgs& a, const fs::path& dir, std::ostream& out) {
  const Loaded l = load_source(a.src);
  const TreeStats st = tree_stats(l.tree);
  out << "kind=" << (l.is_trie() ? "trie" : "dtree") << '\n'
      << "entries=" << (l.is_trie() ? l.prefixes.size() : l.rules.size()) << '\n'
      << "nodes=" << st.total << '\n'
      << "leaves=" << st.leaves << '\n'
      << "depth=" << st.depth << '\n';
  auto os = open_out(dir / a.histogram);
  os << "level,by_depth,by_height\n";
  for (std::size_t i = 0; i < st.by_depth.size(); ++i) {
    os << i << ',' << st.by_depth[i] << ',' << (i < st.by_height.size() ? st.by_height[i] : 0) << '\n';
  }
  return kExitOk;
}

struct MapArgs {
  Source src;
  MapParams params;
  std::string heuristic = "least_avg_depth_per_leaf";
  std::string mode = "bidir";
  std::vector<double> ifr{1.0};
  bool node_level = false;
  std::string dump;
};

int cmd_map(MapArgs a, const fs::path& dir, std::ostream& out, std::ostream& err) {
  a.params.mode = kModes.at(a.mode);
  const Loaded l = load_source(a.src);
  struct Series {
    std::string label;
    MapParams params;
  };
  std::vector<Series> series;
  if (a.params.mode == MapMode::kBidirectional) {
    for (Heuristic h : heuristics_from(a.heuristic)) {
      for (double ifr : a.ifr) {
        MapParams p = a.params;
        p.heuristic = h;
        p.ifr = ifr;
        p.sibling_blocks = !a.node_level;
        std::ostringstream label;
        label << to_string(h) << "_ifr" << ifr;
        series.push_back({label.str(), p});
      }
    }
  } else {
    series.push_back({std::string(to_string(a.params.mode)), a.params});
  }

  int status = kExitOk;
  auto summary = open_out(dir / "balance_summary.csv");
  summary << kBalanceCsvRowHeader << ",inverted,subtrees\n";
  out << kBalanceCsvRowHeader << ",inverted,subtrees\n";
  bool dumped = false;
  for (const auto& s : series) {
    const MappedTree mt = map_tree(l.tree, s.params);
    const ValidationReport v = validate_mapping(mt.partition, mt.mapping);
    if (!v.ok()) {
      err << s.label << ": " << v.violations.size() << " violations, first: " << v.violations.front().detail << '\n';
      status = kExitValidation;
    }
    const BalanceReport b = balance_report(mt.mapping);
    auto csv = open_out(dir / ("balance_" + s.label + ".csv"));
    write_balance_csv(csv, b);
    const std::string row = balance_csv_row(s.label, b) + ',' + std::to_string(mt.inverted.size()) + ',' +
                            std::to_string(mt.partition.subtrees.size());
    summary << row << '\n';
    out << row << '\n';
    if (!a.dump.empty() && !dumped) {
      auto d = open_out(dir / a.dump);
      write_mapping_dump(d, mt.partition, mt.mapping);
      dumped = true;
    }
  }
  return status;
}

struct SimArgs {
  Source src;
  MapParams params;
  std::string heuristic = "least_avg_depth_per_leaf";
  std::string mode = "bidir";
  double ifr = 1.0;
  TraceOpts trace;
  std::vector<unsigned> p{4};
  std::vector<std::size_t> c{160};
  std::vector<unsigned> q{2};
  std::string policy = "stall";
  bool no_cache = false;
  bool no_reorder = false;
  bool occupancy = false;
};

PipelineImage image_for(const Loaded& l, MapParams params, const std::string& mode, const std::string& heuristic,
                        double ifr) {
  params.mode = kModes.at(mode);
  params.heuristic = heuristics_from(heuristic).front();
  params.ifr = ifr;
  const MappedTree mt = map_tree(l.tree, params);
  return build_pipeline(mt.partition, mt.mapping);
}

int cmd_simulate(const SimArgs& a, const fs::path& dir, std::ostream& out, std::ostream& err) {
  const Loaded l = load_source(a.src);
  const PipelineImage image = image_for(l, a.params, a.mode, a.heuristic, a.ifr);
  const BuiltTrace bt = make_trace(l, a.trace, a.src.seed);
  print_params(out, bt.params, bt.trace.keys.size(), bt.unique);

  std::vector<Answer> expected;
  expected.reserve(bt.trace.keys.size());
  for (const auto& k : bt.trace.keys) expected.push_back(lookup_static(image, k));

  int status = kExitOk;
  auto sweep = open_out(dir / "sweep.csv");
  const std::string header =
      "p,q,c,throughput_ppc,overall_ppc,cycles,cache_hits,cache_misses,drops,stall_cycles,mean_latency,"
      "forward_entries,reverse_entries";
  sweep << header << '\n';
  out << header << '\n';
  bool first = true;
  for (unsigned p : a.p) {
    for (unsigned q : a.q) {
      for (std::size_t c : a.c) {
        SimConfig cfg;
        cfg.P = p;
        cfg.Q = q;
        cfg.C = c;
        cfg.cache_enabled = !a.no_cache;
        cfg.queue_policy = kPolicies.at(a.policy);
        cfg.reorder = !a.no_reorder;
        cfg.record_occupancy = a.occupancy && first;
        cfg.seed = a.src.seed;
        const SimResult r = simulate(image, bt.trace, cfg);
        const SimMetrics& m = r.metrics;
        std::size_t wrong = 0;
        for (std::size_t i = 0; i < r.packets.size(); ++i) {
          if (!r.packets[i].dropped && r.packets[i].answer != expected[i]) ++wrong;
        }
        if (wrong > 0 || (cfg.reorder && m.order_violations > 0) || m.direction_order_violations > 0) {
          err << "p=" << p << " q=" << q << " c=" << c << ": " << wrong << " wrong answers, " << m.order_violations
              << " order violations\n";
          status = kExitValidation;
        }
        std::ostringstream row;
        row << p << ',' << q << ',' << c << ',' << fmt(m.throughput_ppc) << ',' << fmt(m.overall_ppc) << ','
            << m.cycles << ',' << m.cache_hits << ',' << m.cache_misses << ',' << m.drops << ',' << m.stall_cycles
            << ',' << fmt(m.mean_latency, 3) << ',' << m.forward_entries << ',' << m.reverse_entries;
        sweep << row.str() << '\n';
        out << row.str() << '\n';
        if (first) {
          auto mc = open_out(dir / "metrics.csv");
          write_metrics_csv(mc, m);
          if (cfg.record_occupancy) {
            auto oc = open_out(dir / "occupancy.csv");
            write_occupancy_csv(oc, m);
          }
          first = false;
        }
      }
    }
  }
  return status;
}

struct UpdateArgs {
  Source src;
  MapParams params;
  std::string heuristic = "least_avg_depth_per_leaf";
  std::string mode = "bidir";
  double ifr = 1.0;
  TraceOpts trace;
  std::string script;
  std::size_t random_changes = 0;
  std::uint64_t start = 100;
  std::uint64_t interval = 200;
  unsigned p = 4;
  std::size_t c = 160;
  unsigned q = 2;
  bool no_cache = false;
};

struct ScriptLine {
  std::optional<RouteChange> route;
  std::optional<LeafPayloadChange> payload;
  std::string text;
};

// `insert <prefix> <hop>`, `delete <prefix>`, `payload <address> <hop>`.
std::vector<ScriptLine> read_script(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<ScriptLine> lines;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream is(line);
    std::string op, key, hop;
    if (!(is >> op)) continue;
    is >> key >> hop;
    ScriptLine s;
    s.text = op + ' ' + key + (hop.empty() ? "" : ' ' + hop);
    try {
      if (op == "insert" && !hop.empty()) {
        s.route = RouteChange{RouteChange::Op::kInsert, parse_prefix(key + ' ' + hop)};
      } else if (op == "delete" && !key.empty()) {
        s.route = RouteChange{RouteChange::Op::kDelete, parse_prefix(key + " 0")};
      } else if (op == "payload" && !hop.empty()) {
        const auto addr = parse_ipv4(key);
        if (!addr) throw ParseError("bad address '" + key + "'");
        s.payload = LeafPayloadChange{header_for_address(*addr), static_cast<std::uint32_t>(std::stoul(hop))};
      } else {
        throw ParseError("expected insert/delete/payload");
      }
    } catch (const std::exception& e) {
      throw ParseError(path + ":" + std::to_string(no) + ": " + e.what());
    }
    lines.push_back(std::move(s));
  }
  return lines;
}

std::vector<ScriptLine> random_script(const std::vector<Prefix>& table, std::size_t count, unsigned min_length,
                                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<ScriptLine> lines;
  while (lines.size() < count) {
    ScriptLine s;
    const Prefix& base = table[rng() % table.size()];
    if (rng() % 2 == 0 && base.length >= min_length) {
      s.route = RouteChange{RouteChange::Op::kDelete, base};
      s.text = "delete " + format_prefix_key(base);
    } else {
      const unsigned len = std::max<unsigned>({min_length, base.length, 8}) + rng() % 4;
      const Prefix p = make_prefix(base.bits | (static_cast<std::uint32_t>(rng()) & ~prefix_mask(base.length)),
                                   std::min(len, 32u), 1 + static_cast<std::uint32_t>(rng() % 255));
      s.route = RouteChange{RouteChange::Op::kInsert, p};
      s.text = "insert " + format_prefix(p);
    }
    lines.push_back(std::move(s));
  }
  return lines;
}

int cmd_update_demo(const UpdateArgs& a, const fs::path& dir, std::ostream& out, std::ostream& err) {
  const Loaded l = load_source(a.src);
  if (!l.is_trie()) throw std::runtime_error("update-demo needs a routing table");
  const PipelineImage image = image_for(l, a.params, a.mode, a.heuristic, a.ifr);
  const BuiltTrace bt = make_trace(l, a.trace, a.src.seed);

  const auto script = !a.script.empty() ? read_script(a.script)
                                        : random_script(l.prefixes, a.random_changes, a.params.initial_bits,
                                                        a.src.seed + 7);
  UpdatePlanner planner(image, l.prefixes);
  std::vector<ScheduledBubble> scheduled;
  struct Planned {
    const ScriptLine* line;
    UpdatePlan plan;
  };
  std::vector<Planned> planned;
  std::uint64_t cycle = a.start;
  for (const auto& s : script) {
    UpdatePlan plan = s.route ? planner.plan(*s.route) : planner.plan(*s.payload);
    for (const auto& b : plan.bubbles) scheduled.push_back({b, cycle});
    if (!plan.bubbles.empty()) cycle += a.interval;
    planned.push_back({&s, std::move(plan)});
  }

  SimConfig cfg;
  cfg.P = a.p;
  cfg.Q = a.q;
  cfg.C = a.c;
  cfg.cache_enabled = !a.no_cache;
  const SimResult base = simulate(image, bt.trace, cfg);
  const SimResult upd = simulate_with_updates(image, bt.trace, scheduled, cfg);

  std::map<std::uint32_t, std::pair<std::uint64_t, std::uint64_t>> timing;  // change -> admit, complete
  std::set<Direction> bubble_dirs;
  for (const auto& b : upd.bubbles) {
    auto [it, fresh] = timing.try_emplace(b.change, b.admit, b.complete);
    if (!fresh) {
      it->second.first = std::min(it->second.first, b.admit);
      it->second.second = std::max(it->second.second, b.complete);
    }
    bubble_dirs.insert(b.direction);
  }

  auto log = open_out(dir / "update_log.csv");
  log << "line,status,bubbles,writes,direction,first_admit,last_complete,reason\n";
  std::vector<TimedChange> timed;
  bool payload_changes = false;
  for (std::size_t i = 0; i < planned.size(); ++i) {
    const auto& [line, plan] = planned[i];
    std::uint64_t admit = 0, complete = 0;
    if (!plan.bubbles.empty()) std::tie(admit, complete) = timing.at(plan.change);
    log << '"' << line->text << "\"," << to_string(plan.status) << ',' << plan.bubbles.size() << ','
        << plan.entry_writes() << ',' << (plan.bubbles.empty() ? "-" : to_string(plan.bubbles.front().direction))
        << ',' << admit << ',' << complete << ",\"" << plan.reason << "\"\n";
    if (plan.status != PlanStatus::kApplied) continue;
    if (line->route) {
      timed.push_back({*line->route, admit, complete});
    } else {
      payload_changes = true;
    }
  }

  // Packets travelling a direction no bubble used must see exactly the
  // answers of the update-free run.
  std::size_t isolated = 0, isolated_diff = 0;
  for (std::size_t i = 0; i < upd.packets.size(); ++i) {
    const auto& p = upd.packets[i];
    if (p.dropped || p.cache_hit || bubble_dirs.count(p.direction)) continue;
    ++isolated;
    if (p.answer != base.packets[i].answer) ++isolated_diff;
  }

  int status = kExitOk;
  out << "changes=" << planned.size() << "\nbubbles=" << scheduled.size() << '\n'
      << "needs_remap="
      << std::count_if(planned.begin(), planned.end(),
                       [](const Planned& p) { return p.plan.status == PlanStatus::kNeedsRemap; })
      << '\n'
      << "throughput_ppc_base=" << fmt(base.metrics.throughput_ppc) << '\n'
      << "throughput_ppc_updates=" << fmt(upd.metrics.throughput_ppc) << '\n'
      << "isolated_packets=" << isolated << "\nisolated_mismatches=" << isolated_diff << '\n';
  if (isolated_diff > 0) status = kExitValidation;
  if (!payload_changes) {
    std::vector<TimedLookup> lookups;
    lookups.reserve(upd.packets.size());
    for (std::size_t i = 0; i < upd.packets.size(); ++i) {
      const auto& p = upd.packets[i];
      if (p.dropped) continue;
      lookups.push_back({bt.trace.keys[i], p.accept, p.complete, p.answer});
    }
    const ConsistencyReport rep = check_update_consistency(l.prefixes, timed, lookups);
    out << "checked=" << rep.checked << "\nmismatches=" << rep.mismatches << '\n';
    if (rep.mismatches > 0) {
      err << rep.mismatches << " lookups returned neither the old nor the new answer\n";
      status = kExitValidation;
    }
  } else {
    out << "consistency=skipped (payload changes present)\n";
  }
  auto mc = open_out(dir / "metrics.csv");
  write_metrics_csv(mc, upd.metrics);
  return status;
}

void apply_config(CLI::App* sub, const std::vector<std::pair<std::string, std::string>>& config) {
  for (const auto& [key, value] : config) {
    const std::string name = key.rfind("--", 0) == 0 ? key : "--" + key;
    CLI::Option* opt = sub->get_option_no_throw(name);
    if (opt == nullptr) throw CLI::ValidationError(name, "unknown config key for '" + sub->get_name() + "'");
    opt->default_val(value);
  }
}

}  // namespace

std::vector<std::pair<std::string, std::string>> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  std::vector<std::pair<std::string, std::string>> kv;
  std::string line;
  std::size_t no = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(path + ":" + std::to_string(no) + ": expected key=value");
    kv.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return kv;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bidirectional linear pipeline mapping and simulation"};
  app.require_subcommand(1);
  std::string out_dir;
  std::string config;
  app.add_option("--out-dir", out_dir, "Directory for output files (default $BIPIPE_OUT_DIR or .)");
  app.add_option("--config", config, "key=value defaults for the subcommand's options");

  GenTableArgs gt;
  auto* gen_table = app.add_subcommand("gen-table", "Write a synthetic backbone-like routing table");
  gen_table->add_option("--n", gt.n, "Prefix count")->capture_default_str();
  gen_table->add_option("--seed", gt.seed)->capture_default_str();
  gen_table->add_option("--out", gt.out, "File name")->capture_default_str();

  GenRulesArgs gr;
  auto* gen_rules = app.add_subcommand("gen-rules", "Write a synthetic ClassBench-format rule set");
  gen_rules->add_option("--n", gr.n, "Rule count")->capture_default_str();
  gen_rules->add_option("--seed", gr.seed)->capture_default_str();
  gen_rules->add_option("--flavor", gr.flavor)->transform(keys_of(kFlavors))->capture_default_str();
  gen_rules->add_option("--out", gr.out, "File name")->capture_default_str();

  GenTraceArgs gtr;
  auto* gen_trace_cmd = app.add_subcommand("gen-trace", "Write a locality-bearing trace over a table or rule set");
  add_source(gen_trace_cmd, gtr.src);
  add_trace_opts(gen_trace_cmd, gtr.trace);
  gen_trace_cmd->add_option("--out", gtr.out, "File name")->capture_default_str();

  BuildArgs ba;
  auto* build = app.add_subcommand("build", "Build a trie or decision tree and report its level histogram");
  add_source(build, ba.src);
  build->add_option("--histogram", ba.histogram, "CSV file name")->capture_default_str();

  MapArgs ma;
  auto* map = app.add_subcommand("map", "Map a tree onto pipeline stages and write balance CSVs");
  add_source(map, ma.src);
  add_map_params(map, ma.params, ma.heuristic, ma.mode);
  map->add_option("--ifr", ma.ifr, "Inversion factor(s)")->delimiter(',');
  map->add_flag("--node-level", ma.node_level, "Schedule single nodes instead of sibling blocks");
  map->add_option("--dump", ma.dump, "Mapping dump file name for the first series");

  SimArgs sa;
  auto* sim = app.add_subcommand("simulate", "Cycle-accurate pipeline simulation, optionally swept over P, C, Q");
  add_source(sim, sa.src);
  add_map_params(sim, sa.params, sa.heuristic, sa.mode);
  sim->add_option("--ifr", sa.ifr)->capture_default_str();
  add_trace_opts(sim, sa.trace);
  sim->add_option("--p", sa.p, "Input width(s)")->delimiter(',');
  sim->add_option("--c", sa.c, "Cache size(s)")->delimiter(',');
  sim->add_option("--q", sa.q, "Queue size(s)")->delimiter(',');
  sim->add_option("--queue-policy", sa.policy, "stall or drop")->transform(keys_of(kPolicies))->capture_default_str();
  sim->add_flag("--no-cache", sa.no_cache);
  sim->add_flag("--no-reorder", sa.no_reorder);
  sim->add_flag("--occupancy", sa.occupancy, "Write occupancy.csv for the first run");

  UpdateArgs ua;
  auto* upd = app.add_subcommand("update-demo", "Run write bubbles through a simulation and check every lookup");
  add_source(upd, ua.src);
  add_map_params(upd, ua.params, ua.heuristic, ua.mode);
  upd->add_option("--ifr", ua.ifr)->capture_default_str();
  add_trace_opts(upd, ua.trace);
  auto* script = upd->add_option("--script", ua.script, "Change script: insert/delete/payload lines");
  upd->add_option("--random-changes", ua.random_changes, "Generate this many route changes instead")
      ->excludes(script);
  upd->add_option("--start", ua.start, "Cycle of the first bubble")->capture_default_str();
  upd->add_option("--interval", ua.interval, "Cycles between changes")->capture_default_str();
  upd->add_option("--p", ua.p)->capture_default_str();
  upd->add_option("--c", ua.c)->capture_default_str();
  upd->add_option("--q", ua.q)->capture_default_str();
  upd->add_flag("--no-cache", ua.no_cache);

  std::vector<std::string> argv(args.rbegin(), args.rend());  // CLI11 consumes from the back
  try {
    // The config file must be read before the subcommand options parse.
    for (std::size_t i = 0; i + 1 < args.size(); ++i) {
      if (args[i] == "--config") config = args[i + 1];
    }
    if (!config.empty()) {
      const auto kv = read_config(config);
      for (const auto& a : args) {
        if (auto* sub = app.get_subcommand_no_throw(a); sub != nullptr) {
          apply_config(sub, kv);
          break;
        }
      }
    }
    app.parse(argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    const fs::path dir = resolve_out_dir(out_dir);
    if (gen_table->parsed()) return cmd_gen_table(gt, dir, out);
    if (gen_rules->parsed()) return cmd_gen_rules(gr, dir, out);
    if (gen_trace_cmd->parsed()) return cmd_gen_trace(gtr, dir, out);
    if (build->parsed()) return cmd_build(ba, dir, out);
    if (map->parsed()) return cmd_map(ma, dir, out, err);
    if (sim->parsed()) return cmd_simulate(sa, dir, out, err);
    if (upd->parsed()) return cmd_update_demo(ua, dir, out, err);
  } catch (const CLI::ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitUsage;
}

}  // namespace bipipe::cli
