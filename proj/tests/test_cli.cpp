#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "../tools/commands.hpp"
#include "support.hpp"

namespace bipipe {
namespace {

namespace fs = std::filesystem;

struct CliRun {
  int code = 0;
  std::string out;
  std::string err;

  // key=value lines of stdout.
  std::map<std::string, std::string> values() const {
    std::map<std::string, std::string> kv;
    std::istringstream in(out);
    for (std::string line; std::getline(in, line);) {
      if (const auto eq = line.find('='); eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
  }
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("bipipe_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  CliRun invoke(std::vector<std::string> args, bool with_dir = true) const {
    if (with_dir) {
      args.insert(args.begin(), dir_.string());
      args.insert(args.begin(), "--out-dir");
    }
    std::ostringstream out, err;
    CliRun r;
    r.code = cli::run(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
  }

  std::string slurp(const std::string& name) const {
    std::ifstream in(dir_ / name);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
  }

  static std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> v;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) v.push_back(l);
    return v;
  }

  fs::path dir_;
};

TEST_F(Cli, GenTableThenBuildMatchesLibraryStats) {
  ASSERT_EQ(invoke({"gen-table", "--n", "3000", "--seed", "5"}).code, 0);
  const auto table_path = (dir_ / "table.txt").string();
  const auto r = invoke({"build", "--table", table_path});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto st = tree_stats(leaf_push(build_unibit_trie(load_routing_table(table_path))));
  const auto kv = r.values();
  EXPECT_EQ(kv.at("kind"), "trie");
  EXPECT_EQ(kv.at("entries"), "3000");
  EXPECT_EQ(kv.at("nodes"), std::to_string(st.total));
  EXPECT_EQ(kv.at("leaves"), std::to_string(st.leaves));
  const auto hist = lines(slurp("levels.csv"));
  EXPECT_EQ(hist.front(), "level,by_depth,by_height");
  EXPECT_EQ(hist.size(), st.by_depth.size() + 1);
}

TEST_F(Cli, IfrZeroEqualsForwardOnly) {
  const auto r = invoke({"map", "--gen-prefixes", "5000", "--ifr", "0"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto table = gen_routing_table(5000, 1);
  const auto trie = leaf_push(build_unibit_trie(table));
  MapParams params;
  params.ifr = 0.0;
  const auto b = balance_report(map_tree(trie, params).mapping);
  std::ostringstream expected;
  write_balance_csv(expected, b);
  const auto files = lines(slurp("balance_summary.csv"));
  ASSERT_EQ(files.size(), 2u);
  for (const auto& entry : fs::directory_iterator(dir_)) {
    const auto name = entry.path().filename().string();
    if (name.rfind("balance_least_avg", 0) == 0) EXPECT_EQ(slurp(name), expected.str());
  }
  EXPECT_NE(files[1].find(",0,"), std::string::npos);  // nothing inverted
}

TEST_F(Cli, DepthModeAndAllHeuristics) {
  auto r = invoke({"map", "--gen-prefixes", "3000", "--mode", "depth"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir_ / "balance_depth.csv"));
  r = invoke({"map", "--gen-prefixes", "3000", "--heuristic", "all", "--ifr", "0.5,1"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(lines(slurp("balance_summary.csv")).size(), 1u + 4 * 2);
}

TEST_F(Cli, SweepWritesOneRowPerPoint) {
  const auto r = invoke({"simulate", "--gen-prefixes", "3000", "--length", "5000", "--universe", "2000", "--p", "1,2,4",
                      "--q", "2,16", "--occupancy"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(lines(slurp("sweep.csv")).size(), 1u + 3 * 2);
  EXPECT_TRUE(fs::exists(dir_ / "metrics.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "occupancy.csv"));
}

TEST_F(Cli, ZeroChangeUpdateDemoEqualsPlainRun) {
  const std::vector<std::string> common{"--gen-prefixes", "3000", "--length", "5000", "--universe", "2000"};
  auto args = common;
  args.insert(args.begin(), "update-demo");
  args.insert(args.end(), {"--random-changes", "0"});
  const auto u = invoke(args);
  ASSERT_EQ(u.code, 0) << u.err;
  const auto kv = u.values();
  EXPECT_EQ(kv.at("bubbles"), "0");
  EXPECT_EQ(kv.at("throughput_ppc_base"), kv.at("throughput_ppc_updates"));
  EXPECT_EQ(kv.at("mismatches"), "0");
}

TEST_F(Cli, UpdateDemoScript) {
  ASSERT_EQ(invoke({"gen-table", "--n", "3000"}).code, 0);
  {
    std::ofstream s(dir_ / "changes.txt");
    const auto t = load_routing_table((dir_ / "table.txt").string());
    s << "# two changes\ninsert " << format_prefix_key(t[10]) << " 250\ndelete " << format_prefix_key(t[20]) << '\n';
  }
  const auto r = invoke({"update-demo", "--table", (dir_ / "table.txt").string(), "--script",
                      (dir_ / "changes.txt").string(), "--length", "5000", "--universe", "2000"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto kv = r.values();
  EXPECT_EQ(kv.at("changes"), "2");
  EXPECT_EQ(kv.at("mismatches"), "0");
  EXPECT_EQ(kv.at("isolated_mismatches"), "0");
  EXPECT_TRUE(fs::exists(dir_ / "update_log.csv"));
}

TEST_F(Cli, ConfigFileAndEnvironmentOutDir) {
  {
    std::ofstream c(dir_ / "cfg.txt");
    c << "# defaults\nn = 700\n--seed=9\n";
  }
  ASSERT_EQ(::setenv("BIPIPE_OUT_DIR", dir_.string().c_str(), 1), 0);
  const auto r = invoke({"--config", (dir_ / "cfg.txt").string(), "gen-table", "--out", "cfg_table.txt"}, false);
  ::unsetenv("BIPIPE_OUT_DIR");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto t = load_routing_table((dir_ / "cfg_table.txt").string());
  EXPECT_EQ(t, gen_routing_table(700, 9));
  // Command-line flags beat the file.
  ASSERT_EQ(invoke({"--config", (dir_ / "cfg.txt").string(), "gen-table", "--n", "50"}).code, 0);
  EXPECT_EQ(load_routing_table((dir_ / "table.txt").string()).size(), 50u);
}

TEST_F(Cli, BadInputsFail) {
  EXPECT_EQ(invoke({"map", "--gen-prefixes", "100", "--heuristic", "bogus"}).code, cli::kExitUsage);
  EXPECT_EQ(invoke({"map", "--gen-prefixes", "100", "--stages", "3"}).code, cli::kExitError);  // infeasible
  EXPECT_EQ(invoke({"map", "--no-such-flag"}).code, cli::kExitUsage);
  EXPECT_EQ(invoke({"simulate", "--queue-policy", "sometimes"}).code, cli::kExitUsage);
  EXPECT_NE(invoke({"build", "--table", (dir_ / "missing.txt").string()}).code, cli::kExitOk);
  {
    std::ofstream c(dir_ / "bad.txt");
    c << "unknown_key=1\n";
  }
  EXPECT_NE(invoke({"--config", (dir_ / "bad.txt").string(), "gen-table"}).code, cli::kExitOk);
}

}  // namespace
}  // namespace bipipe
