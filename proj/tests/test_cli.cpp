// Drives the installed binary as a subprocess, the way a user would.

#include <sys/wait.h>

#include <cstdlib>
#include <random>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "placebo/io.hpp"
#include "support/test_support.hpp"

using namespace placebo;
using testsupport::TempDir;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli(const TempDir& t, const std::string& args) {
  const std::string o = t.str(".stdout"), e = t.str(".stderr");
  const std::string cmd = fmt::format("'{}' {} >'{}' 2>'{}'", PLACEBO_CLI_PATH, args, o, e);
  const int status = std::system(cmd.c_str());
  Result r{WIFEXITED(status) ? WEXITSTATUS(status) : -1, read_file(o), read_file(e)};
  fs::remove(o);
  fs::remove(e);
  return r;
}

void write_toy_set(const fs::path& dir, std::size_t count, std::uint64_t seed = 1) {
  fs::create_directories(dir);
  std::mt19937_64 g(seed);
  for (std::size_t k = 0; k < count; ++k)
    write_file((dir / fmt::format("toy-{:02}.cnf", k)).string(), to_dimacs(testsupport::random_cnf(g, 10, 43)));
}

std::string single_line(std::string s) {
  while (!s.empty() && s.back() == '\n') s.pop_back();
  return s;
}

// Minimal config on two fixture instances (n = 50 and n = 75), 3 runs each.
void write_minimal_config(const TempDir& t) {
  const nlohmann::json c = {{"benchmarks", {testsupport::fixture_dir() + "/uf50-218", testsupport::fixture_dir() + "/uf75-325"}},
                            {"split", "none"},
                            {"max_instances_per_group", 1},
                            {"n_runs", 3},
                            {"master_seed", 4},
                            {"params", {{"t0", 51.71}, {"alpha", 0.92}, {"m_steps", 10}, {"mni", 20}}},
                            {"out_dir", "out"}};
  write_file(t.str("exp.json"), c.dump(2));
}

}  // namespace

TEST(Cli, UsageErrors) {
  TempDir t("cli-usage");
  EXPECT_EQ(cli(t, "").code, 2);
  EXPECT_EQ(cli(t, "launch").code, 2);
  EXPECT_EQ(cli(t, "run").code, 2);  // no --config
  EXPECT_EQ(cli(t, "--config missing.json run").code, 2);
  EXPECT_EQ(cli(t, "--help").code, 0);
  write_file(t.str("bad.json"), R"({"benchmarks": [], "colour": 1})");
  const auto r = cli(t, fmt::format("--config '{}' run", t.str("bad.json")));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("colour"), std::string::npos);
  EXPECT_NE(r.err.find("at least one source"), std::string::npos);
}

TEST(Cli, RunResumeBerAndReport) {
  TempDir t("cli-run");
  write_minimal_config(t);
  const std::string cfg = t.str("exp.json");

  // Interrupted run: exit 1, then resume to completion.
  auto r = cli(t, fmt::format("--config '{}' run --max-cells 5", cfg));
  EXPECT_EQ(r.code, 1) << r.err;
  r = cli(t, fmt::format("--config '{}' run --resume", cfg));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("reused 5"), std::string::npos);
  const auto run = nlohmann::json::parse(read_file(single_line(r.out)));
  EXPECT_EQ(run.at("instances"), 2);
  EXPECT_TRUE(run.at("seed_pairing_ok").get<bool>());
  const std::string sa = t.str("out/results_sa.csv"), pl = t.str("out/results_placebo.csv");
  ASSERT_TRUE(fs::exists(sa));
  ASSERT_TRUE(fs::exists(pl));
  EXPECT_TRUE(fs::exists(t.str("out/manifest.json")));

  // A fresh uninterrupted run yields identical result files.
  const std::string sa_text = read_file(sa), pl_text = read_file(pl);
  r = cli(t, fmt::format("--config '{}' --out '{}' run", cfg, t.str("again")));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_file(t.str("again/results_sa.csv")), sa_text);
  EXPECT_EQ(read_file(t.str("again/results_placebo.csv")), pl_text);

  r = cli(t, fmt::format("--out '{}' ber '{}' '{}' --delta 0,0.02", t.str("ber"), sa, pl));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(t.str("ber/ber_0.0000.csv")));
  EXPECT_TRUE(fs::exists(t.str("ber/ber_0.0200.csv")));
  EXPECT_NE(r.err.find("overall"), std::string::npos);

  r = cli(t, fmt::format("--out '{}' report '{}' '{}'", t.str("rep"), sa, pl));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(t.str("rep/summary.json")));
  EXPECT_TRUE(fs::exists(t.str("rep/plots/ecdf_n50.svg")));
  EXPECT_TRUE(fs::exists(t.str("rep/plots/hist_overall.svg")));
}

TEST(Cli, SingleAlgorithmRun) {
  TempDir t("cli-sa");
  write_minimal_config(t);
  const auto r = cli(t, fmt::format("--config '{}' run --algorithms sa", t.str("exp.json")));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(t.str("out/results_sa.csv")));
  EXPECT_FALSE(fs::exists(t.str("out/results_placebo.csv")));
  EXPECT_EQ(cli(t, fmt::format("--config '{}' run --algorithms ga", t.str("exp.json"))).code, 2);
}

TEST(Cli, BerRejectsUnpairedFiles) {
  TempDir t("cli-unpaired");
  std::mt19937_64 g(1);
  auto [a, b] = testsupport::random_pair(g, 2, 3);
  b.set_seed(1, 1, a.seed(1, 1) ^ 1);
  write_file(t.str("a.csv"), results_to_csv(a));
  write_file(t.str("b.csv"), results_to_csv(b));
  const auto r = cli(t, fmt::format("--out '{}' ber '{}' '{}'", t.str("o"), t.str("a.csv"), t.str("b.csv")));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("paired"), std::string::npos);
  EXPECT_EQ(cli(t, fmt::format("ber '{}' '{}'", t.str("a.csv"), t.str("none.csv"))).code, 2);
  EXPECT_EQ(cli(t, fmt::format("ber '{}' '{}' --delta -1", t.str("a.csv"), t.str("a.csv"))).code, 2);
}

TEST(Cli, FetchLocalIsIdempotentAndBadUrlLeavesNothing) {
  TempDir t("cli-fetch");
  write_toy_set(t.path() / "src", 20);
  auto r = cli(t, fmt::format("--out '{}' fetch '{}'", t.str("cache"), t.str("src")));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(single_line(r.out), t.str("cache/manifest.json"));
  const auto m = nlohmann::json::parse(read_file(t.str("cache/manifest.json")));
  EXPECT_EQ(m.at("instances").size(), 20u);
  EXPECT_EQ(m.at("instances")[0].at("split"), "train");
  r = cli(t, fmt::format("--out '{}' fetch '{}'", t.str("cache"), t.str("src")));
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.err.find("up to date"), std::string::npos);

  r = cli(t, fmt::format("--out '{}' fetch http://127.0.0.1:9/uf50-218.tar.gz", t.str("dl")));
  EXPECT_EQ(r.code, 2);
  EXPECT_FALSE(fs::exists(t.str("dl")));
  r = cli(t, fmt::format("--out '{}' fetch http://127.0.0.1:9/uf50-218.tar.gz", t.str("cache")));
  EXPECT_EQ(r.code, 2);
  EXPECT_FALSE(fs::exists(t.str("cache/uf50-218.tar.gz")));
  EXPECT_FALSE(fs::exists(t.str("cache/uf50-218.tar.gz.part")));
  EXPECT_TRUE(fs::exists(t.str("cache/manifest.json")));
}

TEST(Cli, TuneNeedsTrainingSplit) {
  TempDir t("cli-tune-err");
  write_toy_set(t.path() / "small", 5);
  write_file(t.str("none.json"), nlohmann::json{{"benchmarks", "small"}, {"split", "none"}}.dump());
  write_file(t.str("few.json"), nlohmann::json{{"benchmarks", "small"}}.dump());
  EXPECT_EQ(cli(t, fmt::format("--config '{}' tune --phase screen", t.str("none.json"))).code, 2);
  EXPECT_EQ(cli(t, fmt::format("--config '{}' tune --phase screen", t.str("few.json"))).code, 2);
  EXPECT_EQ(cli(t, fmt::format("--config '{}' tune --phase sideways", t.str("few.json"))).code, 2);
}

TEST(Cli, TuneScreenAndRsmOnToySet) {
  TempDir t("cli-tune");
  write_toy_set(t.path() / "bench", 20);
  write_file(t.str("tune.json"), nlohmann::json{{"benchmarks", "bench"},
                                                {"max_instances_per_group", 2},
                                                {"out_dir", "tuned"},
                                                {"tune", {{"runs_per_point", 1}, {"max_iterations", 2}}}}
                                     .dump());
  auto r = cli(t, fmt::format("--config '{}' tune --phase screen", t.str("tune.json")));
  ASSERT_EQ(r.code, 0) << r.err;
  std::size_t rows = 0;
  for (char c : read_file(t.str("tuned/screen_design.jsonl"))) rows += c == '\n';
  EXPECT_EQ(rows, 27u);
  const auto eff = nlohmann::json::parse(read_file(single_line(r.out)));
  EXPECT_EQ(eff.at("rows"), 27);

  r = cli(t, fmt::format("--config '{}' tune --phase rsm", t.str("tune.json")));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto tuned = nlohmann::json::parse(read_file(t.str("tuned/tuned_params.json")));
  EXPECT_TRUE(tuned.at("params").contains("mni"));
  EXPECT_FALSE(tuned.at("stop_reason").get<std::string>().empty());
  EXPECT_TRUE(fs::exists(t.str("tuned/rsm_trace.json")));
}
