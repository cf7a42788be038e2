#include "cli.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace ipdnet {
namespace {

namespace fs = std::filesystem;

struct Invocation {
  int code = -1;
  std::string out;
  std::string err;
};

Invocation invoke(std::initializer_list<std::string> args) {
  std::vector<std::string> storage{"ipdnet"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& s : storage) argv.push_back(s.c_str());
  std::ostringstream out, err;
  Invocation r;
  r.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("ipdnet_cli_" + std::string(
                                ::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str(const std::string& sub) const { return (path / sub).string(); }
};

TEST(Cli, ExitCodeContract) {
  EXPECT_EQ(cli::kExitOk, 0);
  EXPECT_EQ(cli::kExitFailure, 1);
  EXPECT_EQ(cli::kExitUsage, 2);
}

TEST(Cli, MissingSubcommandIsUsageError) {
  EXPECT_EQ(invoke({}).code, cli::kExitUsage);
  EXPECT_EQ(invoke({"train"}).code, cli::kExitUsage);
}

TEST(Cli, HelpDocumentsEveryFlag) {
  const Invocation top = invoke({"--help"});
  EXPECT_EQ(top.code, cli::kExitOk);
  for (const char* sub : {"run", "grid", "analyze", "selfcheck"}) {
    EXPECT_NE(top.out.find(sub), std::string::npos) << sub;
  }
  const Invocation run = invoke({"run", "--help"});
  EXPECT_EQ(run.code, cli::kExitOk);
  for (const char* flag : {"--config", "--schedule", "--bias", "--episodes", "--seed", "--out",
                           "--no-rewiring-learning", "--frozen-random-rewiring"}) {
    EXPECT_NE(run.out.find(flag), std::string::npos) << flag;
  }
  const Invocation grid = invoke({"grid", "--help"});
  for (const char* flag : {"--seeds", "--episodes", "--out", "--parallel", "--conditions"}) {
    EXPECT_NE(grid.out.find(flag), std::string::npos) << flag;
  }
}

TEST(Cli, BogusBiasIsUsageErrorWithUsageText) {
  const Invocation r = invoke({"run", "--bias", "bogus"});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_NE(r.err.find("--bias"), std::string::npos);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
}

TEST(Cli, UnknownFlagIsRejected) {
  EXPECT_EQ(invoke({"run", "--epsiodes", "5"}).code, cli::kExitUsage);
  EXPECT_EQ(invoke({"grid", "--fast"}).code, cli::kExitUsage);
}

TEST(Cli, FrozenRewiringWithoutRewiringIsUsageError) {
  TempDir dir;
  const Invocation r = invoke({"run", "--schedule", "none", "--frozen-random-rewiring",
                               "--episodes", "5", "--out", dir.str("r")});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_NE(r.err.find("frozen-random-rewiring"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir.path / "r" / "metrics.csv"));
}

TEST(Cli, ConfigExcludesInlineFlags) {
  TempDir dir;
  std::ofstream(dir.path / "c.json") << "{}";
  EXPECT_EQ(invoke({"run", "--config", dir.str("c.json"), "--bias", "tft"}).code,
            cli::kExitUsage);
  EXPECT_EQ(invoke({"run", "--config", dir.str("missing.json")}).code, cli::kExitUsage);
  std::ofstream(dir.path / "bad.json") << R"({"bais": "tft"})";
  EXPECT_EQ(invoke({"run", "--config", dir.str("bad.json"), "--out", dir.str("o")}).code,
            cli::kExitUsage);
}

TEST(Cli, RunWritesResultFiles) {
  TempDir dir;
  const Invocation r = invoke({"run", "--schedule", "full", "--bias", "tft", "--episodes", "30",
                               "--seed", "1", "--metrics-bin", "10", "--out", dir.str("r"),
                               "--quiet"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_TRUE(r.err.empty());
  for (const char* f : {"metrics.csv", "response.csv", "checkpoint.bin", "config.json"}) {
    EXPECT_TRUE(fs::exists(dir.path / "r" / f)) << f;
  }
  EXPECT_NE(r.out.find("metrics.csv"), std::string::npos);
}

TEST(Cli, ProgressGoesToStandardError) {
  TempDir dir;
  const Invocation r = invoke({"run", "--episodes", "40", "--metrics-bin", "1", "--out",
                               dir.str("r")});
  ASSERT_EQ(r.code, cli::kExitOk);
  EXPECT_FALSE(r.err.empty());
  EXPECT_EQ(r.out.find("mutual_coop"), std::string::npos);
  EXPECT_NE(r.err.find("mutual_coop"), std::string::npos);
}

TEST(Cli, ConfigFileMatchesInlineFlags) {
  TempDir dir;
  ASSERT_EQ(invoke({"run", "--schedule", "half", "--bias", "ostracism", "--episodes", "40",
                    "--seed", "3", "--metrics-bin", "10", "--no-rewiring-learning", "--out",
                    dir.str("inline"), "--quiet"})
                .code,
            cli::kExitOk);
  std::ofstream(dir.path / "c.json") << R"({"schedule": "half", "bias": "ostracism",
      "episodes": 40, "seed": 3, "metrics_bin": 10, "rewiring_learning": false})";
  ASSERT_EQ(invoke({"run", "--config", dir.str("c.json"), "--out", dir.str("config"), "--quiet"})
                .code,
            cli::kExitOk);
  for (const char* f : {"metrics.csv", "response.csv", "checkpoint.bin", "config.json"}) {
    EXPECT_EQ(slurp(dir.path / "inline" / f), slurp(dir.path / "config" / f)) << f;
  }
}

TEST(Cli, RerunIntoFreshDirectoryIsIdentical) {
  TempDir dir;
  for (const char* sub : {"a", "b"}) {
    ASSERT_EQ(invoke({"run", "--episodes", "30", "--metrics-bin", "10", "--out", dir.str(sub),
                      "--quiet"})
                  .code,
              cli::kExitOk);
  }
  EXPECT_EQ(slurp(dir.path / "a/metrics.csv"), slurp(dir.path / "b/metrics.csv"));
  EXPECT_EQ(slurp(dir.path / "a/checkpoint.bin"), slurp(dir.path / "b/checkpoint.bin"));
}

TEST(Cli, OutputDirectoryFromEnvironment) {
  TempDir dir;
  ::setenv("IPDNET_OUT_DIR", dir.str("env").c_str(), 1);
  const Invocation r = invoke({"run", "--bias", "allc", "--episodes", "10", "--seed", "4",
                               "--metrics-bin", "5", "--quiet"});
  ::unsetenv("IPDNET_OUT_DIR");
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_TRUE(fs::exists(dir.path / "env" / "full-allc-s4" / "metrics.csv"));
}

TEST(Cli, FilteredGridRunsOneRun) {
  TempDir dir;
  const Invocation r = invoke({"grid", "--seeds", "1", "--conditions", "full:tft", "--episodes",
                               "20", "--out", dir.str("g"), "--quiet"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  const auto manifest = nlohmann::json::parse(slurp(dir.path / "g" / "manifest.json"));
  ASSERT_EQ(manifest.size(), 1u);
  EXPECT_EQ(manifest[0].at("run_id"), "full-tft-s1");
  EXPECT_EQ(manifest[0].at("status"), "ok");

  const Invocation a = invoke({"analyze", dir.str("g")});
  EXPECT_EQ(a.code, cli::kExitOk) << a.err;
  EXPECT_TRUE(fs::exists(dir.path / "g" / "aggregate.csv"));
  EXPECT_TRUE(fs::exists(dir.path / "g" / "response_aggregate.csv"));
}

TEST(Cli, DefaultGridHasTwelveConditions) {
  TempDir dir;
  const Invocation r =
      invoke({"grid", "--seeds", "1", "--episodes", "2", "--out", dir.str("g"), "--quiet"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_NE(r.out.find("12 runs, 0 failed"), std::string::npos) << r.out;
  EXPECT_EQ(nlohmann::json::parse(slurp(dir.path / "g" / "manifest.json")).size(), 12u);
}

TEST(Cli, ZeroSeedsWritesEmptyManifest) {
  TempDir dir;
  const Invocation r = invoke({"grid", "--seeds", "0", "--out", dir.str("g"), "--quiet"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_TRUE(nlohmann::json::parse(slurp(dir.path / "g" / "manifest.json")).empty());
}

TEST(Cli, GridParallelismGivesIdenticalFiles) {
  TempDir dir;
  for (const char* par : {"1", "2"}) {
    ASSERT_EQ(invoke({"grid", "--seeds", "2", "--conditions", "full:allc,none:none",
                      "--episodes", "20", "--parallel", par, "--out",
                      dir.str(std::string("p") + par), "--quiet"})
                  .code,
              cli::kExitOk);
  }
  for (const char* run : {"full-allc-s1", "full-allc-s2", "none-none-s1", "none-none-s2"}) {
    for (const char* f : {"metrics.csv", "response.csv", "checkpoint.bin"}) {
      const fs::path rel = fs::path("runs") / run / f;
      EXPECT_EQ(slurp(dir.path / "p1" / rel), slurp(dir.path / "p2" / rel)) << rel;
    }
  }
}

TEST(Cli, GridUsageAndRuntimeErrors) {
  TempDir dir;
  EXPECT_EQ(invoke({"grid", "--conditions", "full:bogus", "--out", dir.str("g")}).code,
            cli::kExitUsage);
  EXPECT_EQ(invoke({"grid", "--parallel", "0", "--out", dir.str("g")}).code, cli::kExitUsage);
  std::ofstream(dir.path / "file") << "x";
  const Invocation r =
      invoke({"grid", "--seeds", "1", "--conditions", "full:tft", "--episodes", "5", "--out",
              dir.str("file/sub"), "--quiet"});
  EXPECT_EQ(r.code, cli::kExitFailure);
  EXPECT_NE(r.err.find("not writable"), std::string::npos);
}

TEST(Cli, AnalyzeWithoutManifestFails) {
  TempDir dir;
  EXPECT_EQ(invoke({"analyze", dir.str("")}).code, cli::kExitFailure);
  EXPECT_EQ(invoke({"analyze"}).code, cli::kExitUsage);
}

TEST(Cli, SelfcheckPassesAndReportsSuites) {
  const Invocation r = invoke({"selfcheck"});
  EXPECT_EQ(r.code, cli::kExitOk) << r.out;
  EXPECT_NE(r.out.find("gradient_check"), std::string::npos);
  EXPECT_NE(r.out.find("passed"), std::string::npos);
}

TEST(Cli, SelfcheckWithZeroToleranceFails) {
  const Invocation r = invoke({"selfcheck", "--tolerance-scale", "0"});
  EXPECT_EQ(r.code, cli::kExitFailure);
  EXPECT_NE(r.out.find("FAIL"), std::string::npos);
  EXPECT_NE(r.out.find("failing:"), std::string::npos);
}

}  // namespace
}  // namespace ipdnet
