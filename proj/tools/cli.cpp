#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "ipdnet/config_io.hpp"
#include "ipdnet/experiment.hpp"
#include "ipdnet/grid.hpp"
#include "ipdnet/selfcheck.hpp"

namespace ipdnet::cli {

namespace fs = std::filesystem;

namespace {

constexpr std::int64_t kDeskEpisodes = 20'000;
constexpr int kDeskSeeds = 5;
constexpr const char* kOutEnv = "IPDNET_OUT_DIR";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

fs::path default_out_dir() {
  if (const char* env = std::getenv(kOutEnv); env && *env) return env;
  return "results";
}

/// Fails early with a clear message if `dir` cannot hold output files.
void ensure_writable(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  const fs::path probe = dir / ".write_probe";
  std::ofstream out(probe);
  if (ec || !out) throw std::runtime_error("output directory not writable: " + dir.string());
  out.close();
  fs::remove(probe, ec);
}

struct RunFlags {
  std::string config_path;
  std::string schedule = "full";
  std::string bias = "none";
  std::int64_t episodes = kDeskEpisodes;
  std::uint64_t seed = 1;
  std::int64_t metrics_bin = 100;
  std::string out;
  bool no_rewiring_learning = false;
  bool frozen_random_rewiring = false;
  bool quiet = false;
};

struct GridFlags {
  int seeds = kDeskSeeds;
  std::int64_t episodes = kDeskEpisodes;
  std::string out;
  int parallel = 1;
  std::vector<std::string> conditions;
  bool quiet = false;
};

RunConfig config_from_flags(const RunFlags& f) {
  if (!f.config_path.empty()) return load_run_config(f.config_path);
  RunConfig config;
  config.schedule = *parse_schedule(f.schedule);
  config.bias = *parse_bias(f.bias);
  config.episodes = f.episodes;
  config.seed = f.seed;
  config.metrics_bin = f.metrics_bin;
  if (f.frozen_random_rewiring && config.schedule == RewiringSchedule::kNone) {
    throw UsageError("--frozen-random-rewiring needs a rewiring schedule (half or full)");
  }
  if (f.no_rewiring_learning || f.frozen_random_rewiring) {
    config.rewiring_learning = false;
    config.frozen_rewiring =
        f.frozen_random_rewiring ? FrozenRewiring::kRandomNetwork : FrozenRewiring::kUniformRandom;
  }
  config.validate();
  return config;
}

int do_run(const RunFlags& flags, std::ostream& out, std::ostream& err) {
  const RunConfig config = config_from_flags(flags);
  const fs::path dir = flags.out.empty() ? default_out_dir() / config.run_id() : fs::path(flags.out);
  ensure_writable(dir);
  RunOptions options;
  if (!flags.quiet) options.progress = &err;
  const RunFiles files = run_to_directory(config, dir, options);
  out << "wrote " << files.metrics.string() << '\n'
      << "wrote " << files.response.string() << '\n'
      << "wrote " << files.checkpoint.string() << '\n';
  return kExitOk;
}

int do_grid(const GridFlags& flags, std::ostream& out, std::ostream& err) {
  if (flags.seeds < 0) throw UsageError("--seeds must be >= 0");
  if (flags.parallel < 1) throw UsageError("--parallel must be >= 1");
  RunConfig base;
  base.episodes = flags.episodes;
  const std::vector<std::string> names =
      flags.conditions.empty() ? default_conditions() : flags.conditions;
  std::vector<RunConfig> conditions;
  for (const std::string& name : names) {
    auto c = parse_condition(name, base);
    if (!c) throw UsageError("bad condition '" + name + "' (expected schedule:bias[:random|frozen-net])");
    conditions.push_back(*c);
  }
  const std::vector<RunConfig> configs = expand_grid(conditions, flags.seeds);
  for (const RunConfig& c : configs) c.validate();

  const fs::path dir = flags.out.empty() ? default_out_dir() : fs::path(flags.out);
  ensure_writable(dir);
  RunOptions options;
  if (!flags.quiet) options.progress = &err;
  const auto entries = run_grid(configs, dir, flags.parallel, options);
  std::size_t failed = 0;
  for (const auto& e : entries) failed += e.status == "ok" ? 0 : 1;
  out << "grid: " << entries.size() << " runs, " << failed << " failed; manifest "
      << (dir / "manifest.json").string() << '\n';
  return failed == 0 ? kExitOk : kExitFailure;
}

int do_analyze(const std::string& dir, std::ostream& out, std::ostream& err) {
  const Analysis analysis = analyze(dir);
  for (const std::string& e : analysis.excluded) err << "excluded " << e << '\n';
  out << "wrote " << (fs::path(dir) / "aggregate.csv").string() << " ("
      << analysis.curves.size() << " rows)\n"
      << "wrote " << (fs::path(dir) / "response_aggregate.csv").string() << " ("
      << analysis.responses.size() << " rows)\n";
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-agent iterated Prisoner's Dilemma with network rewiring, trained with "
               "Double DQN and prioritized replay.",
               "ipdnet"};
  app.require_subcommand(1);
  app.footer("Exit codes: 0 success, 1 runtime failure, 2 usage error.\n"
             "Default output directory: $" + std::string(kOutEnv) + " or ./results.");

  RunFlags rf;
  CLI::App* run_cmd = app.add_subcommand("run", "Train one (condition, seed) run");
  auto* config_opt =
      run_cmd->add_option("--config", rf.config_path, "JSON run config (replaces inline flags)")
          ->check(CLI::ExistingFile);
  std::vector<CLI::Option*> inline_opts{
      run_cmd->add_option("--schedule", rf.schedule, "Rewiring schedule")
          ->check(CLI::IsMember({"none", "half", "full"})),
      run_cmd->add_option("--bias", rf.bias, "Behavioural bias of agent 0")
          ->check(CLI::IsMember({"none", "allc", "tft", "ostracism"})),
      run_cmd->add_option("--episodes", rf.episodes, "Training episodes")->check(CLI::PositiveNumber),
      run_cmd->add_option("--seed", rf.seed, "Run seed"),
      run_cmd->add_option("--metrics-bin", rf.metrics_bin, "Episodes per metrics row")
          ->check(CLI::PositiveNumber),
      run_cmd->add_flag("--no-rewiring-learning", rf.no_rewiring_learning,
                        "Freeze rewiring policies as uniform-random choices"),
      run_cmd->add_flag("--frozen-random-rewiring", rf.frozen_random_rewiring,
                        "Freeze rewiring policies as untrained random networks")};
  for (CLI::Option* o : inline_opts) config_opt->excludes(o);
  run_cmd->add_option("--out", rf.out, "Output directory for this run");
  run_cmd->add_flag("--quiet", rf.quiet, "No progress on stderr");

  GridFlags gf;
  CLI::App* grid_cmd = app.add_subcommand("grid", "Run a treatment grid and write a manifest");
  grid_cmd->add_option("--seeds", gf.seeds, "Seeds per condition (1..N)");
  grid_cmd->add_option("--episodes", gf.episodes, "Training episodes per run")
      ->check(CLI::PositiveNumber);
  grid_cmd->add_option("--out", gf.out, "Grid output directory");
  grid_cmd->add_option("--parallel", gf.parallel, "Concurrent runs");
  grid_cmd->add_option("--conditions", gf.conditions,
                       "Comma-separated schedule:bias[:random|frozen-net] list "
                       "(default: 3 schedules x none,allc,tft,ostracism)")
      ->delimiter(',');
  grid_cmd->add_flag("--quiet", gf.quiet, "No progress on stderr");

  std::string analyze_dir;
  CLI::App* analyze_cmd = app.add_subcommand("analyze", "Aggregate a grid directory");
  analyze_cmd->add_option("dir,--in", analyze_dir, "Grid directory containing manifest.json")
      ->required();

  SelfCheckOptions sc;
  CLI::App* selfcheck_cmd =
      app.add_subcommand("selfcheck", "Run built-in property suites; exit 0 iff all pass");
  selfcheck_cmd->add_option("--seed", sc.seed, "Seed for randomized checks");
  selfcheck_cmd->add_option("--tolerance-scale", sc.tolerance_scale,
                            "Multiply all tolerances (test mode; 0 forces failures)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    CLI::App* target = &app;
    for (CLI::App* sub : app.get_subcommands()) target = sub;
    out << target->help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    CLI::App* target = &app;
    for (CLI::App* sub : app.get_subcommands()) target = sub;
    err << target->help();
    return kExitUsage;
  }

  try {
    if (run_cmd->parsed()) return do_run(rf, out, err);
    if (grid_cmd->parsed()) return do_grid(gf, out, err);
    if (analyze_cmd->parsed()) return do_analyze(analyze_dir, out, err);
    if (selfcheck_cmd->parsed()) {
      const SelfCheckReport report = run_selfcheck(sc);
      report.print(out);
      return report.ok() ? kExitOk : kExitFailure;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace ipdnet::cli
