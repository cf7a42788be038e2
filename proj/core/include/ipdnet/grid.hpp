#pragma once

// Treatment grids: many isolated runs plus a manifest, and the aggregation
// of their results into per-condition tables.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ipdnet/experiment.hpp"

namespace ipdnet {

/// Parses "schedule:bias" or "schedule:bias:random|frozen-net" (the third
/// field turns rewiring learning off) into a template config.
std::optional<RunConfig> parse_condition(std::string_view text, const RunConfig& base);

/// 3 schedules x {none, allc, tft, ostracism}.
std::vector<std::string> default_conditions();

/// Cross product of conditions and seeds 1..seeds.
std::vector<RunConfig> expand_grid(const std::vector<RunConfig>& conditions, int seeds);

struct ManifestEntry {
  std::string run_id;
  std::string condition;
  std::string schedule;
  std::string bias;
  bool rewiring_learning = true;
  std::uint64_t seed = 0;
  std::string status;  // "ok" or "failed"
  std::string error;
  double wall_time_s = 0.0;
  std::string code_version;
  std::string metrics_path;  // relative to the grid directory
  std::string response_path;
  std::string checkpoint_path;
  std::string config_path;
};

/// Runs every config in its own directory under out_dir/runs/ using up to
/// `parallelism` worker threads, then writes out_dir/manifest.json. A failed
/// run is recorded in the manifest and does not stop the grid.
std::vector<ManifestEntry> run_grid(const std::vector<RunConfig>& configs,
                                    const std::filesystem::path& out_dir, int parallelism,
                                    const RunOptions& options = {});

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);

/// Sample mean and standard error (sample standard deviation / sqrt(n));
/// the standard error is 0 for a single value.
struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
  std::size_t n = 0;
};
MeanSe mean_and_se(const std::vector<double>& values);

struct AggregateRow {
  std::string condition;
  std::int64_t bin = 0;
  std::int64_t episodes = 0;
  MeanSe mutual_coop;
  MeanSe connection;
  MeanSe coop_a0;
  MeanSe coop_a1;
};

struct ResponseAggregateRow {
  std::string condition;
  int agent = 0;
  std::string other_prev_action;
  MeanSe connect_fraction;  // over seeds with a non-empty cell
  std::int64_t total_samples = 0;
};

struct Analysis {
  std::vector<AggregateRow> curves;
  std::vector<ResponseAggregateRow> responses;
  /// run_id: reason, for runs left out of the aggregates.
  std::vector<std::string> excluded;
};

/// Reads manifest.json in `results_dir`, aggregates across seeds per
/// condition and writes aggregate.csv, response_aggregate.csv and
/// analysis.json next to it. Throws if the manifest is missing.
Analysis analyze(const std::filesystem::path& results_dir);

}  // namespace ipdnet
