#pragma once

// Single training runs: configuration, the episode loop and result files.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ipdnet/agent.hpp"
#include "ipdnet/checkpoint.hpp"
#include "ipdnet/environment.hpp"
#include "ipdnet/metrics.hpp"

namespace ipdnet {

/// Behavioural bias carried by agent 0. Agent 1 always learns both policies.
enum class Bias : std::uint8_t { kNone, kAllC, kTitForTat, kOstracism };

/// What replaces a learned rewiring policy when rewiring learning is off.
enum class FrozenRewiring : std::uint8_t { kUniformRandom, kRandomNetwork };

std::string_view to_string(Bias bias);
std::optional<Bias> parse_bias(std::string_view name);
std::string_view to_string(FrozenRewiring mode);
std::optional<FrozenRewiring> parse_frozen_rewiring(std::string_view name);

struct RunConfig {
  RewiringSchedule schedule = RewiringSchedule::kFull;
  Bias bias = Bias::kNone;
  bool rewiring_learning = true;
  FrozenRewiring frozen_rewiring = FrozenRewiring::kUniformRandom;
  std::int64_t episodes = 200'000;
  int episode_length = kDefaultEpisodeLength;
  std::uint64_t seed = 0;
  Hyperparameters hyper;
  std::int64_t metrics_bin = 100;
  /// Trailing fraction of episodes used for the rewiring response.
  double response_window = 0.1;
  PayoffMatrix payoffs;

  void validate() const;
  /// e.g. "full-tft-s3", "full-tft-random-s3" with rewiring learning off.
  std::string run_id() const;
  /// e.g. "full:tft", "full:tft:random".
  std::string condition() const;
};

/// Agent 0 carries the bias; agent 1 is the unbiased learner.
std::array<AgentSpec, 2> agent_specs(const RunConfig& config);

/// Per-run RNG streams derived from the run seed.
AgentStreams agent_streams(std::uint64_t seed, std::size_t agent);

class SinkError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MetricsSink {
 public:
  virtual ~MetricsSink() = default;
  virtual void write(const MetricsRow& row) = 0;
};

/// Collects rows in memory.
class VectorSink : public MetricsSink {
 public:
  void write(const MetricsRow& row) override { rows.push_back(row); }
  std::vector<MetricsRow> rows;
};

inline constexpr std::string_view kMetricsHeader =
    "run_id,schedule,bias,seed,bin,episodes,mutual_coop_rate,connection_rate,"
    "coop_rate_a0,coop_rate_a1,reward_a0,reward_a1,epsilon";
inline constexpr std::string_view kResponseHeader =
    "run_id,agent,other_prev_action,connect_fraction,n_samples";

/// Streams rows in the metrics CSV schema. Throws SinkError when the stream
/// goes bad.
class CsvMetricsSink : public MetricsSink {
 public:
  CsvMetricsSink(std::ostream& out, const RunConfig& config);
  void write(const MetricsRow& row) override;

 private:
  std::ostream& out_;
  std::string prefix_;
};

void write_response_csv(std::ostream& out, const std::string& run_id,
                        const RewiringResponse& response);

struct RunOptions {
  /// Progress lines at bin boundaries; null for silence.
  std::ostream* progress = nullptr;
  /// Print progress every this many bins.
  std::int64_t progress_every_bins = 20;
  /// Keep every episode trace in the summary (tests only; memory heavy).
  bool keep_traces = false;
};

struct RunSummary {
  std::string run_id;
  std::int64_t episodes = 0;
  std::optional<MetricsRow> final_row;
  RewiringResponse response;
  Checkpoint checkpoint;
  std::vector<EpisodeTrace> traces;
};

/// Full training loop with the given agent behaviours.
RunSummary run_agents(const RunConfig& config, const std::array<AgentSpec, 2>& specs,
                      MetricsSink& sink, const RunOptions& options = {});

/// Full training loop with agent_specs(config).
RunSummary run_single(const RunConfig& config, MetricsSink& sink, const RunOptions& options = {});

struct RunFiles {
  std::filesystem::path metrics;
  std::filesystem::path response;
  std::filesystem::path checkpoint;
  std::filesystem::path config;
};

/// Runs `config` and writes metrics.csv, response.csv, checkpoint.bin and
/// config.json into `dir`, each atomically. If writing fails mid-run a
/// PARTIAL marker is left in `dir` and the error is rethrown.
RunFiles run_to_directory(const RunConfig& config, const std::filesystem::path& dir,
                          const RunOptions& options = {});

/// Writes `content` to `path` via a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string_view code_version();

}  // namespace ipdnet
