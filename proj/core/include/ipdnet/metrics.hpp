#pragma once

// Per-episode measurements: mutual cooperation, connection rate and the
// conditional rewiring response.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ipdnet/environment.hpp"

namespace ipdnet {

struct TimestepRecord {
  bool opportunity = false;
  std::array<RewiringAction, 2> rewire{};
  std::array<InteractionAction, 2> interact{};
  bool connected = true;  // after this step's rewiring
  PayoffPair payoffs;
};

struct EpisodeTrace {
  std::vector<TimestepRecord> steps;
};

/// Timesteps that were connected with both agents cooperating, over the
/// episode length.
double mutual_cooperation_rate(const EpisodeTrace& trace);
double connection_rate(const EpisodeTrace& trace);
/// Fraction of all timesteps on which `agent` chose to cooperate.
double cooperation_rate(const EpisodeTrace& trace, std::size_t agent);
double total_reward(const EpisodeTrace& trace, std::size_t agent);

/// Connect choices at opportunity timesteps, split by what the other agent
/// did on the previous timestep. Timesteps without a previous interaction
/// are not counted.
struct ResponseCell {
  std::int64_t connects = 0;
  std::int64_t samples = 0;

  /// Absent when the cell has no samples.
  std::optional<double> fraction() const {
    if (samples == 0) return std::nullopt;
    return static_cast<double>(connects) / static_cast<double>(samples);
  }
};

struct RewiringResponse {
  /// [agent][other's previous action: 0 cooperate, 1 defect]
  std::array<std::array<ResponseCell, 2>, 2> cells{};

  void add(const EpisodeTrace& trace);
  const ResponseCell& after(std::size_t agent, InteractionAction other_prev) const {
    return cells[agent][static_cast<std::size_t>(other_prev)];
  }
};

/// Number of trailing episodes covered by a response window in (0, 1].
std::int64_t window_episodes(std::int64_t episodes, double window);

/// Response over the last `window` fraction of `traces`.
RewiringResponse rewiring_response(std::span<const EpisodeTrace> traces, double window);

struct MetricsRow {
  std::int64_t bin = 0;
  std::int64_t episodes = 0;
  double mutual_coop_rate = 0.0;
  double connection_rate = 0.0;
  std::array<double, 2> coop_rate{};
  std::array<double, 2> reward{};  // mean per-episode payoff
  double epsilon = 0.0;

  friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

/// Averages consecutive episodes into fixed-size bins.
class MetricsBinner {
 public:
  explicit MetricsBinner(std::int64_t bin_size);

  /// Returns a completed row when this episode closes a bin.
  std::optional<MetricsRow> add(const EpisodeTrace& trace, double epsilon);
  /// Row for a trailing partial bin, if any episodes are pending.
  std::optional<MetricsRow> flush();

 private:
  MetricsRow finish();

  std::int64_t bin_size_;
  std::int64_t next_bin_ = 0;
  std::int64_t count_ = 0;
  double mutual_ = 0.0;
  double connection_ = 0.0;
  std::array<double, 2> coop_{};
  std::array<double, 2> reward_{};
  double epsilon_ = 0.0;
};

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

}  // namespace ipdnet
