#include "ipdnet/metrics.hpp"

#include <charconv>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ipdnet {

namespace {

double per_step(std::int64_t count, const EpisodeTrace& trace) {
  if (trace.steps.empty()) return 0.0;
  return static_cast<double>(count) / static_cast<double>(trace.steps.size());
}

}  // namespace

double mutual_cooperation_rate(const EpisodeTrace& trace) {
  std::int64_t count = 0;
  for (const TimestepRecord& s : trace.steps) {
    if (s.connected && s.interact[0] == InteractionAction::kCooperate &&
        s.interact[1] == InteractionAction::kCooperate) {
      ++count;
    }
  }
  return per_step(count, trace);
}

double connection_rate(const EpisodeTrace& trace) {
  std::int64_t count = 0;
  for (const TimestepRecord& s : trace.steps) count += s.connected ? 1 : 0;
  return per_step(count, trace);
}

double cooperation_rate(const EpisodeTrace& trace, std::size_t agent) {
  std::int64_t count = 0;
  for (const TimestepRecord& s : trace.steps) {
    count += s.interact.at(agent) == InteractionAction::kCooperate ? 1 : 0;
  }
  return per_step(count, trace);
}

double total_reward(const EpisodeTrace& trace, std::size_t agent) {
  double sum = 0.0;
  for (const TimestepRecord& s : trace.steps) sum += agent == 0 ? s.payoffs.first : s.payoffs.second;
  return sum;
}

void RewiringResponse::add(const EpisodeTrace& trace) {
  for (std::size_t t = 1; t < trace.steps.size(); ++t) {
    const TimestepRecord& now = trace.steps[t];
    if (!now.opportunity) continue;
    const TimestepRecord& prev = trace.steps[t - 1];
    for (std::size_t agent = 0; agent < 2; ++agent) {
      const auto other_prev = static_cast<std::size_t>(prev.interact[1 - agent]);
      ResponseCell& cell = cells[agent][other_prev];
      cell.samples += 1;
      cell.connects += now.rewire[agent] == RewiringAction::kConnect ? 1 : 0;
    }
  }
}

std::int64_t window_episodes(std::int64_t episodes, double window) {
  if (!(window > 0.0 && window <= 1.0)) {
    throw std::invalid_argument("response window must be in (0, 1]");
  }
  const auto n = static_cast<std::int64_t>(std::ceil(window * static_cast<double>(episodes)));
  return std::clamp<std::int64_t>(n, episodes > 0 ? 1 : 0, episodes);
}

RewiringResponse rewiring_response(std::span<const EpisodeTrace> traces, double window) {
  const auto total = static_cast<std::int64_t>(traces.size());
  const std::int64_t keep = window_episodes(total, window);
  RewiringResponse response;
  for (std::int64_t i = total - keep; i < total; ++i) response.add(traces[i]);
  return response;
}

MetricsBinner::MetricsBinner(std::int64_t bin_size) : bin_size_(bin_size) {
  if (bin_size < 1) throw std::invalid_argument("metrics bin size must be >= 1");
}

std::optional<MetricsRow> MetricsBinner::add(const EpisodeTrace& trace, double epsilon) {
  mutual_ += mutual_cooperation_rate(trace);
  connection_ += connection_rate(trace);
  for (std::size_t a = 0; a < 2; ++a) {
    coop_[a] += cooperation_rate(trace, a);
    reward_[a] += total_reward(trace, a);
  }
  epsilon_ = epsilon;
  if (++count_ == bin_size_) return finish();
  return std::nullopt;
}

std::optional<MetricsRow> MetricsBinner::flush() {
  if (count_ == 0) return std::nullopt;
  return finish();
}

MetricsRow MetricsBinner::finish() {
  const double n = static_cast<double>(count_);
  MetricsRow row;
  row.bin = next_bin_++;
  row.episodes = count_;
  row.mutual_coop_rate = mutual_ / n;
  row.connection_rate = connection_ / n;
  for (std::size_t a = 0; a < 2; ++a) {
    row.coop_rate[a] = coop_[a] / n;
    row.reward[a] = reward_[a] / n;
  }
  row.epsilon = epsilon_;
  count_ = 0;
  mutual_ = connection_ = 0.0;
  coop_ = {};
  reward_ = {};
  return row;
}

std::string format_double(double value) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, end);
}

}  // namespace ipdnet
