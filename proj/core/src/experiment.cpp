#include "ipdnet/experiment.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

#include "ipdnet/config_io.hpp"

#ifndef IPDNET_VERSION
#define IPDNET_VERSION "unknown"
#endif

namespace ipdnet {

namespace fs = std::filesystem;

std::string_view code_version() { return IPDNET_VERSION; }

std::string_view to_string(Bias bias) {
  switch (bias) {
    case Bias::kNone: return "none";
    case Bias::kAllC: return "allc";
    case Bias::kTitForTat: return "tft";
    case Bias::kOstracism: return "ostracism";
  }
  return "?";
}

std::optional<Bias> parse_bias(std::string_view name) {
  if (name == "none") return Bias::kNone;
  if (name == "allc") return Bias::kAllC;
  if (name == "tft") return Bias::kTitForTat;
  if (name == "ostracism") return Bias::kOstracism;
  return std::nullopt;
}

std::string_view to_string(FrozenRewiring mode) {
  switch (mode) {
    case FrozenRewiring::kUniformRandom: return "random";
    case FrozenRewiring::kRandomNetwork: return "frozen-net";
  }
  return "?";
}

std::optional<FrozenRewiring> parse_frozen_rewiring(std::string_view name) {
  if (name == "random") return FrozenRewiring::kUniformRandom;
  if (name == "frozen-net") return FrozenRewiring::kRandomNetwork;
  return std::nullopt;
}

void RunConfig::validate() const {
  if (episodes < 1) throw std::invalid_argument("episodes must be >= 1");
  if (episode_length < 1) throw std::invalid_argument("episode_length must be >= 1");
  if (metrics_bin < 1) throw std::invalid_argument("metrics_bin must be >= 1");
  if (!(response_window > 0.0 && response_window <= 1.0)) {
    throw std::invalid_argument("response_window must be in (0, 1]");
  }
  hyper.validate();
}

std::string RunConfig::condition() const {
  std::string label = std::string(to_string(schedule)) + ":" + std::string(to_string(bias));
  if (!rewiring_learning) label += ":" + std::string(to_string(frozen_rewiring));
  return label;
}

std::string RunConfig::run_id() const {
  std::string id = std::string(to_string(schedule)) + "-" + std::string(to_string(bias));
  if (!rewiring_learning) id += "-" + std::string(to_string(frozen_rewiring));
  return id + "-s" + std::to_string(seed);
}

std::array<AgentSpec, 2> agent_specs(const RunConfig& config) {
  std::array<AgentSpec, 2> specs;
  specs[0].hyper = specs[1].hyper = config.hyper;
  switch (config.bias) {
    case Bias::kNone: break;
    case Bias::kAllC: specs[0].interaction = InteractionBias::kAllC; break;
    case Bias::kTitForTat: specs[0].interaction = InteractionBias::kTitForTat; break;
    case Bias::kOstracism: specs[0].rewiring = RewiringBias::kOstracism; break;
  }
  if (!config.rewiring_learning) {
    const RewiringBias frozen = config.frozen_rewiring == FrozenRewiring::kUniformRandom
                                    ? RewiringBias::kUniformRandom
                                    : RewiringBias::kFrozenRandomNet;
    for (AgentSpec& s : specs) {
      if (s.rewiring == RewiringBias::kLearned) s.rewiring = frozen;
    }
  }
  return specs;
}

AgentStreams agent_streams(std::uint64_t seed, std::size_t agent) {
  const std::uint64_t base = 16 * static_cast<std::uint64_t>(agent);
  return AgentStreams{Rng(derive_seed(seed, base + 1)), Rng(derive_seed(seed, base + 2)),
                      Rng(derive_seed(seed, base + 3))};
}

CsvMetricsSink::CsvMetricsSink(std::ostream& out, const RunConfig& config) : out_(out) {
  prefix_ = config.run_id() + "," + std::string(to_string(config.schedule)) + "," +
            std::string(to_string(config.bias)) + "," + std::to_string(config.seed) + ",";
  out_ << kMetricsHeader << '\n';
  if (!out_) throw SinkError("metrics sink: write failed");
}

void CsvMetricsSink::write(const MetricsRow& row) {
  out_ << prefix_ << row.bin << ',' << row.episodes << ',' << format_double(row.mutual_coop_rate)
       << ',' << format_double(row.connection_rate) << ',' << format_double(row.coop_rate[0])
       << ',' << format_double(row.coop_rate[1]) << ',' << format_double(row.reward[0]) << ','
       << format_double(row.reward[1]) << ',' << format_double(row.epsilon) << '\n';
  if (!out_) throw SinkError("metrics sink: write failed");
}

void write_response_csv(std::ostream& out, const std::string& run_id,
                        const RewiringResponse& response) {
  out << kResponseHeader << '\n';
  for (std::size_t agent = 0; agent < 2; ++agent) {
    for (InteractionAction prev : {InteractionAction::kCooperate, InteractionAction::kDefect}) {
      const ResponseCell& cell = response.after(agent, prev);
      const auto fraction = cell.fraction();
      out << run_id << ',' << agent << ','
          << (prev == InteractionAction::kCooperate ? "cooperate" : "defect") << ','
          << (fraction ? format_double(*fraction) : std::string()) << ',' << cell.samples << '\n';
    }
  }
}

RunSummary run_agents(const RunConfig& config, const std::array<AgentSpec, 2>& specs,
                      MetricsSink& sink, const RunOptions& options) {
  config.validate();
  std::array<Agent, 2> agents{Agent(specs[0], agent_streams(config.seed, 0)),
                              Agent(specs[1], agent_streams(config.seed, 1))};

  const std::int64_t total_steps = config.episodes * config.episode_length;
  const std::int64_t window_start =
      config.episodes - window_episodes(config.episodes, config.response_window);
  const Hyperparameters& hp = config.hyper;

  RunSummary summary;
  summary.run_id = config.run_id();
  MetricsBinner binner(config.metrics_bin);
  std::int64_t env_step = 0;
  double epsilon = epsilon_at(hp, 0, total_steps);

  std::array<AgentTrajectory, 2> trajectories;
  EpisodeTrace trace;
  for (std::int64_t episode = 0; episode < config.episodes; ++episode) {
    auto [state, obs] = reset(config.schedule, config.episode_length);
    for (auto& tr : trajectories) tr.steps.clear();
    trace.steps.clear();

    while (!state.finished()) {
      epsilon = epsilon_at(hp, env_step, total_steps);
      const bool opportunity =
          rewiring_opportunity(config.schedule, state.timestep, config.episode_length);
      std::array<RewiringAction, 2> rewire{RewiringAction::kConnect, RewiringAction::kConnect};
      std::array<InteractionAction, 2> interact{};
      if (opportunity) {
        for (std::size_t i = 0; i < 2; ++i) rewire[i] = agents[i].choose_rewiring(obs[i], epsilon);
      }
      for (std::size_t i = 0; i < 2; ++i) interact[i] = agents[i].choose_interaction(obs[i], epsilon);

      auto [next, outcome] = step(state, rewire, interact, config.payoffs);
      trajectories[0].steps.push_back({obs[0], opportunity, rewire[0], interact[0], outcome.payoffs.first});
      trajectories[1].steps.push_back({obs[1], opportunity, rewire[1], interact[1], outcome.payoffs.second});
      trace.steps.push_back({opportunity, rewire, interact, outcome.connected_after, outcome.payoffs});
      state = next;
      obs = outcome.observations_next;

      ++env_step;
      if (env_step % hp.learn_every == 0) {
        const double beta = beta_schedule(hp.per, env_step, total_steps);
        agents[0].learn(beta);
        agents[1].learn(beta);
      }
    }
    for (std::size_t i = 0; i < 2; ++i) {
      trajectories[i].terminal_obs = obs[i];
      agents[i].observe_episode(trajectories[i]);
    }

    if (episode >= window_start) summary.response.add(trace);
    if (auto row = binner.add(trace, epsilon)) {
      sink.write(*row);
      summary.final_row = row;
      if (options.progress && options.progress_every_bins > 0 &&
          (row->bin + 1) % options.progress_every_bins == 0) {
        *options.progress << summary.run_id << " bin " << row->bin << " ep " << episode + 1
                          << "/" << config.episodes << " mutual_coop "
                          << format_double(row->mutual_coop_rate) << " eps "
                          << format_double(epsilon) << std::endl;
      }
    }
    if (options.keep_traces) summary.traces.push_back(trace);
  }
  if (auto row = binner.flush()) {
    sink.write(*row);
    summary.final_row = row;
  }

  summary.episodes = config.episodes;
  summary.checkpoint.run_id = summary.run_id;
  summary.checkpoint.seed = config.seed;
  summary.checkpoint.episodes_completed = config.episodes;
  summary.checkpoint.env_steps = env_step;
  for (std::size_t i = 0; i < 2; ++i) summary.checkpoint.agents[i] = snapshot_agent(agents[i]);
  return summary;
}

RunSummary run_single(const RunConfig& config, MetricsSink& sink, const RunOptions& options) {
  return run_agents(config, agent_specs(config), sink, options);
}

void write_file_atomic(const fs::path& path, std::string_view content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw SinkError("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw SinkError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

RunFiles run_to_directory(const RunConfig& config, const fs::path& dir, const RunOptions& options) {
  config.validate();
  fs::create_directories(dir);
  RunFiles files{dir / "metrics.csv", dir / "response.csv", dir / "checkpoint.bin",
                 dir / "config.json"};
  fs::remove(dir / "PARTIAL");
  write_file_atomic(files.config, to_json(config));

  fs::path metrics_tmp = files.metrics;
  metrics_tmp += ".tmp";
  RunSummary summary;
  try {
    std::ofstream metrics_out(metrics_tmp, std::ios::binary | std::ios::trunc);
    if (!metrics_out) throw SinkError("cannot open " + metrics_tmp.string() + " for writing");
    CsvMetricsSink sink(metrics_out, config);
    summary = run_single(config, sink, options);
    metrics_out.flush();
    if (!metrics_out) throw SinkError("write failed for " + metrics_tmp.string());
  } catch (const SinkError& e) {
    std::ofstream marker(dir / "PARTIAL");
    marker << "run " << config.run_id() << " aborted: " << e.what() << '\n';
    throw;
  }
  fs::rename(metrics_tmp, files.metrics);

  std::ostringstream response;
  write_response_csv(response, summary.run_id, summary.response);
  write_file_atomic(files.response, response.str());

  std::ostringstream checkpoint;
  write_checkpoint(checkpoint, summary.checkpoint);
  write_file_atomic(files.checkpoint, checkpoint.str());
  return files;
}

}  // namespace ipdnet
