#pragma once

// Per-agent decision making: two independent Double-DQN heads (interaction
// and rewiring) and the hard-coded policies used for behavioural biases.

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "ipdnet/environment.hpp"
#include "ipdnet/mlp.hpp"
#include "ipdnet/replay.hpp"
#include "ipdnet/rng.hpp"

namespace ipdnet {

enum class InteractionBias : std::uint8_t { kLearned, kAllC, kTitForTat };
enum class RewiringBias : std::uint8_t { kLearned, kOstracism, kUniformRandom, kFrozenRandomNet };

std::string_view to_string(InteractionBias bias);
std::string_view to_string(RewiringBias bias);

struct Hyperparameters {
  double gamma = 0.99;
  double epsilon_start = 1.0;
  double epsilon_end = 0.01;
  /// Environment steps for the linear epsilon decay; 0 means 5% of the run.
  std::int64_t epsilon_decay_steps = 0;
  std::size_t batch_size = 64;
  std::int64_t target_sync_period = 1'000;  // learner steps
  std::int64_t learn_every = 1;             // environment steps
  /// Global gradient-norm clip; 0 disables clipping.
  double clip_norm = 0.0;
  PerConfig per;
  AdamConfig adam;

  void validate() const;
};

/// Linear decay from epsilon_start to epsilon_end over the decay window,
/// constant afterwards.
double epsilon_at(const Hyperparameters& hp, std::int64_t env_step, std::int64_t total_env_steps);

/// Greedy choice with ties going to index 0.
inline std::size_t greedy_action(const QValues& q) { return q[1] > q[0] ? 1 : 0; }

/// reward + discount * target_next[argmax online_next]. Shared by the learner
/// and double_dqn_target so both produce the same bits.
inline double bootstrap_target(double reward, double discount, const QValues& online_next,
                               const QValues& target_next) {
  return reward + discount * target_next[greedy_action(online_next)];
}

double double_dqn_target(const QNetworkPair& pair, double reward, double discount,
                         const Observation& next_obs);

struct TdStats {
  double mean_abs_td = 0.0;
  double max_abs_td = 0.0;
  double loss = 0.0;  // importance-weighted mean of td^2 / 2
  bool synced_target = false;
};

/// One Q-head: online/target networks, replay buffer and optimizer.
class PolicyHead {
 public:
  PolicyHead(const Hyperparameters& hp, bool learning_enabled, Rng& init_rng);

  /// Epsilon-greedy over the online network.
  std::size_t select_action(const Observation& obs, double epsilon, Rng& rng) const;
  QValues q_values(const Observation& obs) const;

  void remember(const Transition& t);

  /// One Double-DQN update from a prioritized batch. Returns nullopt (and
  /// changes nothing) when learning is disabled or the buffer is too small.
  std::optional<TdStats> learn_step(Rng& rng, double beta);

  bool learning_enabled() const { return learning_enabled_; }
  const QNetworkPair& networks() const { return networks_; }
  QNetworkPair& networks() { return networks_; }
  const OptimizerState& optimizer() const { return optimizer_; }
  OptimizerState& optimizer() { return optimizer_; }
  const PrioritizedReplay& buffer() const { return buffer_; }
  std::int64_t learner_steps() const { return learner_steps_; }
  void set_learner_steps(std::int64_t steps) { learner_steps_ = steps; }

 private:
  // Per-observation scratch for learn_step, reused across calls.
  struct CodeEntry {
    Observation obs;
    ForwardTrace online;
    QValues target{};
    bool has_target = false;
    QValues coefficient{};
  };

  CodeEntry& entry_for(const Observation& obs);

  Hyperparameters hp_;
  bool learning_enabled_;
  QNetworkPair networks_;
  OptimizerState optimizer_;
  PrioritizedReplay buffer_;
  std::int64_t learner_steps_ = 0;
  std::array<std::int16_t, Observation::kCodeCount> slot_{};
  std::vector<CodeEntry> entries_;
  std::vector<double> td_errors_;
};

InteractionAction fixed_interaction(InteractionBias bias, const Observation& obs);
RewiringAction fixed_rewiring(RewiringBias bias, const Observation& obs, Rng& rng);

/// What one agent saw and did at one timestep.
struct AgentStep {
  Observation obs;
  bool opportunity = false;
  RewiringAction rewire = RewiringAction::kConnect;  // meaningful only with an opportunity
  InteractionAction interact = InteractionAction::kCooperate;
  double reward = 0.0;
};

/// One agent's view of a whole episode; terminal_obs follows the last step.
struct AgentTrajectory {
  std::vector<AgentStep> steps;
  Observation terminal_obs;
};

/// One-step transitions for every timestep; the final one has discount 0.
std::vector<Transition> interaction_transitions(const AgentTrajectory& trajectory, double gamma);

/// One transition per opportunity timestep spanning the gap n to the next
/// opportunity: reward sum_k gamma^k r_{t+k}, discount gamma^n, or 0 when
/// no opportunity follows within the episode.
std::vector<Transition> rewiring_transitions(const AgentTrajectory& trajectory, double gamma);

struct AgentSpec {
  InteractionBias interaction = InteractionBias::kLearned;
  RewiringBias rewiring = RewiringBias::kLearned;
  Hyperparameters hyper;
};

/// Independent RNG streams owned by one agent.
struct AgentStreams {
  Rng init;
  Rng act;
  Rng replay;
};

class Agent {
 public:
  Agent(const AgentSpec& spec, AgentStreams streams);

  RewiringAction choose_rewiring(const Observation& obs, double epsilon);
  InteractionAction choose_interaction(const Observation& obs, double epsilon);

  /// Builds the episode's transitions and stores them in the learning heads.
  void observe_episode(const AgentTrajectory& trajectory);

  /// One learn step on every head that is learning and ready.
  void learn(double beta);

  const AgentSpec& spec() const { return spec_; }
  const std::optional<PolicyHead>& interaction_head() const { return interaction_head_; }
  const std::optional<PolicyHead>& rewiring_head() const { return rewiring_head_; }
  std::optional<PolicyHead>& interaction_head() { return interaction_head_; }
  std::optional<PolicyHead>& rewiring_head() { return rewiring_head_; }
  AgentStreams& streams() { return streams_; }
  const AgentStreams& streams() const { return streams_; }

 private:
  AgentSpec spec_;
  AgentStreams streams_;
  std::optional<PolicyHead> interaction_head_;
  std::optional<PolicyHead> rewiring_head_;
};

}  // namespace ipdnet
