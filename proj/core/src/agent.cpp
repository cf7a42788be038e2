#include "ipdnet/agent.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace ipdnet {

std::string_view to_string(InteractionBias bias) {
  switch (bias) {
    case InteractionBias::kLearned: return "learned";
    case InteractionBias::kAllC: return "allc";
    case InteractionBias::kTitForTat: return "tft";
  }
  return "?";
}

std::string_view to_string(RewiringBias bias) {
  switch (bias) {
    case RewiringBias::kLearned: return "learned";
    case RewiringBias::kOstracism: return "ostracism";
    case RewiringBias::kUniformRandom: return "uniform";
    case RewiringBias::kFrozenRandomNet: return "frozen-net";
  }
  return "?";
}

void Hyperparameters::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must be in [0, 1)");
  if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0) ||
      !(epsilon_end >= 0.0 && epsilon_end <= 1.0)) {
    throw std::invalid_argument("epsilons must be in [0, 1]");
  }
  if (epsilon_decay_steps < 0) throw std::invalid_argument("epsilon_decay_steps must be >= 0");
  if (batch_size == 0) throw std::invalid_argument("batch_size must be >= 1");
  if (target_sync_period < 1) throw std::invalid_argument("target_sync_period must be >= 1");
  if (learn_every < 1) throw std::invalid_argument("learn_every must be >= 1");
  if (!(clip_norm >= 0.0)) throw std::invalid_argument("clip_norm must be >= 0");
  if (!(adam.learning_rate >= 0.0)) throw std::invalid_argument("learning_rate must be >= 0");
  per.validate();
}

double epsilon_at(const Hyperparameters& hp, std::int64_t env_step, std::int64_t total_env_steps) {
  const std::int64_t window = hp.epsilon_decay_steps > 0
                                  ? hp.epsilon_decay_steps
                                  : std::max<std::int64_t>(1, total_env_steps / 20);
  if (env_step >= window) return hp.epsilon_end;
  const double frac = static_cast<double>(std::max<std::int64_t>(env_step, 0)) /
                      static_cast<double>(window);
  return hp.epsilon_start + frac * (hp.epsilon_end - hp.epsilon_start);
}

double double_dqn_target(const QNetworkPair& pair, double reward, double discount,
                         const Observation& next_obs) {
  return bootstrap_target(reward, discount, forward(pair.online, next_obs.values()),
                          forward(pair.target, next_obs.values()));
}

PolicyHead::PolicyHead(const Hyperparameters& hp, bool learning_enabled, Rng& init_rng)
    : hp_(hp), learning_enabled_(learning_enabled), buffer_(hp.per) {
  networks_.online = initialize_params(init_rng);
  networks_.sync_target();
  optimizer_.config = hp.adam;
  entries_.reserve(Observation::kCodeCount);
}

QValues PolicyHead::q_values(const Observation& obs) const {
  return forward(networks_.online, obs.values());
}

std::size_t PolicyHead::select_action(const Observation& obs, double epsilon, Rng& rng) const {
  if (epsilon > 0.0 && rng.bernoulli(epsilon)) return rng.bernoulli(0.5) ? 0 : 1;
  return greedy_action(forward_trace_unchecked(networks_.online, obs.values()).q);
}

void PolicyHead::remember(const Transition& t) { buffer_.insert(t); }

PolicyHead::CodeEntry& PolicyHead::entry_for(const Observation& obs) {
  std::int16_t& slot = slot_[obs.code()];
  if (slot < 0) {
    slot = static_cast<std::int16_t>(entries_.size());
    CodeEntry& e = entries_.emplace_back();
    e.obs = obs;
    e.online = forward_trace_unchecked(networks_.online, obs.values());
  }
  return entries_[slot];
}

std::optional<TdStats> PolicyHead::learn_step(Rng& rng, double beta) {
  if (!learning_enabled_) return std::nullopt;
  std::optional<SampledBatch> batch = buffer_.sample(hp_.batch_size, beta, rng);
  if (!batch) return std::nullopt;

  // The observation space is tiny, so forward passes are shared between all
  // batch entries with the same observation, and per-sample gradients are
  // folded into one backward pass per observation.
  slot_.fill(-1);
  entries_.clear();

  const std::size_t n = batch->transitions.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  td_errors_.resize(n);
  TdStats stats;
  for (std::size_t i = 0; i < n; ++i) {
    const Transition& t = batch->transitions[i];
    CodeEntry& next = entry_for(t.next_obs);
    if (!next.has_target) {
      next.target = forward_trace_unchecked(networks_.target, t.next_obs.values()).q;
      next.has_target = true;
    }
    const double y = bootstrap_target(t.reward, t.discount, next.online.q, next.target);
    CodeEntry& now = entry_for(t.obs);
    const double td = now.online.q[t.action] - y;
    const double w = batch->is_weights[i];
    td_errors_[i] = td;
    now.coefficient[t.action] += w * td * inv_n;
    stats.mean_abs_td += std::abs(td) * inv_n;
    stats.max_abs_td = std::max(stats.max_abs_td, std::abs(td));
    stats.loss += 0.5 * w * td * td * inv_n;
  }

  MlpParams grad;
  for (const CodeEntry& e : entries_) {
    if (e.coefficient[0] == 0.0 && e.coefficient[1] == 0.0) continue;
    accumulate_output_gradient(networks_.online, e.obs.values(), e.online, e.coefficient, grad);
  }
  if (hp_.clip_norm > 0.0) {
    const double norm = std::sqrt(grad.squared_norm());
    if (norm > hp_.clip_norm) grad.scale(hp_.clip_norm / norm);
  }
  apply_update(networks_.online, optimizer_, grad);
  buffer_.update_priorities(batch->handles, td_errors_);

  learner_steps_ += 1;
  if (learner_steps_ % hp_.target_sync_period == 0) {
    networks_.sync_target();
    stats.synced_target = true;
  }
  return stats;
}

InteractionAction fixed_interaction(InteractionBias bias, const Observation& obs) {
  switch (bias) {
    case InteractionBias::kAllC: return InteractionAction::kCooperate;
    case InteractionBias::kTitForTat:
      return obs.other_prev() == InteractionAction::kDefect ? InteractionAction::kDefect
                                                            : InteractionAction::kCooperate;
    case InteractionBias::kLearned: break;
  }
  throw ContractViolation("fixed_interaction: bias has no fixed policy");
}

RewiringAction fixed_rewiring(RewiringBias bias, const Observation& obs, Rng& rng) {
  switch (bias) {
    case RewiringBias::kOstracism:
      return obs.other_prev() == InteractionAction::kDefect ? RewiringAction::kDisconnect
                                                            : RewiringAction::kConnect;
    case RewiringBias::kUniformRandom:
      return rng.bernoulli(0.5) ? RewiringAction::kConnect : RewiringAction::kDisconnect;
    case RewiringBias::kLearned:
    case RewiringBias::kFrozenRandomNet: break;
  }
  throw ContractViolation("fixed_rewiring: bias has no fixed policy");
}

namespace {

const Observation& next_observation(const AgentTrajectory& tr, std::size_t index) {
  return index < tr.steps.size() ? tr.steps[index].obs : tr.terminal_obs;
}

}  // namespace

std::vector<Transition> interaction_transitions(const AgentTrajectory& trajectory, double gamma) {
  std::vector<Transition> out;
  const std::size_t len = trajectory.steps.size();
  out.reserve(len);
  for (std::size_t t = 0; t < len; ++t) {
    const AgentStep& s = trajectory.steps[t];
    out.push_back({s.obs, static_cast<std::size_t>(s.interact), s.reward,
                   t + 1 == len ? 0.0 : gamma, next_observation(trajectory, t + 1)});
  }
  return out;
}

std::vector<Transition> rewiring_transitions(const AgentTrajectory& trajectory, double gamma) {
  std::vector<std::size_t> opportunities;
  for (std::size_t t = 0; t < trajectory.steps.size(); ++t) {
    if (trajectory.steps[t].opportunity) opportunities.push_back(t);
  }
  std::vector<Transition> out;
  out.reserve(opportunities.size());
  for (std::size_t k = 0; k < opportunities.size(); ++k) {
    const std::size_t start = opportunities[k];
    const bool has_next = k + 1 < opportunities.size();
    const std::size_t end = has_next ? opportunities[k + 1] : trajectory.steps.size();
    double reward = 0.0;
    double factor = 1.0;
    for (std::size_t t = start; t < end; ++t) {
      reward += factor * trajectory.steps[t].reward;
      factor *= gamma;
    }
    const AgentStep& s = trajectory.steps[start];
    out.push_back({s.obs, static_cast<std::size_t>(s.rewire), reward, has_next ? factor : 0.0,
                   next_observation(trajectory, end)});
  }
  return out;
}

Agent::Agent(const AgentSpec& spec, AgentStreams streams)
    : spec_(spec), streams_(std::move(streams)) {
  spec_.hyper.validate();
  if (spec_.interaction == InteractionBias::kLearned) {
    interaction_head_.emplace(spec_.hyper, true, streams_.init);
  }
  if (spec_.rewiring == RewiringBias::kLearned) {
    rewiring_head_.emplace(spec_.hyper, true, streams_.init);
  } else if (spec_.rewiring == RewiringBias::kFrozenRandomNet) {
    rewiring_head_.emplace(spec_.hyper, false, streams_.init);
  }
}

RewiringAction Agent::choose_rewiring(const Observation& obs, double epsilon) {
  if (rewiring_head_) {
    return static_cast<RewiringAction>(rewiring_head_->select_action(obs, epsilon, streams_.act));
  }
  return fixed_rewiring(spec_.rewiring, obs, streams_.act);
}

InteractionAction Agent::choose_interaction(const Observation& obs, double epsilon) {
  if (interaction_head_) {
    return static_cast<InteractionAction>(
        interaction_head_->select_action(obs, epsilon, streams_.act));
  }
  return fixed_interaction(spec_.interaction, obs);
}

void Agent::observe_episode(const AgentTrajectory& trajectory) {
  if (interaction_head_ && interaction_head_->learning_enabled()) {
    for (const Transition& t : interaction_transitions(trajectory, spec_.hyper.gamma)) {
      interaction_head_->remember(t);
    }
  }
  if (rewiring_head_ && rewiring_head_->learning_enabled()) {
    for (const Transition& t : rewiring_transitions(trajectory, spec_.hyper.gamma)) {
      rewiring_head_->remember(t);
    }
  }
}

void Agent::learn(double beta) {
  if (interaction_head_) interaction_head_->learn_step(streams_.replay, beta);
  if (rewiring_head_) rewiring_head_->learn_step(streams_.replay, beta);
}

}  // namespace ipdnet
