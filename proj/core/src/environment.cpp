#include "ipdnet/environment.hpp"

#include <string>

namespace ipdnet {

namespace {

void put_interaction(std::array<double, Observation::kSize>& v, std::size_t offset,
                     std::optional<InteractionAction> action) {
  if (!action) return;
  v[offset + (*action == InteractionAction::kCooperate ? 0 : 1)] = 1.0;
}

void put_flag(std::array<double, Observation::kSize>& v, std::size_t offset, bool present) {
  v[offset + (present ? 0 : 1)] = 1.0;
}

int pair_code(double a, double b) {
  if (a == 0.0 && b == 0.0) return 0;
  if (a == 1.0 && b == 0.0) return 1;
  if (a == 0.0 && b == 1.0) return 2;
  return -1;
}

}  // namespace

std::string_view to_string(RewiringSchedule schedule) {
  switch (schedule) {
    case RewiringSchedule::kNone: return "none";
    case RewiringSchedule::kHalf: return "half";
    case RewiringSchedule::kFull: return "full";
  }
  return "?";
}

std::optional<RewiringSchedule> parse_schedule(std::string_view name) {
  if (name == "none") return RewiringSchedule::kNone;
  if (name == "half") return RewiringSchedule::kHalf;
  if (name == "full") return RewiringSchedule::kFull;
  return std::nullopt;
}

Observation::Observation(const std::array<double, kSize>& values) : values_(values) {
  code_ = 0;
  for (int pair = 3; pair >= 0; --pair) {
    const int c = pair_code(values_[2 * pair], values_[2 * pair + 1]);
    if (c < 0) {
      code_ = -1;
      return;
    }
    code_ = code_ * 3 + c;
  }
}

int Observation::code() const {
  if (code_ < 0) throw ContractViolation("observation pair is not one-hot or empty");
  return code_;
}

std::optional<InteractionAction> Observation::decode_pair(std::size_t offset) const {
  if (values_[offset] == 1.0) return InteractionAction::kCooperate;
  if (values_[offset + 1] == 1.0) return InteractionAction::kDefect;
  return std::nullopt;
}

bool rewiring_opportunity(RewiringSchedule schedule, int timestep, int episode_length) {
  if (timestep < 1 || timestep > episode_length) {
    throw ContractViolation("rewiring_opportunity: timestep " + std::to_string(timestep) +
                            " outside 1.." + std::to_string(episode_length));
  }
  switch (schedule) {
    case RewiringSchedule::kNone: return false;
    case RewiringSchedule::kHalf: return timestep % 2 == 0;
    case RewiringSchedule::kFull: return true;
  }
  return false;
}

bool connection_update(bool prev_connected, bool opportunity, RewiringAction a1,
                       RewiringAction a2) {
  if (!opportunity) return prev_connected;
  return a1 == RewiringAction::kConnect && a2 == RewiringAction::kConnect;
}

PayoffPair payoff(InteractionAction a1, InteractionAction a2, bool connected,
                  const PayoffMatrix& matrix) {
  if (!connected) return {matrix.disconnected, matrix.disconnected};
  const bool c1 = a1 == InteractionAction::kCooperate;
  const bool c2 = a2 == InteractionAction::kCooperate;
  if (c1 && c2) return matrix.cc;
  if (c1) return matrix.cd;
  if (c2) return matrix.dc;
  return matrix.dd;
}

Observation encode_observation(std::optional<InteractionAction> own_prev,
                               std::optional<InteractionAction> other_prev, bool edge_prev,
                               bool opportunity_prev) {
  std::array<double, Observation::kSize> v{};
  put_interaction(v, 0, own_prev);
  put_interaction(v, 2, other_prev);
  put_flag(v, 4, edge_prev);
  put_flag(v, 6, opportunity_prev);
  return Observation(v);
}

std::pair<EnvState, std::array<Observation, 2>> reset(RewiringSchedule schedule,
                                                      int episode_length) {
  if (episode_length < 1) throw ContractViolation("episode_length must be >= 1");
  EnvState state;
  state.schedule = schedule;
  state.episode_length = episode_length;
  const Observation first = encode_observation(std::nullopt, std::nullopt, true, false);
  return {state, {first, first}};
}

std::pair<EnvState, StepOutcome> step(const EnvState& state,
                                      std::array<RewiringAction, 2> rewire_actions,
                                      std::array<InteractionAction, 2> interaction_actions,
                                      const PayoffMatrix& matrix) {
  if (state.finished()) throw ContractViolation("step called after the episode ended");

  StepOutcome out;
  out.opportunity = rewiring_opportunity(state.schedule, state.timestep, state.episode_length);
  out.connected_after =
      connection_update(state.connected, out.opportunity, rewire_actions[0], rewire_actions[1]);
  out.interacted = out.connected_after;
  out.payoffs = payoff(interaction_actions[0], interaction_actions[1], out.connected_after, matrix);
  out.observations_next[0] = encode_observation(interaction_actions[0], interaction_actions[1],
                                                out.connected_after, out.opportunity);
  out.observations_next[1] = encode_observation(interaction_actions[1], interaction_actions[0],
                                                out.connected_after, out.opportunity);

  EnvState next = state;
  next.timestep += 1;
  next.connected = out.connected_after;
  next.last_interaction = interaction_actions;
  next.last_rewire_opportunity = out.opportunity;
  return {next, out};
}

}  // namespace ipdnet
