#pragma once

// Binary snapshots of both agents' networks, optimizer moments and RNG
// streams. Replay buffer contents are not persisted.
//
// Layout (all integers and doubles little-endian):
//   "IPDNCKP1"
//   u64 seed, i64 episodes_completed, i64 env_steps, string run_id
//   per agent (2x):
//     string rng_init, string rng_act, string rng_replay
//     per head (interaction, rewiring): u8 present, then if present
//       params online, params target, params first_moment,
//       params second_moment, i64 optimizer_step, i64 learner_steps
// where string = u64 length + bytes and params = 450 f64 in MlpParams order.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "ipdnet/agent.hpp"

namespace ipdnet {

struct HeadSnapshot {
  QNetworkPair networks;
  MlpParams first_moment;
  MlpParams second_moment;
  std::int64_t optimizer_step = 0;
  std::int64_t learner_steps = 0;

  friend bool operator==(const HeadSnapshot&, const HeadSnapshot&) = default;
};

struct AgentSnapshot {
  std::string rng_init;
  std::string rng_act;
  std::string rng_replay;
  std::optional<HeadSnapshot> interaction;
  std::optional<HeadSnapshot> rewiring;

  friend bool operator==(const AgentSnapshot&, const AgentSnapshot&) = default;
};

struct Checkpoint {
  std::string run_id;
  std::uint64_t seed = 0;
  std::int64_t episodes_completed = 0;
  std::int64_t env_steps = 0;
  std::array<AgentSnapshot, 2> agents;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

AgentSnapshot snapshot_agent(const Agent& agent);
/// Restores networks, optimizer state and RNG streams. The agent must have
/// been built from the same AgentSpec so the head layout matches.
void restore_agent(Agent& agent, const AgentSnapshot& snapshot);

void write_checkpoint(std::ostream& out, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(std::istream& in);

}  // namespace ipdnet
