#pragma once

// Two-agent iterated Prisoner's Dilemma with bilateral tie-making and
// unilateral tie-breaking.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <utility>

namespace ipdnet {

/// Raised when a caller breaks a documented precondition.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class InteractionAction : std::uint8_t { kCooperate = 0, kDefect = 1 };
enum class RewiringAction : std::uint8_t { kConnect = 0, kDisconnect = 1 };
enum class RewiringSchedule : std::uint8_t { kNone, kHalf, kFull };

inline constexpr int kDefaultEpisodeLength = 10;

std::string_view to_string(RewiringSchedule schedule);
std::optional<RewiringSchedule> parse_schedule(std::string_view name);

/// Payoffs to (agent 0, agent 1).
struct PayoffPair {
  double first = 0.0;
  double second = 0.0;
  friend bool operator==(const PayoffPair&, const PayoffPair&) = default;
};

struct PayoffMatrix {
  PayoffPair cc{1.0, 1.0};
  PayoffPair cd{-1.0, 2.0};
  PayoffPair dc{2.0, -1.0};
  PayoffPair dd{0.0, 0.0};
  double disconnected = 0.0;

  /// Temptation > reward > punishment > sucker, read from agent 0's side.
  bool is_prisoners_dilemma() const {
    return dc.first > cc.first && cc.first > dd.first && dd.first > cd.first;
  }
};

/// Flattened one-hot perception: [own prev interaction | other prev
/// interaction | edge present last step | rewiring opportunity last step].
/// Interaction pairs are [1,0] for cooperate, [0,1] for defect and [0,0]
/// when there is no previous decision. Edge and opportunity pairs are [1,0]
/// for presence and [0,1] for absence.
class Observation {
 public:
  static constexpr std::size_t kSize = 8;
  /// Number of distinct codes: each of the four pairs is empty, [1,0] or [0,1].
  static constexpr int kCodeCount = 81;

  Observation() = default;
  explicit Observation(const std::array<double, kSize>& values);

  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double, kSize> values() const { return values_; }

  std::optional<InteractionAction> own_prev() const { return decode_pair(0); }
  std::optional<InteractionAction> other_prev() const { return decode_pair(2); }
  bool edge_prev() const { return values_[4] == 1.0; }
  bool opportunity_prev() const { return values_[6] == 1.0; }

  /// Dense index in [0, kCodeCount) identifying this observation. Throws
  /// ContractViolation if a pair is neither one-hot nor empty.
  int code() const;

  friend bool operator==(const Observation& a, const Observation& b) {
    return a.values_ == b.values_;
  }

 private:
  std::optional<InteractionAction> decode_pair(std::size_t offset) const;

  std::array<double, kSize> values_{};
  int code_ = 0;  // -1 when some pair is malformed
};

struct EnvState {
  int timestep = 1;  // 1-based; episode_length + 1 once finished
  bool connected = true;
  std::optional<std::array<InteractionAction, 2>> last_interaction;
  bool last_rewire_opportunity = false;
  RewiringSchedule schedule = RewiringSchedule::kFull;
  int episode_length = kDefaultEpisodeLength;

  bool finished() const { return timestep > episode_length; }
};

struct StepOutcome {
  PayoffPair payoffs;
  bool opportunity = false;
  bool connected_after = true;
  bool interacted = true;
  std::array<Observation, 2> observations_next;
};

bool rewiring_opportunity(RewiringSchedule schedule, int timestep,
                          int episode_length = kDefaultEpisodeLength);

bool connection_update(bool prev_connected, bool opportunity, RewiringAction a1,
                       RewiringAction a2);

PayoffPair payoff(InteractionAction a1, InteractionAction a2, bool connected,
                  const PayoffMatrix& matrix = {});

Observation encode_observation(std::optional<InteractionAction> own_prev,
                               std::optional<InteractionAction> other_prev, bool edge_prev,
                               bool opportunity_prev);

/// Starts an episode connected at timestep 1. Interaction history is empty
/// ([0,0] pairs), the edge is reported present and the opportunity absent.
std::pair<EnvState, std::array<Observation, 2>> reset(
    RewiringSchedule schedule, int episode_length = kDefaultEpisodeLength);

/// Rewiring first, then the interaction. Interaction actions are always
/// recorded into the next observations, including while disconnected; they
/// only pay out when connected. Rewiring actions are ignored on steps without
/// an opportunity.
std::pair<EnvState, StepOutcome> step(const EnvState& state,
                                      std::array<RewiringAction, 2> rewire_actions,
                                      std::array<InteractionAction, 2> interaction_actions,
                                      const PayoffMatrix& matrix = {});

}  // namespace ipdnet
