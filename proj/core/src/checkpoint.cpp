#include "ipdnet/checkpoint.hpp"

#include <istream>
#include <ostream>
#include <stdexcept>

namespace ipdnet {

namespace {

constexpr char kMagic[8] = {'I', 'P', 'D', 'N', 'C', 'K', 'P', '1'};

void put_u64(std::ostream& out, std::uint64_t v) {
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(bytes, 8);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) {
    throw std::runtime_error("checkpoint: unexpected end of file");
  }
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(bytes[i]) << (8 * i);
  return v;
}

void put_string(std::ostream& out, const std::string& s) {
  put_u64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in) {
  const std::uint64_t n = get_u64(in);
  if (n > (1u << 20)) throw std::runtime_error("checkpoint: implausible string length");
  std::string s(n, '\0');
  if (!in.read(s.data(), static_cast<std::streamsize>(n))) {
    throw std::runtime_error("checkpoint: unexpected end of file");
  }
  return s;
}

void put_head(std::ostream& out, const std::optional<HeadSnapshot>& head) {
  out.put(head ? 1 : 0);
  if (!head) return;
  write_params(out, head->networks.online);
  write_params(out, head->networks.target);
  write_params(out, head->first_moment);
  write_params(out, head->second_moment);
  put_u64(out, static_cast<std::uint64_t>(head->optimizer_step));
  put_u64(out, static_cast<std::uint64_t>(head->learner_steps));
}

std::optional<HeadSnapshot> get_head(std::istream& in) {
  const int present = in.get();
  if (present == 0) return std::nullopt;
  if (present != 1) throw std::runtime_error("checkpoint: bad head marker");
  HeadSnapshot head;
  head.networks.online = read_params(in);
  head.networks.target = read_params(in);
  head.first_moment = read_params(in);
  head.second_moment = read_params(in);
  head.optimizer_step = static_cast<std::int64_t>(get_u64(in));
  head.learner_steps = static_cast<std::int64_t>(get_u64(in));
  return head;
}

std::optional<HeadSnapshot> snapshot_head(const std::optional<PolicyHead>& head) {
  if (!head) return std::nullopt;
  return HeadSnapshot{head->networks(), head->optimizer().first_moment,
                      head->optimizer().second_moment, head->optimizer().step,
                      head->learner_steps()};
}

void restore_head(std::optional<PolicyHead>& head, const std::optional<HeadSnapshot>& snap) {
  if (head.has_value() != snap.has_value()) {
    throw std::invalid_argument("restore_agent: head layout does not match the snapshot");
  }
  if (!head) return;
  head->networks() = snap->networks;
  head->optimizer().first_moment = snap->first_moment;
  head->optimizer().second_moment = snap->second_moment;
  head->optimizer().step = snap->optimizer_step;
  head->set_learner_steps(snap->learner_steps);
}

}  // namespace

AgentSnapshot snapshot_agent(const Agent& agent) {
  AgentSnapshot s;
  s.rng_init = agent.streams().init.state();
  s.rng_act = agent.streams().act.state();
  s.rng_replay = agent.streams().replay.state();
  s.interaction = snapshot_head(agent.interaction_head());
  s.rewiring = snapshot_head(agent.rewiring_head());
  return s;
}

void restore_agent(Agent& agent, const AgentSnapshot& snapshot) {
  restore_head(agent.interaction_head(), snapshot.interaction);
  restore_head(agent.rewiring_head(), snapshot.rewiring);
  agent.streams().init.restore(snapshot.rng_init);
  agent.streams().act.restore(snapshot.rng_act);
  agent.streams().replay.restore(snapshot.rng_replay);
}

void write_checkpoint(std::ostream& out, const Checkpoint& c) {
  out.write(kMagic, sizeof(kMagic));
  put_u64(out, c.seed);
  put_u64(out, static_cast<std::uint64_t>(c.episodes_completed));
  put_u64(out, static_cast<std::uint64_t>(c.env_steps));
  put_string(out, c.run_id);
  for (const AgentSnapshot& a : c.agents) {
    put_string(out, a.rng_init);
    put_string(out, a.rng_act);
    put_string(out, a.rng_replay);
    put_head(out, a.interaction);
    put_head(out, a.rewiring);
  }
  if (!out) throw std::runtime_error("checkpoint: write failed");
}

Checkpoint read_checkpoint(std::istream& in) {
  char magic[8];
  if (!in.read(magic, 8) || !std::equal(magic, magic + 8, kMagic)) {
    throw std::runtime_error("checkpoint: bad magic");
  }
  Checkpoint c;
  c.seed = get_u64(in);
  c.episodes_completed = static_cast<std::int64_t>(get_u64(in));
  c.env_steps = static_cast<std::int64_t>(get_u64(in));
  c.run_id = get_string(in);
  for (AgentSnapshot& a : c.agents) {
    a.rng_init = get_string(in);
    a.rng_act = get_string(in);
    a.rng_replay = get_string(in);
    a.interaction = get_head(in);
    a.rewiring = get_head(in);
  }
  return c;
}

}  // namespace ipdnet
