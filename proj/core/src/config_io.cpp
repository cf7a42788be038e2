#include "ipdnet/config_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace ipdnet {

namespace {

using nlohmann::json;

void reject_unknown(const json& object, const std::set<std::string>& known,
                    std::string_view where) {
  for (const auto& [key, value] : object.items()) {
    if (!known.count(key)) {
      throw ConfigError("unknown key '" + key + "' in " + std::string(where));
    }
  }
}

template <typename T>
void read_if(const json& object, const char* key, T& field) {
  if (object.contains(key)) field = object.at(key).get<T>();
}

void read_hyper(const json& h, Hyperparameters& hp) {
  if (!h.is_object()) throw ConfigError("hyperparams must be an object");
  reject_unknown(h,
                 {"gamma", "epsilon_start", "epsilon_end", "epsilon_decay_steps", "batch_size",
                  "target_sync_period", "learn_every", "clip_norm", "learning_rate",
                  "adam_beta1", "adam_beta2", "adam_epsilon", "per_alpha", "per_beta_start",
                  "per_beta_end", "per_priority_epsilon", "replay_capacity", "min_replay_size"},
                 "hyperparams");
  read_if(h, "gamma", hp.gamma);
  read_if(h, "epsilon_start", hp.epsilon_start);
  read_if(h, "epsilon_end", hp.epsilon_end);
  read_if(h, "epsilon_decay_steps", hp.epsilon_decay_steps);
  read_if(h, "batch_size", hp.batch_size);
  read_if(h, "target_sync_period", hp.target_sync_period);
  read_if(h, "learn_every", hp.learn_every);
  read_if(h, "clip_norm", hp.clip_norm);
  read_if(h, "learning_rate", hp.adam.learning_rate);
  read_if(h, "adam_beta1", hp.adam.beta1);
  read_if(h, "adam_beta2", hp.adam.beta2);
  read_if(h, "adam_epsilon", hp.adam.epsilon);
  read_if(h, "per_alpha", hp.per.alpha);
  read_if(h, "per_beta_start", hp.per.beta_start);
  read_if(h, "per_beta_end", hp.per.beta_end);
  read_if(h, "per_priority_epsilon", hp.per.priority_epsilon);
  read_if(h, "replay_capacity", hp.per.capacity);
  read_if(h, "min_replay_size", hp.per.min_size_to_sample);
}

json hyper_to_json(const Hyperparameters& hp) {
  return json{{"gamma", hp.gamma},
              {"epsilon_start", hp.epsilon_start},
              {"epsilon_end", hp.epsilon_end},
              {"epsilon_decay_steps", hp.epsilon_decay_steps},
              {"batch_size", hp.batch_size},
              {"target_sync_period", hp.target_sync_period},
              {"learn_every", hp.learn_every},
              {"clip_norm", hp.clip_norm},
              {"learning_rate", hp.adam.learning_rate},
              {"adam_beta1", hp.adam.beta1},
              {"adam_beta2", hp.adam.beta2},
              {"adam_epsilon", hp.adam.epsilon},
              {"per_alpha", hp.per.alpha},
              {"per_beta_start", hp.per.beta_start},
              {"per_beta_end", hp.per.beta_end},
              {"per_priority_epsilon", hp.per.priority_epsilon},
              {"replay_capacity", hp.per.capacity},
              {"min_replay_size", hp.per.min_size_to_sample}};
}

}  // namespace

RunConfig parse_run_config(std::string_view json_text) {
  RunConfig config;
  try {
    const json j = json::parse(json_text);
    if (!j.is_object()) throw ConfigError("run config must be a JSON object");
    reject_unknown(j,
                   {"schedule", "bias", "rewiring_learning", "frozen_rewiring", "episodes",
                    "episode_length", "seed", "hyperparams", "metrics_bin", "response_window"},
                   "run config");
    if (j.contains("schedule")) {
      const auto name = j.at("schedule").get<std::string>();
      const auto s = parse_schedule(name);
      if (!s) throw ConfigError("unknown schedule '" + name + "'");
      config.schedule = *s;
    }
    if (j.contains("bias")) {
      const auto name = j.at("bias").get<std::string>();
      const auto b = parse_bias(name);
      if (!b) throw ConfigError("unknown bias '" + name + "'");
      config.bias = *b;
    }
    if (j.contains("frozen_rewiring")) {
      const auto name = j.at("frozen_rewiring").get<std::string>();
      const auto f = parse_frozen_rewiring(name);
      if (!f) throw ConfigError("unknown frozen_rewiring '" + name + "'");
      config.frozen_rewiring = *f;
    }
    read_if(j, "rewiring_learning", config.rewiring_learning);
    read_if(j, "episodes", config.episodes);
    read_if(j, "episode_length", config.episode_length);
    read_if(j, "seed", config.seed);
    read_if(j, "metrics_bin", config.metrics_bin);
    read_if(j, "response_window", config.response_window);
    if (j.contains("hyperparams")) read_hyper(j.at("hyperparams"), config.hyper);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid run config: ") + e.what());
  }
  try {
    config.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid run config: ") + e.what());
  }
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_run_config(text.str());
}

std::string to_json(const RunConfig& config) {
  const json j{{"schedule", std::string(to_string(config.schedule))},
               {"bias", std::string(to_string(config.bias))},
               {"rewiring_learning", config.rewiring_learning},
               {"frozen_rewiring", std::string(to_string(config.frozen_rewiring))},
               {"episodes", config.episodes},
               {"episode_length", config.episode_length},
               {"seed", config.seed},
               {"metrics_bin", config.metrics_bin},
               {"response_window", config.response_window},
               {"hyperparams", hyper_to_json(config.hyper)}};
  return j.dump(2) + "\n";
}

}  // namespace ipdnet
