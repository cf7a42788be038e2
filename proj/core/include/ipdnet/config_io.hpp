#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "ipdnet/experiment.hpp"

namespace ipdnet {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses a run config. Recognized keys: schedule, bias, rewiring_learning,
/// frozen_rewiring, episodes, episode_length, seed, metrics_bin,
/// response_window and a hyperparams object (see README). Missing keys keep
/// their defaults; unknown keys are rejected.
RunConfig parse_run_config(std::string_view json_text);
RunConfig load_run_config(const std::filesystem::path& path);

/// Complete, resolved config as pretty-printed JSON.
std::string to_json(const RunConfig& config);

}  // namespace ipdnet
