#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "step/env/registry.hpp"

namespace step::train {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when training diverges or produces unusable numbers.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Algorithm { kStep, kIppo, kCentralCritic };

std::string to_string(Algorithm a);
/// Parses "step", "ippo" or "central-critic"; throws ConfigError otherwise.
Algorithm parse_algorithm(const std::string& name);

struct TrainConfig {
  Algorithm algorithm = Algorithm::kStep;
  env::EnvConfig env;
  /// Width of the shared policy's priority input; fixed so parameter counts
  /// do not depend on the number of agents.
  std::size_t max_agents = 6;

  double gae_lambda = 0.95;
  double clip = 0.2;
  double value_clip = 0.2;
  double entropy_coef = 0.01;
  double beta = 1.0;
  double actor_lr = 3e-4;
  double critic_lr = 1e-3;
  double max_grad_norm = 0.0;  // 0 disables clipping
  /// Multiplies rewards before advantage and value estimation; logged rewards
  /// stay unscaled.
  double reward_scale = 1.0;
  bool freeze_embeddings = false;

  std::size_t epochs = 4;
  std::size_t minibatch = 256;
  std::size_t rollout = 1000;
  std::size_t total_steps = 10000;
  std::size_t eval_interval = 500;
  std::size_t eval_episodes = 100;
  std::size_t critic_hidden = 64;
  std::uint64_t seed = 0;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

}  // namespace step::train
