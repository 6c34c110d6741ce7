#include "step/train/config.hpp"

namespace step::train {

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kStep:
      return "step";
    case Algorithm::kIppo:
      return "ippo";
    case Algorithm::kCentralCritic:
      return "central-critic";
  }
  return "?";
}

Algorithm parse_algorithm(const std::string& name) {
  if (name == "step") return Algorithm::kStep;
  if (name == "ippo") return Algorithm::kIppo;
  if (name == "central-critic") return Algorithm::kCentralCritic;
  throw ConfigError("unknown algorithm '" + name + "' (expected step, ippo or central-critic)");
}

void TrainConfig::validate() const {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  require(clip > 0.0 && clip < 1.0, "train.clip must lie in (0, 1)");
  require(value_clip > 0.0, "train.value_clip must be positive");
  require(entropy_coef >= 0.0, "train.entropy_coef must be >= 0");
  require(beta >= 0.0, "train.beta must be >= 0");
  require(gae_lambda >= 0.0 && gae_lambda <= 1.0, "train.gae_lambda must lie in [0, 1]");
  require(actor_lr > 0.0 && critic_lr > 0.0, "learning rates must be positive");
  require(max_grad_norm >= 0.0, "train.max_grad_norm must be >= 0");
  require(reward_scale > 0.0, "train.reward_scale must be positive");
  require(epochs >= 1, "train.epochs must be >= 1");
  require(minibatch >= 1, "train.minibatch must be >= 1");
  require(rollout >= 1, "train.rollout must be >= 1");
  require(eval_interval >= 1, "train.eval_interval must be >= 1");
  require(critic_hidden >= 1, "train.critic_hidden must be >= 1");
  require(max_agents >= 1, "policy.max_agents must be >= 1");
}

}  // namespace step::train
