#pragma once

#include <cstddef>
#include <span>
#include <string>

#include "step/core/tensor.hpp"
#include "step/env/environment.hpp"

namespace step::policy {

/// Shapes of the shared N-level model.
///
/// Every agent's policy input is the subgame row
///   [observation | superior-action slots | priority one-hot]
/// with max_agents - 1 slots of `slot_width()` values each and a one-hot of
/// width max_agents. Fixing max_agents keeps every non-embedding parameter
/// independent of the number of agents actually playing.
struct PolicyArch {
  std::size_t obs_size = 1;
  std::size_t num_agents = 2;
  std::size_t max_agents = 6;
  env::ActionSpace action = env::ActionSpace::discrete(3);

  std::size_t embed_dim = 8;
  std::size_t state_hidden = 64;
  std::size_t hyper_hidden = 128;
  std::size_t target_hidden = 64;
  /// Scale applied to the Glorot bound of the hypernetwork's output layer.
  double hyper_init_scale = 0.05;

  bool discrete() const { return action.is_discrete(); }
  std::size_t slot_width() const { return action.size; }
  std::size_t input_width() const { return obs_size + (max_agents - 1) * slot_width() + max_agents; }
  /// Number of policy outputs: logits (discrete) or Gaussian means (box).
  std::size_t head_width() const { return action.size; }
  /// Flat length of one generated target network: W1, b1, W2, b2 and, for
  /// box actions, a state-independent log-std vector.
  std::size_t target_param_count() const;

  /// Throws ContractError on inconsistent shapes.
  void validate() const;

  static PolicyArch for_env(const env::Environment& env, std::size_t max_agents);

  friend bool operator==(const PolicyArch&, const PolicyArch&) = default;
};

/// Offsets of the target-network segments inside a generated vector.
struct TargetLayout {
  std::size_t w1 = 0, b1 = 0, w2 = 0, b2 = 0, log_std = 0, total = 0;
  explicit TargetLayout(const PolicyArch& arch);
};

/// One subgame row for agent `agent` (0-based priority). `superiors` holds the
/// actions of agents 0..agent-1, encoded one-hot (discrete) or raw (box).
core::Tensor encode_subgame(const PolicyArch& arch, const core::Tensor& observation, std::size_t agent,
                            std::span<const env::Action> superiors);

/// Throws ContractError unless `row` is a well-formed subgame row for `agent`:
/// slots at or beyond the agent's own position are zero and the priority
/// one-hot marks `agent`.
void validate_subgame(const PolicyArch& arch, std::span<const double> row, std::size_t agent);

/// Clamps box actions into the action bounds; discrete actions pass through.
env::Action executable_action(const PolicyArch& arch, const env::Action& action);

std::string describe(const PolicyArch& arch);

}  // namespace step::policy
