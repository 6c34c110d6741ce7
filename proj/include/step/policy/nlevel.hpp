#pragma once

#include <map>
#include <string>
#include <vector>

#include "step/core/distributions.hpp"
#include "step/core/mlp.hpp"
#include "step/policy/arch.hpp"
#include "step/policy/joint_policy.hpp"

namespace step::policy {

/// Differentiable policy head for a batch of subgame rows.
struct HeadVars {
  core::Var output;   // logits or Gaussian means, [B, head_width]
  core::Var log_std;  // [head_width]; invalid for discrete actions
};

/// Result of a stochastic action draw.
struct ActSample {
  env::Action action;  // as sampled (box actions unclamped)
  double log_prob = 0.0;
  core::ActionDistribution dist;
};

class MaterializedPolicy;

/// Shared N-level policy: a state-embedding MLP over the subgame row, a
/// hypernetwork that maps a learned priority embedding to the weights of a
/// one-hidden-layer target policy, and the embedding table itself.
///
/// Parameter names: `state/...` (embedding MLP), `hyper/...` (hypernetwork),
/// `embed` ([num_agents, embed_dim]).
class NLevelPolicy {
 public:
  static constexpr const char* kEmbedName = "embed";

  explicit NLevelPolicy(PolicyArch arch);

  const PolicyArch& arch() const { return arch_; }
  const core::Mlp& state_mlp() const { return state_; }
  const core::Mlp& hyper_mlp() const { return hyper_; }

  /// Glorot-initialised networks. The hypernetwork's output layer starts at
  /// `hyper_init_scale` of its Glorot bound and its output bias holds a
  /// conventional target-network init (last layer shrunk by 0.01, log-std 0),
  /// so every agent starts from a near-uniform policy.
  core::ParamSet init(core::Rng& rng) const;
  std::map<std::string, core::Shape> parameter_shapes() const;
  std::size_t parameter_count() const;
  /// Throws ContractError if `params` does not match this architecture.
  void check(const core::ParamSet& params) const;

  // Plain evaluation.
  core::Tensor embed_state(const core::ParamSet& params, const core::Tensor& rows) const;
  core::Tensor priority_embedding(const core::ParamSet& params, std::size_t agent) const;
  /// H(e; theta_h) for an arbitrary embedding vector; shape [1, target_param_count].
  core::Tensor generate_target_params(const core::ParamSet& params, const core::Tensor& embedding) const;
  core::Tensor generate_target_params(const core::ParamSet& params, std::size_t agent) const;
  MaterializedPolicy materialize(const core::ParamSet& params) const;

  // Recorded evaluation.
  core::Var generate_target_params(const core::VarMap& vars, std::size_t agent) const;
  HeadVars forward(const core::VarMap& vars, const core::Var& rows, std::size_t agent) const;
  /// Head from an already generated target vector (plain or recorded).
  HeadVars apply_target(const core::Var& embedded, const core::Var& target) const;

 private:
  PolicyArch arch_;
  core::Mlp state_;
  core::Mlp hyper_;
};

/// Snapshot of an N-level policy with every agent's target network generated
/// once, for fast repeated inference during rollouts and evaluation.
class MaterializedPolicy final : public JointPolicy {
 public:
  MaterializedPolicy(const NLevelPolicy& model, const core::ParamSet& params);

  const PolicyArch& arch() const { return arch_; }

  /// Head outputs for subgame rows [B, input_width] of one agent.
  core::Tensor head(const core::Tensor& rows, std::size_t agent) const;
  core::ActionDistribution distribution(const core::Tensor& row, std::size_t agent) const;

  ActSample act_stochastic(const core::Tensor& row, std::size_t agent, core::Rng& rng) const;
  /// Argmax (lowest index on ties) or Gaussian mean; not clamped.
  env::Action act_deterministic(const core::Tensor& row, std::size_t agent) const;

  /// Each agent i recomputes agents 1..i-1's deterministic actions from the
  /// shared model before choosing its own; nothing passes between agents.
  /// `recomputed[i]` holds the superior actions agent i derived.
  struct Execution {
    std::vector<env::Action> joint;
    std::vector<std::vector<env::Action>> recomputed;
  };
  Execution symmetric_execute(const core::Tensor& observation) const;
  /// Reference pass where each agent's action is handed to its inferiors.
  std::vector<env::Action> sequential_execute(const core::Tensor& observation) const;

  std::vector<env::Action> greedy_joint(const core::Tensor& observation) const override {
    return symmetric_execute(observation).joint;
  }

 private:
  PolicyArch arch_;
  core::ParamSet state_params_;
  core::Mlp state_;
  std::vector<core::Tensor> w1_, b1_, w2_, b2_, log_std_;
};

}  // namespace step::policy
