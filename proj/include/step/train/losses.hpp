#pragma once

#include <span>
#include <vector>

#include "step/core/tape.hpp"
#include "step/policy/nlevel.hpp"

namespace step::train {

/// One agent's minibatch in training layout.
struct Minibatch {
  core::Tensor actor_inputs;   // [B, actor width]
  core::Tensor critic_inputs;  // [B, critic width]
  std::vector<std::size_t> actions;
  core::Tensor action_values;  // [B, d] for box actions, as sampled
  std::vector<double> old_log_probs;
  std::vector<double> advantages;
  std::vector<double> old_values;
  std::vector<double> returns;

  std::size_t size() const { return old_log_probs.size(); }
};

/// min(r A, clip(r, 1-eps, 1+eps) A) for a single sample.
double clipped_surrogate(double ratio, double advantage, double clip);

struct ActorLoss {
  core::Var loss;       // -surrogate + lh - entropy_coef * entropy
  core::Var surrogate;  // mean clipped surrogate
  core::Var entropy;    // mean policy entropy
  core::Var lh;         // hypernetwork regularizer (zero when unused)
};

/// log pi(a | row) of the minibatch actions under `head`; shape [B].
core::Var action_log_prob(const policy::HeadVars& head, const Minibatch& mb, bool discrete);
core::Var mean_entropy(const policy::HeadVars& head, bool discrete);

/// Clipped PPO objective arranged for minimisation, without any regularizer.
ActorLoss ppo_actor_loss(const policy::HeadVars& head, const Minibatch& mb, bool discrete, double clip,
                         double entropy_coef);

/// (beta / i) * sum_{j < i} || H(e^j; theta_h) - anchor_j ||^2 for the
/// 0-based agent i; anchors are generated targets frozen at the start of
/// agent i's update turn. Zero for the first agent.
core::Var hypernet_regularizer(const policy::NLevelPolicy& model, const core::VarMap& vars, std::size_t agent,
                               std::span<const core::Tensor> anchors, double beta);

/// Full actor loss of agent `agent` under the shared N-level policy.
ActorLoss step_actor_loss(const policy::NLevelPolicy& model, const core::VarMap& vars, const Minibatch& mb,
                          std::size_t agent, std::span<const core::Tensor> anchors, double clip, double entropy_coef,
                          double beta);

/// mean(max((V - R)^2, (V_old + clip(V - V_old, -eps, eps) - R)^2)) for values [B].
core::Var critic_loss(const core::Var& values, std::span<const double> old_values, std::span<const double> returns,
                      double value_clip);

}  // namespace step::train
