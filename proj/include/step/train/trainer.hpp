#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "step/core/adam.hpp"
#include "step/core/mlp.hpp"
#include "step/env/environment.hpp"
#include "step/oracle/equilibria.hpp"
#include "step/policy/checkpoint.hpp"
#include "step/policy/independent.hpp"
#include "step/policy/nlevel.hpp"
#include "step/train/config.hpp"
#include "step/train/losses.hpp"

namespace step::train {

/// One agent's share of a rollout.
struct AgentTrajectory {
  core::Tensor actor_inputs;   // [T, actor width]
  core::Tensor critic_inputs;  // [T, critic width]
  std::vector<std::size_t> actions;
  core::Tensor action_values;  // [T, d] for box actions, as sampled (before clamping)
  std::vector<double> log_probs;
  std::vector<double> rewards;  // unscaled env rewards
  std::vector<double> values;
  std::vector<std::uint8_t> dones;
  double bootstrap_value = 0.0;
  std::vector<double> advantages;
  std::vector<double> returns;
};

struct TrajectoryBatch {
  std::size_t steps = 0;
  std::vector<AgentTrajectory> agents;
  /// Executed (clamped) joint action per step, in priority order.
  std::vector<std::vector<env::Action>> joint_actions;
  /// Per-agent returns of the episodes that ended inside this batch, summed
  /// on the environment side.
  std::vector<std::vector<double>> episode_returns;
  std::size_t collisions = 0;
};

/// Per-(epoch, agent) optimisation summary.
struct UpdateMetrics {
  std::size_t epoch = 0;
  std::size_t agent = 0;
  double actor_loss = 0.0;
  double surrogate = 0.0;
  double entropy = 0.0;
  double lh = 0.0;
  double critic_loss = 0.0;
};

/// Greedy evaluation summary. Rates not defined for an environment are NaN.
struct Evaluation {
  std::size_t episodes = 0;
  std::vector<double> mean_step_reward;    // per agent, over all steps
  std::vector<double> mean_episode_return;  // per agent
  std::vector<double> episode_returns;      // per episode, averaged over agents
  double se_rate = 0.0;                     // fraction of steps on the SE joint action
  double ne_rate = 0.0;                     // fraction of steps on any pure NE
  double collision_rate = 0.0;              // fraction of episodes ending in collision
  /// Most frequent greedy joint action in game-agent order (matrix games only).
  std::optional<oracle::JointAction> modal_joint;
};

struct MetricsRow {
  std::size_t step = 0;
  Evaluation eval;
  double entropy = 0.0;
  double lh = 0.0;
};

struct TrainResult {
  std::vector<MetricsRow> metrics;
  std::vector<UpdateMetrics> updates;
  Evaluation final_eval;
  policy::Checkpoint checkpoint;
};

/// Oracle labels for a repeated matrix game, in game-agent order.
struct GameLabels {
  oracle::JointAction se;
  std::vector<oracle::JointAction> ne;
};

/// Episode-seed stream for greedy evaluations of the run with root `seed`.
std::uint64_t evaluation_seed(std::uint64_t seed);

/// Greedy episodes of `policy` on a copy of `env`. Episode seeds come from
/// `seed`, so repeated evaluations see the same starts.
Evaluation evaluate_policy(const policy::JointPolicy& policy, const env::Environment& env, std::size_t episodes,
                           std::uint64_t seed);

/// STEP and the simultaneous-move baselines behind one training loop.
class Trainer {
 public:
  explicit Trainer(TrainConfig config);

  const TrainConfig& config() const { return config_; }
  const policy::PolicyArch& arch() const { return arch_; }
  std::size_t num_agents() const { return arch_.num_agents; }
  env::Environment& environment() { return *env_; }
  std::size_t steps_done() const { return steps_; }

  /// Shared N-level parameters (STEP) or the stacked independent actors.
  const core::ParamSet& policy_params() const { return policy_params_; }
  /// Replaces the policy parameters after a shape check; the sampling policy
  /// is rebuilt from them.
  void set_policy_params(core::ParamSet params);
  const core::ParamSet& critic_params(std::size_t agent) const { return critic_params_.at(agent); }
  const policy::NLevelPolicy* nlevel() const { return nlevel_ ? &*nlevel_ : nullptr; }
  std::size_t actor_input_width() const;
  std::size_t critic_input_width() const;

  /// Samples `steps` transitions, continuing the current episode.
  TrajectoryBatch collect_rollouts(std::size_t steps);
  /// Fills advantages and returns for every agent.
  void compute_advantages(TrajectoryBatch& batch) const;
  /// Epoch sweeps over agents in priority order; one row per (epoch, agent).
  std::vector<UpdateMetrics> train_step(const TrajectoryBatch& batch);

  std::unique_ptr<policy::JointPolicy> greedy_policy() const;
  Evaluation evaluate(std::size_t episodes) const;
  policy::Checkpoint checkpoint() const;

  /// Whole training run; `on_row` observes each metrics row as it is produced.
  TrainResult run(const std::function<void(const MetricsRow&)>& on_row = {});

  /// Actor and critic minibatches for `agent` at the given sample indices.
  static Minibatch gather(const AgentTrajectory& traj, std::span<const std::size_t> idx, bool discrete);

 private:
  struct Choice {
    core::Tensor actor_row;
    env::Action sampled;
    double log_prob = 0.0;
  };
  std::vector<Choice> choose_joint(const core::Tensor& observation);
  core::Tensor critic_row(const core::Tensor& observation, std::size_t agent, const std::vector<Choice>& choices,
                          const std::vector<env::Action>& executed) const;
  std::vector<double> critic_values(std::size_t agent, const core::Tensor& rows) const;
  void refresh_policy();
  UpdateMetrics update_agent(std::size_t epoch, std::size_t agent, const AgentTrajectory& traj,
                             std::span<const core::Tensor> anchors);

  TrainConfig config_;
  std::unique_ptr<env::Environment> env_;
  policy::PolicyArch arch_;
  std::optional<policy::NLevelPolicy> nlevel_;
  std::optional<policy::IndependentPolicies> independent_;
  core::ParamSet policy_params_;
  std::optional<policy::MaterializedPolicy> materialized_;
  std::vector<core::Mlp> critics_;
  std::vector<core::ParamSet> critic_params_;
  std::vector<core::Adam> actor_opt_;  // one shared (STEP) or one per agent
  std::vector<core::Adam> critic_opt_;

  core::Rng sample_rng_;
  core::Rng env_rng_;
  core::Rng batch_rng_;
  std::uint64_t eval_seed_ = 0;
  std::size_t steps_ = 0;
  std::vector<double> running_return_;
};

}  // namespace step::train
