#include "step/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "step/core/errors.hpp"
#include "step/core/ops.hpp"
#include "step/env/matrix_env.hpp"
#include "step/env/registry.hpp"
#include "step/train/gae.hpp"

namespace step::train {

using core::Shape;
using core::Tensor;

namespace {

constexpr double kDivergenceLimit = 1e6;

void append_row(std::vector<double>& flat, const Tensor& row) {
  flat.insert(flat.end(), row.values().begin(), row.values().end());
}

void append_action(std::vector<double>& flat, const policy::PolicyArch& arch, const env::Action& a) {
  if (arch.discrete()) {
    for (std::size_t k = 0; k < arch.slot_width(); ++k) flat.push_back(k == a.index ? 1.0 : 0.0);
  } else {
    flat.insert(flat.end(), a.values.begin(), a.values.end());
  }
}

void guard(double loss, const std::string& what, std::size_t epoch, std::size_t agent) {
  if (!std::isfinite(loss) || std::abs(loss) > kDivergenceLimit) {
    throw TrainingError("divergence: " + what + " loss " + std::to_string(loss) + " at epoch " +
                        std::to_string(epoch) + ", agent " + std::to_string(agent + 1));
  }
}

}  // namespace

Trainer::Trainer(TrainConfig config)
    : config_(std::move(config)),
      sample_rng_(core::Rng(config_.seed).split("sampling")),
      env_rng_(core::Rng(config_.seed).split("env")),
      batch_rng_(core::Rng(config_.seed).split("minibatch")) {
  config_.validate();
  env_ = env::make_env(config_.env);
  if (env_->num_agents() > config_.max_agents) {
    throw ConfigError("policy.max_agents (" + std::to_string(config_.max_agents) + ") is below the number of agents (" +
                      std::to_string(env_->num_agents()) + ")");
  }
  arch_ = policy::PolicyArch::for_env(*env_, config_.max_agents);
  const core::Rng root(config_.seed);
  eval_seed_ = evaluation_seed(config_.seed);

  core::Rng init = root.split("policy-init");
  const core::AdamConfig actor_cfg{config_.actor_lr, 0.9, 0.999, 1e-8, config_.max_grad_norm};
  const core::AdamConfig critic_cfg{config_.critic_lr, 0.9, 0.999, 1e-8, config_.max_grad_norm};
  if (config_.algorithm == Algorithm::kStep) {
    nlevel_.emplace(arch_);
    policy_params_ = nlevel_->init(init);
    actor_opt_.emplace_back(actor_cfg);
  } else {
    independent_.emplace(arch_);
    policy_params_ = independent_->init(init);
    for (std::size_t i = 0; i < arch_.num_agents; ++i) actor_opt_.emplace_back(actor_cfg);
  }

  core::Rng critic_init = root.split("critic-init");
  const std::size_t h = config_.critic_hidden;
  for (std::size_t i = 0; i < arch_.num_agents; ++i) {
    critics_.emplace_back("critic" + std::to_string(i), std::vector<std::size_t>{critic_input_width(), h, h, 1});
    core::ParamSet p;
    core::Rng r = critic_init.split(i);
    critics_.back().init(p, r);
    critic_params_.push_back(std::move(p));
    critic_opt_.emplace_back(critic_cfg);
  }
  running_return_.assign(arch_.num_agents, 0.0);
  refresh_policy();
}

std::size_t Trainer::actor_input_width() const {
  return config_.algorithm == Algorithm::kStep ? arch_.input_width() : arch_.obs_size;
}

std::size_t Trainer::critic_input_width() const {
  switch (config_.algorithm) {
    case Algorithm::kStep:
      return arch_.input_width();
    case Algorithm::kIppo:
      return arch_.obs_size;
    case Algorithm::kCentralCritic:
      return arch_.obs_size + (arch_.num_agents - 1) * arch_.slot_width();
  }
  return 0;
}

void Trainer::set_policy_params(core::ParamSet params) {
  if (nlevel_) {
    nlevel_->check(params);
  } else {
    independent_->check(params);
  }
  policy_params_ = std::move(params);
  refresh_policy();
}

void Trainer::refresh_policy() {
  if (nlevel_) materialized_.emplace(*nlevel_, policy_params_);
}

std::vector<Trainer::Choice> Trainer::choose_joint(const Tensor& observation) {
  std::vector<Choice> choices;
  std::vector<env::Action> executed;
  for (std::size_t i = 0; i < arch_.num_agents; ++i) {
    Choice c;
    if (materialized_) {
      c.actor_row = policy::encode_subgame(arch_, observation, i, executed);
      policy::ActSample s = materialized_->act_stochastic(c.actor_row, i, sample_rng_);
      c.sampled = std::move(s.action);
      c.log_prob = s.log_prob;
    } else {
      c.actor_row = observation.reshaped(Shape{1, arch_.obs_size});
      const core::ActionDistribution dist = independent_->distribution(policy_params_, observation, i);
      const core::SampledAction s = core::dist_sample(dist, sample_rng_);
      c.log_prob = core::dist_log_prob(dist, s);
      c.sampled = arch_.discrete() ? env::Action::discrete(s.index) : env::Action::continuous(s.values);
    }
    executed.push_back(policy::executable_action(arch_, c.sampled));
    choices.push_back(std::move(c));
  }
  return choices;
}

Tensor Trainer::critic_row(const Tensor& observation, std::size_t agent, const std::vector<Choice>& choices,
                           const std::vector<env::Action>& executed) const {
  switch (config_.algorithm) {
    case Algorithm::kStep:
      return choices[agent].actor_row;
    case Algorithm::kIppo:
      return observation.reshaped(Shape{1, arch_.obs_size});
    case Algorithm::kCentralCritic: {
      std::vector<double> row(observation.values().begin(), observation.values().end());
      for (std::size_t j = 0; j < executed.size(); ++j) {
        if (j != agent) append_action(row, arch_, executed[j]);
      }
      const std::size_t width = row.size();
      return Tensor(Shape{1, width}, std::move(row));
    }
  }
  return {};
}

std::vector<double> Trainer::critic_values(std::size_t agent, const Tensor& rows) const {
  const Tensor v = critics_[agent].forward(critic_params_[agent], rows);
  return {v.values().begin(), v.values().end()};
}

TrajectoryBatch Trainer::collect_rollouts(std::size_t steps) {
  if (steps == 0) throw core::ContractError("collect_rollouts needs at least one step");
  const std::size_t n = arch_.num_agents;
  TrajectoryBatch batch;
  batch.steps = steps;
  batch.agents.resize(n);
  std::vector<std::vector<double>> actor_flat(n), critic_flat(n), value_flat(n);

  if (env_->state().done) {
    env_->reset(env_rng_.next_u64());
    std::fill(running_return_.begin(), running_return_.end(), 0.0);
  }
  for (std::size_t t = 0; t < steps; ++t) {
    const Tensor obs = env_->state().observation;
    const std::vector<Choice> choices = choose_joint(obs);
    std::vector<env::Action> executed;
    for (const Choice& c : choices) executed.push_back(policy::executable_action(arch_, c.sampled));
    env::StepResult result;
    try {
      result = env_->step(executed);
    } catch (const env::EnvError& e) {
      throw env::EnvError("rollout step " + std::to_string(steps_ + t) + ": " + e.what());
    }
    for (std::size_t i = 0; i < n; ++i) {
      AgentTrajectory& traj = batch.agents[i];
      append_row(actor_flat[i], choices[i].actor_row);
      append_row(critic_flat[i], critic_row(obs, i, choices, executed));
      traj.actions.push_back(choices[i].sampled.index);
      value_flat[i].insert(value_flat[i].end(), choices[i].sampled.values.begin(), choices[i].sampled.values.end());
      traj.log_probs.push_back(choices[i].log_prob);
      traj.rewards.push_back(result.rewards[i]);
      traj.dones.push_back(result.done ? 1 : 0);
      running_return_[i] += result.rewards[i];
    }
    batch.joint_actions.push_back(std::move(executed));
    if (result.done) {
      batch.episode_returns.push_back(running_return_);
      const auto it = result.info.find("collision");
      if (it != result.info.end() && it->second > 0.0) ++batch.collisions;
      env_->reset(env_rng_.next_u64());
      std::fill(running_return_.begin(), running_return_.end(), 0.0);
    }
  }
  steps_ += steps;

  std::vector<double> bootstrap(n, 0.0);
  if (!batch.agents[0].dones.back()) {
    const Tensor obs = env_->state().observation;
    const std::vector<Choice> choices = choose_joint(obs);
    std::vector<env::Action> executed;
    for (const Choice& c : choices) executed.push_back(policy::executable_action(arch_, c.sampled));
    for (std::size_t i = 0; i < n; ++i) bootstrap[i] = critic_values(i, critic_row(obs, i, choices, executed))[0];
  }
  for (std::size_t i = 0; i < n; ++i) {
    AgentTrajectory& traj = batch.agents[i];
    traj.actor_inputs = Tensor(Shape{steps, actor_input_width()}, std::move(actor_flat[i]));
    traj.critic_inputs = Tensor(Shape{steps, critic_input_width()}, std::move(critic_flat[i]));
    if (!arch_.discrete()) traj.action_values = Tensor(Shape{steps, arch_.action.size}, std::move(value_flat[i]));
    traj.values = critic_values(i, traj.critic_inputs);
    traj.bootstrap_value = bootstrap[i];
  }
  return batch;
}

void Trainer::compute_advantages(TrajectoryBatch& batch) const {
  for (AgentTrajectory& traj : batch.agents) {
    std::vector<double> scaled(traj.rewards);
    for (double& r : scaled) r *= config_.reward_scale;
    GaeResult g = compute_gae(scaled, traj.values, traj.dones, traj.bootstrap_value, env_->gamma(), config_.gae_lambda);
    traj.advantages = std::move(g.advantages);
    traj.returns = std::move(g.returns);
  }
}

Minibatch Trainer::gather(const AgentTrajectory& traj, std::span<const std::size_t> idx, bool discrete) {
  Minibatch mb;
  const std::size_t aw = traj.actor_inputs.cols();
  const std::size_t cw = traj.critic_inputs.cols();
  std::vector<double> actor, critic, values;
  actor.reserve(idx.size() * aw);
  critic.reserve(idx.size() * cw);
  for (std::size_t k : idx) {
    const double* a = traj.actor_inputs.raw() + k * aw;
    actor.insert(actor.end(), a, a + aw);
    const double* c = traj.critic_inputs.raw() + k * cw;
    critic.insert(critic.end(), c, c + cw);
    if (discrete) {
      mb.actions.push_back(traj.actions[k]);
    } else {
      const std::size_t d = traj.action_values.cols();
      const double* v = traj.action_values.raw() + k * d;
      values.insert(values.end(), v, v + d);
    }
    mb.old_log_probs.push_back(traj.log_probs[k]);
    mb.advantages.push_back(traj.advantages.at(k));
    mb.old_values.push_back(traj.values[k]);
    mb.returns.push_back(traj.returns.at(k));
  }
  mb.actor_inputs = Tensor(Shape{idx.size(), aw}, std::move(actor));
  mb.critic_inputs = Tensor(Shape{idx.size(), cw}, std::move(critic));
  if (!discrete) mb.action_values = Tensor(Shape{idx.size(), traj.action_values.cols()}, std::move(values));
  return mb;
}

UpdateMetrics Trainer::update_agent(std::size_t epoch, std::size_t agent, const AgentTrajectory& traj,
                                    std::span<const Tensor> anchors) {
  const std::size_t total = traj.log_probs.size();
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), 0);
  core::shuffle(order, batch_rng_);

  UpdateMetrics m;
  m.epoch = epoch;
  m.agent = agent;
  std::size_t batches = 0;
  const std::string actor_prefix = "actor" + std::to_string(agent) + "/";
  for (std::size_t start = 0; start < total; start += config_.minibatch) {
    const std::size_t end = std::min(total, start + config_.minibatch);
    const Minibatch mb = gather(traj, std::span(order).subspan(start, end - start), arch_.discrete());
    {
      core::Tape tape;
      ActorLoss parts;
      if (nlevel_) {
        const core::VarMap vars = policy_params_.bind(tape);
        parts = step_actor_loss(*nlevel_, vars, mb, agent, anchors, config_.clip, config_.entropy_coef, config_.beta);
      } else {
        const core::VarMap vars = policy_params_.subset(actor_prefix).bind(tape);
        const policy::HeadVars head = independent_->forward(vars, tape.constant(mb.actor_inputs), agent);
        parts = ppo_actor_loss(head, mb, arch_.discrete(), config_.clip, config_.entropy_coef);
      }
      const double loss = parts.loss.value().item();
      guard(loss, "actor", epoch, agent);
      core::Gradients grads = tape.backward(parts.loss);
      if (config_.freeze_embeddings) grads.erase(policy::NLevelPolicy::kEmbedName);
      actor_opt_[nlevel_ ? 0 : agent].step(policy_params_, grads);
      m.actor_loss += loss;
      m.surrogate += parts.surrogate.value().item();
      m.entropy += parts.entropy.value().item();
      m.lh += parts.lh.value().item();
    }
    {
      core::Tape tape;
      const core::VarMap vars = critic_params_[agent].bind(tape);
      const core::Var v = core::reshape(critics_[agent].forward(vars, tape.constant(mb.critic_inputs)),
                                        Shape{mb.size()});
      const core::Var loss = critic_loss(v, mb.old_values, mb.returns, config_.value_clip);
      guard(loss.value().item(), "critic", epoch, agent);
      critic_opt_[agent].step(critic_params_[agent], tape.backward(loss));
      m.critic_loss += loss.value().item();
    }
    ++batches;
  }
  const double inv = 1.0 / static_cast<double>(batches);
  m.actor_loss *= inv;
  m.surrogate *= inv;
  m.entropy *= inv;
  m.lh *= inv;
  m.critic_loss *= inv;
  return m;
}

std::vector<UpdateMetrics> Trainer::train_step(const TrajectoryBatch& batch) {
  if (batch.agents.size() != arch_.num_agents || batch.agents[0].advantages.empty()) {
    throw core::ContractError("train_step needs a batch with advantages for every agent");
  }
  std::vector<UpdateMetrics> rows;
  for (std::size_t epoch = 0; epoch < config_.epochs; ++epoch) {
    for (std::size_t agent = 0; agent < arch_.num_agents; ++agent) {
      // Anchor: what the hypernetwork produced for the superiors when this
      // agent's turn began.
      std::vector<Tensor> anchors;
      if (nlevel_ && config_.beta > 0.0) {
        for (std::size_t j = 0; j < agent; ++j) anchors.push_back(nlevel_->generate_target_params(policy_params_, j));
      }
      rows.push_back(update_agent(epoch, agent, batch.agents[agent], anchors));
    }
  }
  refresh_policy();
  return rows;
}

std::unique_ptr<policy::JointPolicy> Trainer::greedy_policy() const {
  if (nlevel_) return std::make_unique<policy::MaterializedPolicy>(*nlevel_, policy_params_);
  return std::make_unique<policy::IndependentJointPolicy>(*independent_, policy_params_);
}

Evaluation Trainer::evaluate(std::size_t episodes) const {
  return evaluate_policy(*greedy_policy(), *env_, episodes, eval_seed_);
}

policy::Checkpoint Trainer::checkpoint() const { return {to_string(config_.algorithm), arch_, policy_params_}; }

TrainResult Trainer::run(const std::function<void(const MetricsRow&)>& on_row) {
  TrainResult result;
  double entropy = std::numeric_limits<double>::quiet_NaN();
  double lh = std::numeric_limits<double>::quiet_NaN();
  auto record = [&] {
    MetricsRow row{steps_, evaluate(config_.eval_episodes), entropy, lh};
    if (on_row) on_row(row);
    result.metrics.push_back(std::move(row));
  };
  record();
  std::size_t next_eval = config_.eval_interval;
  while (steps_ < config_.total_steps) {
    TrajectoryBatch batch = collect_rollouts(std::min(config_.rollout, config_.total_steps - steps_));
    compute_advantages(batch);
    const std::vector<UpdateMetrics> ups = train_step(batch);
    entropy = 0.0;
    lh = 0.0;
    const std::size_t last = ups.size() - arch_.num_agents;
    for (std::size_t k = last; k < ups.size(); ++k) {
      entropy += ups[k].entropy / static_cast<double>(arch_.num_agents);
      lh += ups[k].lh / static_cast<double>(arch_.num_agents);
    }
    result.updates.insert(result.updates.end(), ups.begin(), ups.end());
    if (steps_ >= next_eval) {
      record();
      while (next_eval <= steps_) next_eval += config_.eval_interval;
    }
  }
  if (result.metrics.back().step != steps_) record();
  result.final_eval = result.metrics.back().eval;
  result.checkpoint = checkpoint();
  return result;
}

std::uint64_t evaluation_seed(std::uint64_t seed) { return core::Rng(seed).split("eval").next_u64(); }

Evaluation evaluate_policy(const policy::JointPolicy& policy, const env::Environment& environment,
                           std::size_t episodes, std::uint64_t seed) {
  const std::unique_ptr<env::Environment> env = environment.clone();
  const std::size_t n = env->num_agents();
  const auto* matrix = dynamic_cast<const env::RepeatedMatrixEnv*>(env.get());
  std::optional<GameLabels> labels;
  if (matrix) {
    const oracle::EquilibriumReport report = oracle::stackelberg_se(matrix->game());
    labels = GameLabels{report.se_path.value(), report.pure_ne};
  }
  // The greedy policy is deterministic, so a constant-observation game needs
  // one decision per distinct observation.
  std::map<std::vector<double>, std::vector<env::Action>> cache;
  std::map<oracle::JointAction, std::size_t> joint_counts;

  Evaluation ev;
  ev.episodes = episodes;
  ev.mean_step_reward.assign(n, 0.0);
  ev.mean_episode_return.assign(n, 0.0);
  std::size_t total_steps = 0, se_steps = 0, ne_steps = 0, collisions = 0;
  core::Rng seeds(seed);
  for (std::size_t ep = 0; ep < episodes; ++ep) {
    env->reset(seeds.next_u64());
    double team_return = 0.0;
    bool done = false;
    while (!done) {
      const Tensor& obs = env->state().observation;
      std::vector<env::Action> joint;
      if (matrix) {
        std::vector<double> key(obs.values().begin(), obs.values().end());
        auto it = cache.find(key);
        if (it == cache.end()) it = cache.emplace(std::move(key), policy.greedy_joint(obs)).first;
        joint = it->second;
      } else {
        joint = policy.greedy_joint(obs);
      }
      const env::StepResult r = env->step(joint);
      for (std::size_t i = 0; i < n; ++i) {
        ev.mean_step_reward[i] += r.rewards[i];
        ev.mean_episode_return[i] += r.rewards[i];
        team_return += r.rewards[i] / static_cast<double>(n);
      }
      ++total_steps;
      if (matrix) {
        std::vector<std::size_t> slots;
        for (const env::Action& a : joint) slots.push_back(a.index);
        const oracle::JointAction g = matrix->to_game_joint(slots);
        ++joint_counts[g];
        if (g == labels->se) ++se_steps;
        if (std::find(labels->ne.begin(), labels->ne.end(), g) != labels->ne.end()) ++ne_steps;
      }
      done = r.done;
      if (done) {
        const auto it = r.info.find("collision");
        if (it != r.info.end() && it->second > 0.0) ++collisions;
      }
    }
    ev.episode_returns.push_back(team_return);
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < n; ++i) {
    ev.mean_step_reward[i] = total_steps ? ev.mean_step_reward[i] / static_cast<double>(total_steps) : nan;
    ev.mean_episode_return[i] = episodes ? ev.mean_episode_return[i] / static_cast<double>(episodes) : nan;
  }
  if (matrix && total_steps) {
    ev.se_rate = static_cast<double>(se_steps) / static_cast<double>(total_steps);
    ev.ne_rate = static_cast<double>(ne_steps) / static_cast<double>(total_steps);
    std::size_t best = 0;
    for (const auto& [joint, count] : joint_counts) {
      if (count > best) {
        best = count;
        ev.modal_joint = joint;
      }
    }
  } else {
    ev.se_rate = nan;
    ev.ne_rate = nan;
  }
  ev.collision_rate = env->name() == "merge" && episodes ? static_cast<double>(collisions) / episodes : nan;
  return ev;
}

}  // namespace step::train
