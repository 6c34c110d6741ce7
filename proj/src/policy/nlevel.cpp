#include "step/policy/nlevel.hpp"

#include <algorithm>

#include "step/core/errors.hpp"
#include "step/core/kernels.hpp"
#include "step/core/ops.hpp"

namespace step::policy {

using core::ContractError;
using core::Shape;
using core::Tensor;
using core::Var;

namespace {

Tensor copy_segment(const Tensor& flat, std::size_t offset, Shape shape) {
  const std::size_t n = core::shape_size(shape);
  std::vector<double> values(flat.values().begin() + static_cast<std::ptrdiff_t>(offset),
                             flat.values().begin() + static_cast<std::ptrdiff_t>(offset + n));
  return Tensor(std::move(shape), std::move(values));
}

}  // namespace

NLevelPolicy::NLevelPolicy(PolicyArch arch)
    : arch_(arch),
      state_("state", {arch.input_width(), arch.state_hidden, arch.state_hidden}, core::Activation::kTanh),
      hyper_("hyper", {arch.embed_dim, arch.hyper_hidden, arch.target_param_count()}) {
  arch_.validate();
}

core::ParamSet NLevelPolicy::init(core::Rng& rng) const {
  core::ParamSet params;
  core::Rng state_rng = rng.split("state");
  core::Rng hyper_rng = rng.split("hyper");
  core::Rng target_rng = rng.split("target-bias");
  core::Rng embed_rng = rng.split("embed");

  state_.init(params, state_rng);
  hyper_.init(params, hyper_rng, arch_.hyper_init_scale);

  const TargetLayout layout(arch_);
  Tensor& bias = params.at(hyper_.bias_name(1));
  const double bound1 = core::glorot_bound(arch_.state_hidden, arch_.target_hidden);
  for (std::size_t k = layout.w1; k < layout.b1; ++k) bias[k] = target_rng.uniform(-bound1, bound1);
  const double bound2 = 0.01 * core::glorot_bound(arch_.target_hidden, arch_.head_width());
  for (std::size_t k = layout.w2; k < layout.b2; ++k) bias[k] = target_rng.uniform(-bound2, bound2);

  Tensor table(Shape{arch_.num_agents, arch_.embed_dim});
  for (double& v : table.values()) v = embed_rng.normal();
  params.set(kEmbedName, std::move(table));
  return params;
}

std::map<std::string, Shape> NLevelPolicy::parameter_shapes() const {
  std::map<std::string, Shape> shapes;
  for (const core::Mlp* mlp : {&state_, &hyper_}) {
    const auto& w = mlp->widths();
    for (std::size_t k = 0; k + 1 < w.size(); ++k) {
      shapes[mlp->weight_name(k)] = Shape{w[k], w[k + 1]};
      shapes[mlp->bias_name(k)] = Shape{w[k + 1]};
    }
  }
  shapes[kEmbedName] = Shape{arch_.num_agents, arch_.embed_dim};
  return shapes;
}

std::size_t NLevelPolicy::parameter_count() const {
  std::size_t total = 0;
  for (const auto& [name, shape] : parameter_shapes()) total += core::shape_size(shape);
  return total;
}

void NLevelPolicy::check(const core::ParamSet& params) const {
  const auto shapes = parameter_shapes();
  if (params.size() != shapes.size()) {
    throw ContractError("policy parameters have " + std::to_string(params.size()) + " tensors, expected " +
                        std::to_string(shapes.size()));
  }
  for (const auto& [name, shape] : shapes) {
    if (!params.contains(name)) throw ContractError("policy parameters lack '" + name + "'");
    if (params.at(name).shape() != shape) {
      throw ContractError("policy parameter '" + name + "' has shape " + core::shape_string(params.at(name).shape()) +
                          ", expected " + core::shape_string(shape));
    }
  }
}

Tensor NLevelPolicy::embed_state(const core::ParamSet& params, const Tensor& rows) const {
  return state_.forward(params, rows);
}

Tensor NLevelPolicy::priority_embedding(const core::ParamSet& params, std::size_t agent) const {
  if (agent >= arch_.num_agents) throw ContractError("no priority embedding for agent " + std::to_string(agent + 1));
  return copy_segment(params.at(kEmbedName), agent * arch_.embed_dim, Shape{1, arch_.embed_dim});
}

Tensor NLevelPolicy::generate_target_params(const core::ParamSet& params, const Tensor& embedding) const {
  return hyper_.forward(params, embedding.reshaped(Shape{1, arch_.embed_dim}));
}

Tensor NLevelPolicy::generate_target_params(const core::ParamSet& params, std::size_t agent) const {
  return generate_target_params(params, priority_embedding(params, agent));
}

MaterializedPolicy NLevelPolicy::materialize(const core::ParamSet& params) const {
  return MaterializedPolicy(*this, params);
}

Var NLevelPolicy::generate_target_params(const core::VarMap& vars, std::size_t agent) const {
  if (agent >= arch_.num_agents) throw ContractError("no priority embedding for agent " + std::to_string(agent + 1));
  const Var e = core::slice(vars.at(kEmbedName), agent * arch_.embed_dim, Shape{1, arch_.embed_dim});
  return hyper_.forward(vars, e);
}

HeadVars NLevelPolicy::apply_target(const Var& embedded, const Var& target) const {
  const TargetLayout l(arch_);
  const std::size_t hidden = arch_.target_hidden;
  const std::size_t out = arch_.head_width();
  const Var w1 = core::slice(target, l.w1, Shape{arch_.state_hidden, hidden});
  const Var b1 = core::slice(target, l.b1, Shape{hidden});
  const Var w2 = core::slice(target, l.w2, Shape{hidden, out});
  const Var b2 = core::slice(target, l.b2, Shape{out});
  const Var h = core::tanh(core::add_row(core::matmul(embedded, w1), b1));
  HeadVars head{core::add_row(core::matmul(h, w2), b2), {}};
  if (!arch_.discrete()) head.log_std = core::slice(target, l.log_std, Shape{out});
  return head;
}

HeadVars NLevelPolicy::forward(const core::VarMap& vars, const Var& rows, std::size_t agent) const {
  return apply_target(state_.forward(vars, rows), generate_target_params(vars, agent));
}

MaterializedPolicy::MaterializedPolicy(const NLevelPolicy& model, const core::ParamSet& params)
    : arch_(model.arch()), state_params_(params.subset("state/")), state_(model.state_mlp()) {
  model.check(params);
  const TargetLayout l(arch_);
  const std::size_t hidden = arch_.target_hidden;
  const std::size_t out = arch_.head_width();
  for (std::size_t i = 0; i < arch_.num_agents; ++i) {
    const Tensor target = model.generate_target_params(params, i);
    w1_.push_back(copy_segment(target, l.w1, Shape{arch_.state_hidden, hidden}));
    b1_.push_back(copy_segment(target, l.b1, Shape{hidden}));
    w2_.push_back(copy_segment(target, l.w2, Shape{hidden, out}));
    b2_.push_back(copy_segment(target, l.b2, Shape{out}));
    log_std_.push_back(arch_.discrete() ? Tensor() : copy_segment(target, l.log_std, Shape{out}));
  }
}

Tensor MaterializedPolicy::head(const Tensor& rows, std::size_t agent) const {
  if (agent >= arch_.num_agents) throw ContractError("agent " + std::to_string(agent + 1) + " outside the team");
  const Tensor embedded = state_.forward(state_params_, rows);
  namespace k = core::kernel;
  const Tensor h = k::tanh(k::add_row(k::matmul(embedded, w1_[agent]), b1_[agent]));
  Tensor out = k::add_row(k::matmul(h, w2_[agent]), b2_[agent]);
  core::require_finite(out, "policy head");
  return out;
}

core::ActionDistribution MaterializedPolicy::distribution(const Tensor& row, std::size_t agent) const {
  if (row.rows() != 1) throw core::DimensionError("distribution expects a single subgame row");
  validate_subgame(arch_, row.values(), agent);
  const Tensor out = head(row, agent);
  std::vector<double> values(out.values().begin(), out.values().end());
  if (arch_.discrete()) return core::Categorical(std::move(values));
  const auto& ls = log_std_[agent].values();
  return core::DiagGaussian(std::move(values), std::vector<double>(ls.begin(), ls.end()));
}

namespace {

env::Action to_action(const core::SampledAction& s, bool discrete) {
  return discrete ? env::Action::discrete(s.index) : env::Action::continuous(s.values);
}

}  // namespace

ActSample MaterializedPolicy::act_stochastic(const Tensor& row, std::size_t agent, core::Rng& rng) const {
  core::ActionDistribution dist = distribution(row, agent);
  const core::SampledAction s = core::dist_sample(dist, rng);
  const double lp = core::dist_log_prob(dist, s);
  return {to_action(s, arch_.discrete()), lp, std::move(dist)};
}

env::Action MaterializedPolicy::act_deterministic(const Tensor& row, std::size_t agent) const {
  return to_action(core::dist_mode(distribution(row, agent)), arch_.discrete());
}

MaterializedPolicy::Execution MaterializedPolicy::symmetric_execute(const Tensor& observation) const {
  Execution result;
  for (std::size_t i = 0; i < arch_.num_agents; ++i) {
    // Agent i works from the shared model alone.
    std::vector<env::Action> superiors;
    for (std::size_t j = 0; j < i; ++j) {
      const env::Action a = act_deterministic(encode_subgame(arch_, observation, j, superiors), j);
      superiors.push_back(executable_action(arch_, a));
    }
    const env::Action own = act_deterministic(encode_subgame(arch_, observation, i, superiors), i);
    result.joint.push_back(executable_action(arch_, own));
    result.recomputed.push_back(std::move(superiors));
  }
  return result;
}

std::vector<env::Action> MaterializedPolicy::sequential_execute(const Tensor& observation) const {
  std::vector<env::Action> joint;
  for (std::size_t i = 0; i < arch_.num_agents; ++i) {
    const env::Action a = act_deterministic(encode_subgame(arch_, observation, i, joint), i);
    joint.push_back(executable_action(arch_, a));
  }
  return joint;
}

}  // namespace step::policy
