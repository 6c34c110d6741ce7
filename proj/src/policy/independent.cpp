#include "step/policy/independent.hpp"

#include "step/core/errors.hpp"
#include "step/core/ops.hpp"

namespace step::policy {

using core::Shape;
using core::Tensor;

IndependentPolicies::IndependentPolicies(PolicyArch arch) : arch_(arch) {
  arch_.validate();
  for (std::size_t i = 0; i < arch_.num_agents; ++i) {
    actors_.emplace_back("actor" + std::to_string(i),
                         std::vector<std::size_t>{arch_.obs_size, arch_.state_hidden, arch_.state_hidden,
                                                  arch_.head_width()});
  }
}

std::string IndependentPolicies::log_std_name(std::size_t agent) const {
  return "actor" + std::to_string(agent) + "/log_std";
}

core::ParamSet IndependentPolicies::init(core::Rng& rng) const {
  core::ParamSet params;
  for (std::size_t i = 0; i < actors_.size(); ++i) {
    core::Rng r = rng.split(i);
    actors_[i].init(params, r, 0.01);
    if (!arch_.discrete()) params.set(log_std_name(i), Tensor(Shape{arch_.head_width()}));
  }
  return params;
}

std::map<std::string, Shape> IndependentPolicies::parameter_shapes() const {
  std::map<std::string, Shape> shapes;
  for (std::size_t i = 0; i < actors_.size(); ++i) {
    const auto& w = actors_[i].widths();
    for (std::size_t k = 0; k + 1 < w.size(); ++k) {
      shapes[actors_[i].weight_name(k)] = Shape{w[k], w[k + 1]};
      shapes[actors_[i].bias_name(k)] = Shape{w[k + 1]};
    }
    if (!arch_.discrete()) shapes[log_std_name(i)] = Shape{arch_.head_width()};
  }
  return shapes;
}

void IndependentPolicies::check(const core::ParamSet& params) const {
  const auto shapes = parameter_shapes();
  if (params.size() != shapes.size()) throw core::ContractError("independent policy parameter set has the wrong size");
  for (const auto& [name, shape] : shapes) {
    if (!params.contains(name) || params.at(name).shape() != shape) {
      throw core::ContractError("independent policy parameter '" + name + "' missing or misshapen");
    }
  }
}

Tensor IndependentPolicies::head(const core::ParamSet& params, const Tensor& observations, std::size_t agent) const {
  return actors_.at(agent).forward(params, observations);
}

core::ActionDistribution IndependentPolicies::distribution(const core::ParamSet& params, const Tensor& observation,
                                                           std::size_t agent) const {
  const Tensor out = head(params, observation.reshaped(Shape{1, arch_.obs_size}), agent);
  std::vector<double> values(out.values().begin(), out.values().end());
  if (arch_.discrete()) return core::Categorical(std::move(values));
  const auto& ls = params.at(log_std_name(agent)).values();
  return core::DiagGaussian(std::move(values), std::vector<double>(ls.begin(), ls.end()));
}

HeadVars IndependentPolicies::forward(const core::VarMap& vars, const core::Var& observations,
                                      std::size_t agent) const {
  HeadVars head{actors_.at(agent).forward(vars, observations), {}};
  if (!arch_.discrete()) head.log_std = vars.at(log_std_name(agent));
  return head;
}

IndependentJointPolicy::IndependentJointPolicy(IndependentPolicies model, core::ParamSet params)
    : model_(std::move(model)), params_(std::move(params)) {
  model_.check(params_);
}

std::vector<env::Action> IndependentJointPolicy::greedy_joint(const Tensor& observation) const {
  std::vector<env::Action> joint;
  const PolicyArch& arch = model_.arch();
  for (std::size_t i = 0; i < arch.num_agents; ++i) {
    const core::SampledAction s = core::dist_mode(model_.distribution(params_, observation, i));
    joint.push_back(executable_action(
        arch, arch.discrete() ? env::Action::discrete(s.index) : env::Action::continuous(s.values)));
  }
  return joint;
}

}  // namespace step::policy
