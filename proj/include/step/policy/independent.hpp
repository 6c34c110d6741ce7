#pragma once

#include <map>
#include <string>
#include <vector>

#include "step/core/distributions.hpp"
#include "step/core/mlp.hpp"
#include "step/policy/arch.hpp"
#include "step/policy/joint_policy.hpp"
#include "step/policy/nlevel.hpp"

namespace step::policy {

/// One separate actor per agent on the raw observation, as used by the
/// simultaneous-move baselines. Agent i owns `actor<i>/...` (and
/// `actor<i>/log_std` for box actions).
class IndependentPolicies {
 public:
  explicit IndependentPolicies(PolicyArch arch);

  const PolicyArch& arch() const { return arch_; }
  const core::Mlp& actor(std::size_t agent) const { return actors_.at(agent); }
  std::string log_std_name(std::size_t agent) const;

  core::ParamSet init(core::Rng& rng) const;
  std::map<std::string, core::Shape> parameter_shapes() const;
  void check(const core::ParamSet& params) const;

  core::Tensor head(const core::ParamSet& params, const core::Tensor& observations, std::size_t agent) const;
  core::ActionDistribution distribution(const core::ParamSet& params, const core::Tensor& observation,
                                        std::size_t agent) const;
  HeadVars forward(const core::VarMap& vars, const core::Var& observations, std::size_t agent) const;

 private:
  PolicyArch arch_;
  std::vector<core::Mlp> actors_;
};

class IndependentJointPolicy final : public JointPolicy {
 public:
  IndependentJointPolicy(IndependentPolicies model, core::ParamSet params);
  std::vector<env::Action> greedy_joint(const core::Tensor& observation) const override;

 private:
  IndependentPolicies model_;
  core::ParamSet params_;
};

}  // namespace step::policy
