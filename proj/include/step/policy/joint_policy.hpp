#pragma once

#include <vector>

#include "step/core/rng.hpp"
#include "step/core/tensor.hpp"
#include "step/env/environment.hpp"

namespace step::policy {

/// Greedy joint behaviour used for evaluation and reporting.
class JointPolicy {
 public:
  virtual ~JointPolicy() = default;
  /// Deterministic joint action for a global observation; box actions are
  /// already clamped into the action bounds.
  virtual std::vector<env::Action> greedy_joint(const core::Tensor& observation) const = 0;
};

/// Uniformly random actions, for reference returns. Not thread-safe.
class RandomJointPolicy final : public JointPolicy {
 public:
  RandomJointPolicy(std::size_t num_agents, env::ActionSpace space, std::uint64_t seed)
      : n_(num_agents), space_(space), rng_(seed) {}

  std::vector<env::Action> greedy_joint(const core::Tensor&) const override {
    std::vector<env::Action> joint;
    for (std::size_t i = 0; i < n_; ++i) {
      if (space_.is_discrete()) {
        joint.push_back(env::Action::discrete(rng_.index(space_.size)));
      } else {
        std::vector<double> v(space_.size);
        for (double& x : v) x = rng_.uniform(space_.low, space_.high);
        joint.push_back(env::Action::continuous(std::move(v)));
      }
    }
    return joint;
  }

 private:
  std::size_t n_;
  env::ActionSpace space_;
  mutable core::Rng rng_;
};

}  // namespace step::policy
