#pragma once

#include "step/env/environment.hpp"

namespace step::env {

/// Cooperative continuous control: n agents cover n landmarks in the unit
/// square. Dynamics v <- clamp(v + 0.1 a, +-1), p <- clamp(p + 0.1 v, [0,1]),
/// with a velocity component zeroed when the wall clamp engages;
/// every agent receives -sum over landmarks of the distance to the nearest
/// agent. Observation: agent positions, agent velocities, landmark positions,
/// landmark-minus-agent offsets for every (agent, landmark) pair, and t/horizon.
class ParticleSpread final : public Environment {
 public:
  explicit ParticleSpread(std::size_t num_agents, std::size_t horizon = 50, double gamma = 0.99);

  std::string name() const override { return "particle"; }
  std::size_t num_agents() const override { return n_; }
  std::size_t observation_size() const override { return 6 * n_ + 2 * n_ * n_ + 1; }
  ActionSpace action_space(std::size_t) const override { return ActionSpace::box(2, -1.0, 1.0); }
  std::size_t horizon() const override { return horizon_; }
  double gamma() const override { return gamma_; }

  EnvState reset(std::uint64_t seed) override;
  StepResult step(const std::vector<Action>& joint) override;
  const EnvState& state() const override { return state_; }
  std::unique_ptr<Environment> clone() const override { return std::make_unique<ParticleSpread>(*this); }

  const std::vector<double>& positions() const { return pos_; }
  const std::vector<double>& velocities() const { return vel_; }
  const std::vector<double>& landmarks() const { return landmarks_; }

  /// Shared reward for the current configuration.
  double coverage_reward() const;

 private:
  core::Tensor observe() const;

  std::size_t n_;
  std::size_t horizon_;
  double gamma_;
  std::vector<double> pos_, vel_, landmarks_;  // interleaved (x, y)
  EnvState state_;
};

}  // namespace step::env
