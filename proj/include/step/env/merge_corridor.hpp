#pragma once

#include <array>

#include "step/core/rng.hpp"
#include "step/env/environment.hpp"

namespace step::env {

/// Two single-file lanes of 12 cells that merge at cell 8; the exit is cell 12.
///
/// Each agent holds a speed in {0,1,2} that its action changes by -1/0/+1
/// (decelerate/keep/accelerate), then advances by that speed. Per tick an
/// active agent earns 0.1 * speed, plus 5 on reaching the exit. Both agents
/// take -10 and the episode ends when, while both are active, they land on
/// the same cell at or past the merge (the exit included) or swap order
/// inside the merged section. Starts are drawn from cells {6,7} at speed 1.
class MergeCorridor final : public Environment {
 public:
  static constexpr std::size_t kLength = 12;
  static constexpr std::size_t kMergeCell = 8;
  static constexpr std::size_t kMaxSpeed = 2;
  static constexpr double kSpeedReward = 0.1;
  static constexpr double kGoalReward = 5.0;
  static constexpr double kCollisionReward = -10.0;

  explicit MergeCorridor(std::size_t horizon = 40, double gamma = 0.99);

  std::string name() const override { return "merge"; }
  std::size_t num_agents() const override { return 2; }
  std::size_t observation_size() const override { return 7; }
  ActionSpace action_space(std::size_t) const override { return ActionSpace::discrete(3); }
  std::size_t horizon() const override { return horizon_; }
  double gamma() const override { return gamma_; }

  EnvState reset(std::uint64_t seed) override;
  StepResult step(const std::vector<Action>& joint) override;
  const EnvState& state() const override { return state_; }
  std::unique_ptr<Environment> clone() const override { return std::make_unique<MergeCorridor>(*this); }

  std::array<std::size_t, 2> positions() const { return positions_; }
  std::array<std::size_t, 2> speeds() const { return speeds_; }

  /// Places the agents directly; for tests.
  void set_configuration(std::array<std::size_t, 2> positions, std::array<std::size_t, 2> speeds);

 private:
  core::Tensor observe() const;

  std::size_t horizon_;
  double gamma_;
  std::array<std::size_t, 2> positions_{};
  std::array<std::size_t, 2> speeds_{};
  std::array<bool, 2> finished_{};
  EnvState state_;
};

}  // namespace step::env
