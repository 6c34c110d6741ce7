#pragma once

#include "step/env/environment.hpp"
#include "step/oracle/matrix_game.hpp"

namespace step::env {

/// A normal-form game played repeatedly for `horizon` steps with a constant
/// bias observation [1]. Agent slot i is the game agent `ordering()[i]`, so
/// slot 0 is always the Stackelberg leader; rewards are reported per slot.
class RepeatedMatrixEnv final : public Environment {
 public:
  explicit RepeatedMatrixEnv(oracle::MatrixGame game, std::size_t horizon = 25, double gamma = 0.95);

  std::string name() const override { return "matrix"; }
  std::size_t num_agents() const override { return game_.num_agents(); }
  std::size_t observation_size() const override { return 1; }
  ActionSpace action_space(std::size_t agent) const override;
  std::size_t horizon() const override { return horizon_; }
  double gamma() const override { return gamma_; }

  EnvState reset(std::uint64_t seed) override;
  StepResult step(const std::vector<Action>& joint) override;
  const EnvState& state() const override { return state_; }
  std::unique_ptr<Environment> clone() const override { return std::make_unique<RepeatedMatrixEnv>(*this); }

  const oracle::MatrixGame& game() const { return game_; }
  /// Slot-ordered actions to a game joint action indexed by game agent id.
  oracle::JointAction to_game_joint(const std::vector<std::size_t>& slot_actions) const;
  /// Game joint action to slot order.
  std::vector<std::size_t> to_slot_order(const oracle::JointAction& game_joint) const;

 private:
  oracle::MatrixGame game_;
  std::size_t horizon_;
  double gamma_;
  EnvState state_;
};

}  // namespace step::env
