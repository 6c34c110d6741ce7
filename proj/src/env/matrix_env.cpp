#include "step/env/matrix_env.hpp"

namespace step::env {

RepeatedMatrixEnv::RepeatedMatrixEnv(oracle::MatrixGame game, std::size_t horizon, double gamma)
    : game_(std::move(game)), horizon_(horizon), gamma_(gamma) {
  if (horizon_ == 0) throw EnvError("matrix env horizon must be positive");
  state_.observation = core::Tensor::vector({1.0});
  state_.done = true;
}

ActionSpace RepeatedMatrixEnv::action_space(std::size_t agent) const {
  return ActionSpace::discrete(game_.action_count(game_.ordering().at(agent)));
}

EnvState RepeatedMatrixEnv::reset(std::uint64_t /*seed*/) {
  state_ = EnvState{core::Tensor::vector({1.0}), 0, false};
  return state_;
}

oracle::JointAction RepeatedMatrixEnv::to_game_joint(const std::vector<std::size_t>& slot_actions) const {
  oracle::JointAction joint(game_.num_agents());
  for (std::size_t slot = 0; slot < slot_actions.size(); ++slot) joint[game_.ordering()[slot]] = slot_actions[slot];
  return joint;
}

std::vector<std::size_t> RepeatedMatrixEnv::to_slot_order(const oracle::JointAction& game_joint) const {
  std::vector<std::size_t> slots(game_.num_agents());
  for (std::size_t slot = 0; slot < slots.size(); ++slot) slots[slot] = game_joint[game_.ordering()[slot]];
  return slots;
}

StepResult RepeatedMatrixEnv::step(const std::vector<Action>& joint) {
  if (state_.done) throw EnvError("step called on a finished episode; reset first");
  validate_joint_action(*this, joint);
  std::vector<std::size_t> slot_actions(joint.size());
  for (std::size_t i = 0; i < joint.size(); ++i) slot_actions[i] = joint[i].index;
  const std::vector<double> payoffs = game_.payoffs(to_game_joint(slot_actions));

  StepResult result;
  result.rewards.resize(num_agents());
  for (std::size_t slot = 0; slot < num_agents(); ++slot) result.rewards[slot] = payoffs[game_.ordering()[slot]];
  ++state_.t;
  state_.done = state_.t >= horizon_;
  result.next = state_;
  result.done = state_.done;
  return result;
}

}  // namespace step::env
