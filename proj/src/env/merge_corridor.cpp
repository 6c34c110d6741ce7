#include "step/env/merge_corridor.hpp"

#include <algorithm>

namespace step::env {

MergeCorridor::MergeCorridor(std::size_t horizon, double gamma) : horizon_(horizon), gamma_(gamma) {
  if (horizon_ == 0) throw EnvError("merge corridor horizon must be positive");
  state_.observation = observe();
  state_.done = true;
}

core::Tensor MergeCorridor::observe() const {
  std::vector<double> obs;
  obs.reserve(7);
  for (std::size_t i = 0; i < 2; ++i) {
    obs.push_back(static_cast<double>(positions_[i]) / kLength);
    obs.push_back(static_cast<double>(speeds_[i]) / kMaxSpeed);
    obs.push_back(finished_[i] ? 1.0 : 0.0);
  }
  obs.push_back(static_cast<double>(state_.t) / static_cast<double>(horizon_));
  return core::Tensor::vector(std::move(obs));
}

EnvState MergeCorridor::reset(std::uint64_t seed) {
  core::Rng rng = core::Rng(seed).split("merge-start");
  for (std::size_t i = 0; i < 2; ++i) {
    positions_[i] = 6 + rng.index(2);
    speeds_[i] = 1;
    finished_[i] = false;
  }
  state_.t = 0;
  state_.done = false;
  state_.observation = observe();
  return state_;
}

void MergeCorridor::set_configuration(std::array<std::size_t, 2> positions, std::array<std::size_t, 2> speeds) {
  for (std::size_t i = 0; i < 2; ++i) {
    if (positions[i] >= kLength || speeds[i] > kMaxSpeed) throw EnvError("invalid merge configuration");
    finished_[i] = false;
  }
  positions_ = positions;
  speeds_ = speeds;
  state_.observation = observe();
}

StepResult MergeCorridor::step(const std::vector<Action>& joint) {
  if (state_.done) throw EnvError("step called on a finished episode; reset first");
  validate_joint_action(*this, joint);

  StepResult result;
  result.rewards.assign(2, 0.0);
  const std::array<std::size_t, 2> before = positions_;
  const std::array<bool, 2> was_active{!finished_[0], !finished_[1]};
  for (std::size_t i = 0; i < 2; ++i) {
    if (!was_active[i]) continue;
    const long next = static_cast<long>(speeds_[i]) + static_cast<long>(joint[i].index) - 1;
    speeds_[i] = static_cast<std::size_t>(std::clamp(next, 0L, static_cast<long>(kMaxSpeed)));
    positions_[i] = std::min(positions_[i] + speeds_[i], kLength);
    result.rewards[i] = kSpeedReward * static_cast<double>(speeds_[i]);
  }

  bool collision = false;
  if (was_active[0] && was_active[1]) {
    const bool merged = std::min(positions_[0], positions_[1]) >= kMergeCell;
    const bool same_cell = positions_[0] == positions_[1] && positions_[0] >= kMergeCell;
    const bool crossed = merged && ((before[0] < before[1] && positions_[0] > positions_[1]) ||
                                    (before[0] > before[1] && positions_[0] < positions_[1]));
    collision = same_cell || crossed;
  }

  ++state_.t;
  if (collision) {
    result.rewards.assign(2, kCollisionReward);
    result.info["collision"] = 1.0;
    state_.done = true;
  } else {
    for (std::size_t i = 0; i < 2; ++i) {
      if (was_active[i] && positions_[i] >= kLength) {
        finished_[i] = true;
        result.rewards[i] += kGoalReward;
      }
    }
    result.info["collision"] = 0.0;
    state_.done = (finished_[0] && finished_[1]) || state_.t >= horizon_;
  }
  result.info["finished"] = static_cast<double>(finished_[0]) + static_cast<double>(finished_[1]);
  state_.observation = observe();
  result.next = state_;
  result.done = state_.done;
  return result;
}

}  // namespace step::env
