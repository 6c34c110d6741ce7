#include "step/env/environment.hpp"

#include <cmath>

namespace step::env {

void validate_joint_action(const Environment& env, const std::vector<Action>& joint) {
  if (joint.size() != env.num_agents()) {
    throw EnvError("joint action has " + std::to_string(joint.size()) + " entries for " +
                   std::to_string(env.num_agents()) + " agents");
  }
  for (std::size_t i = 0; i < joint.size(); ++i) {
    const ActionSpace space = env.action_space(i);
    const std::string who = "agent " + std::to_string(i + 1);
    if (space.is_discrete()) {
      if (joint[i].index >= space.size) {
        throw EnvError(who + ": action " + std::to_string(joint[i].index) + " outside discrete space of size " +
                       std::to_string(space.size));
      }
      continue;
    }
    if (joint[i].values.size() != space.size) {
      throw EnvError(who + ": action has dimension " + std::to_string(joint[i].values.size()) + ", expected " +
                     std::to_string(space.size));
    }
    for (double v : joint[i].values) {
      if (!std::isfinite(v) || v < space.low || v > space.high) {
        throw EnvError(who + ": action component " + std::to_string(v) + " outside [" + std::to_string(space.low) +
                       ", " + std::to_string(space.high) + "]");
      }
    }
  }
}

}  // namespace step::env
