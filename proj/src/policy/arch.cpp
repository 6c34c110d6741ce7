#include "step/policy/arch.hpp"

#include <algorithm>
#include <sstream>

#include "step/core/errors.hpp"

namespace step::policy {

using core::ContractError;

std::size_t PolicyArch::target_param_count() const { return TargetLayout(*this).total; }

void PolicyArch::validate() const {
  if (num_agents == 0 || num_agents > max_agents) {
    throw ContractError("policy needs 1 <= num_agents <= max_agents, got " + std::to_string(num_agents) + " and " +
                        std::to_string(max_agents));
  }
  if (obs_size == 0 || action.size == 0) throw ContractError("policy observation and action sizes must be positive");
  if (embed_dim == 0 || state_hidden == 0 || hyper_hidden == 0 || target_hidden == 0) {
    throw ContractError("policy layer widths must be positive");
  }
}

PolicyArch PolicyArch::for_env(const env::Environment& env, std::size_t max_agents) {
  PolicyArch arch;
  arch.obs_size = env.observation_size();
  arch.num_agents = env.num_agents();
  arch.max_agents = max_agents;
  arch.action = env.action_space(0);
  for (std::size_t i = 1; i < env.num_agents(); ++i) {
    if (!(env.action_space(i) == arch.action)) {
      throw ContractError("a shared policy needs identical action spaces for every agent");
    }
  }
  arch.validate();
  return arch;
}

TargetLayout::TargetLayout(const PolicyArch& arch) {
  const std::size_t in = arch.state_hidden;
  const std::size_t hidden = arch.target_hidden;
  const std::size_t out = arch.head_width();
  w1 = 0;
  b1 = w1 + in * hidden;
  w2 = b1 + hidden;
  b2 = w2 + hidden * out;
  log_std = b2 + out;
  total = log_std + (arch.discrete() ? 0 : out);
}

core::Tensor encode_subgame(const PolicyArch& arch, const core::Tensor& observation, std::size_t agent,
                            std::span<const env::Action> superiors) {
  if (observation.size() != arch.obs_size) {
    throw core::DimensionError("subgame observation has " + std::to_string(observation.size()) + " values, expected " +
                               std::to_string(arch.obs_size));
  }
  if (agent >= arch.num_agents) throw ContractError("agent " + std::to_string(agent + 1) + " outside the team");
  if (superiors.size() != agent) {
    throw ContractError("agent " + std::to_string(agent + 1) + " needs " + std::to_string(agent) +
                        " superior actions, got " + std::to_string(superiors.size()));
  }
  std::vector<double> row(arch.input_width(), 0.0);
  std::copy(observation.values().begin(), observation.values().end(), row.begin());
  const std::size_t width = arch.slot_width();
  for (std::size_t j = 0; j < agent; ++j) {
    double* slot = row.data() + arch.obs_size + j * width;
    if (arch.discrete()) {
      if (superiors[j].index >= width) throw ContractError("superior action index out of range");
      slot[superiors[j].index] = 1.0;
    } else {
      if (superiors[j].values.size() != width) throw ContractError("superior action has the wrong dimension");
      std::copy(superiors[j].values.begin(), superiors[j].values.end(), slot);
    }
  }
  row[arch.obs_size + (arch.max_agents - 1) * width + agent] = 1.0;
  return core::Tensor(core::Shape{1, arch.input_width()}, std::move(row));
}

void validate_subgame(const PolicyArch& arch, std::span<const double> row, std::size_t agent) {
  if (row.size() != arch.input_width()) {
    throw core::DimensionError("subgame row has width " + std::to_string(row.size()) + ", expected " +
                               std::to_string(arch.input_width()));
  }
  const std::size_t width = arch.slot_width();
  for (std::size_t j = agent; j + 1 < arch.max_agents; ++j) {
    for (std::size_t c = 0; c < width; ++c) {
      if (row[arch.obs_size + j * width + c] != 0.0) {
        throw ContractError("subgame for agent " + std::to_string(agent + 1) + " has a nonzero slot " +
                            std::to_string(j + 1));
      }
    }
  }
  const std::size_t onehot = arch.obs_size + (arch.max_agents - 1) * width;
  for (std::size_t k = 0; k < arch.max_agents; ++k) {
    if (row[onehot + k] != (k == agent ? 1.0 : 0.0)) {
      throw ContractError("subgame priority one-hot does not mark agent " + std::to_string(agent + 1));
    }
  }
}

env::Action executable_action(const PolicyArch& arch, const env::Action& action) {
  if (arch.discrete()) return action;
  env::Action out = action;
  for (double& v : out.values) v = std::clamp(v, arch.action.low, arch.action.high);
  return out;
}

std::string describe(const PolicyArch& arch) {
  std::ostringstream os;
  os << "obs=" << arch.obs_size << " agents=" << arch.num_agents << "/" << arch.max_agents << " action="
     << (arch.discrete() ? "discrete(" : "box(") << arch.action.size << ") target_params="
     << arch.target_param_count();
  return os.str();
}

}  // namespace step::policy
