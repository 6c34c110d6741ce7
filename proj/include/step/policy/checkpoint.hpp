#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "step/core/params.hpp"
#include "step/policy/arch.hpp"
#include "step/policy/joint_policy.hpp"

namespace step::policy {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Policy parameters plus the architecture needed to rebuild them.
/// `kind` is the training algorithm: step, ippo or central-critic.
struct Checkpoint {
  std::string kind = "step";
  PolicyArch arch;
  core::ParamSet params;
};

/// Plain-text format, version 1: an architecture header followed by every
/// tensor's name, shape and values printed with 17 significant digits, so a
/// save/load round trip is exact.
std::string format_checkpoint(const Checkpoint& checkpoint);
Checkpoint parse_checkpoint(const std::string& text);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Greedy executor for a checkpoint of either policy family.
std::unique_ptr<JointPolicy> make_joint_policy(const Checkpoint& checkpoint);

}  // namespace step::policy
