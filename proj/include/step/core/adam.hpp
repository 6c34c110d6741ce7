#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "step/core/params.hpp"

namespace step::core {

struct AdamConfig {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Rescale the joint gradient to this global L2 norm when exceeded; 0 disables.
  double max_grad_norm = 0.0;
};

/// Adaptive-moment optimizer with bias correction.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  /// Updates every parameter named in `grads`. Names absent from `params`
  /// and non-finite gradients are errors; the latter name the leaf and step.
  void step(ParamSet& params, const Gradients& grads);

  std::uint64_t step_count() const { return steps_; }
  const AdamConfig& config() const { return config_; }
  void set_learning_rate(double lr) { config_.learning_rate = lr; }

  const Tensor& first_moment(const std::string& name) const { return first_.at(name); }
  const Tensor& second_moment(const std::string& name) const { return second_.at(name); }

 private:
  AdamConfig config_;
  std::uint64_t steps_ = 0;
  std::map<std::string, Tensor> first_;
  std::map<std::string, Tensor> second_;
};

/// Global L2 norm over all gradient tensors.
double global_norm(const Gradients& grads);

}  // namespace step::core
