#include "step/core/adam.hpp"

#include <cmath>

#include "step/core/errors.hpp"

namespace step::core {

double global_norm(const Gradients& grads) {
  double sq = 0.0;
  for (const auto& [name, g] : grads)
    for (double v : g.values()) sq += v * v;
  return std::sqrt(sq);
}

void Adam::step(ParamSet& params, const Gradients& grads) {
  const std::uint64_t step = steps_ + 1;
  for (const auto& [name, g] : grads) {
    if (!g.all_finite()) {
      throw NonFiniteError("Adam step " + std::to_string(step) + ": non-finite gradient for leaf '" + name + "'");
    }
    if (params.at(name).shape() != g.shape()) {
      throw DimensionError("Adam: gradient for '" + name + "' has shape " + shape_string(g.shape()) +
                           ", parameter has " + shape_string(params.at(name).shape()));
    }
  }

  double clip = 1.0;
  if (config_.max_grad_norm > 0.0) {
    const double norm = global_norm(grads);
    if (norm > config_.max_grad_norm) clip = config_.max_grad_norm / norm;
  }

  steps_ = step;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(step));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(step));

  const double lr = config_.learning_rate;
  const double eps = config_.epsilon;
  const double inv1 = 1.0 / correction1;
  const double inv2 = 1.0 / correction2;
  for (const auto& [name, g] : grads) {
    Tensor& p = params.at(name);
    auto [m_it, m_new] = first_.try_emplace(name, g.shape());
    auto [v_it, v_new] = second_.try_emplace(name, g.shape());
    double* pp = p.raw();
    double* mp = m_it->second.raw();
    double* vp = v_it->second.raw();
    const double* gp = g.raw();
    const std::size_t n = p.size();
    for (std::size_t i = 0; i < n; ++i) {
      const double gi = gp[i] * clip;
      mp[i] = b1 * mp[i] + (1.0 - b1) * gi;
      vp[i] = b2 * vp[i] + (1.0 - b2) * gi * gi;
      pp[i] -= lr * (mp[i] * inv1) / (std::sqrt(vp[i] * inv2) + eps);
    }
  }
}

}  // namespace step::core
