#include "step/train/gae.hpp"

#include <algorithm>
#include <cmath>

#include "step/core/errors.hpp"

namespace step::train {

GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      std::span<const std::uint8_t> dones, double bootstrap, double gamma, double lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n || dones.size() != n) {
    throw core::DimensionError("compute_gae: rewards, values and dones must have equal length");
  }
  GaeResult out;
  out.raw_advantages.assign(n, 0.0);
  double next_adv = 0.0;
  double next_value = bootstrap;
  for (std::size_t k = n; k-- > 0;) {
    const double live = dones[k] ? 0.0 : 1.0;
    const double delta = rewards[k] + gamma * live * next_value - values[k];
    next_adv = delta + gamma * lambda * live * next_adv;
    out.raw_advantages[k] = next_adv;
    next_value = values[k];
  }
  out.returns.resize(n);
  for (std::size_t k = 0; k < n; ++k) out.returns[k] = out.raw_advantages[k] + values[k];
  out.advantages = normalize_advantages(out.raw_advantages);
  return out;
}

std::vector<double> normalize_advantages(std::span<const double> advantages) {
  const std::size_t n = advantages.size();
  std::vector<double> out(advantages.begin(), advantages.end());
  if (n == 0) return out;
  double mean = 0.0;
  for (double a : advantages) mean += a;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double a : advantages) var += (a - mean) * (a - mean);
  const double sd = std::max(std::sqrt(var / static_cast<double>(n)), 1e-8);
  for (double& a : out) a = (a - mean) / sd;
  return out;
}

}  // namespace step::train
