#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace step::train {

struct GaeResult {
  std::vector<double> advantages;      // normalized
  std::vector<double> raw_advantages;  // before normalization
  std::vector<double> returns;         // raw advantages + values
};

/// Generalized advantage estimation over one agent's rollout.
/// `dones[t]` marks a terminal transition after step t; `bootstrap` is the
/// value of the state following the last step when it is not terminal.
GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      std::span<const std::uint8_t> dones, double bootstrap, double gamma, double lambda);

/// Zero mean, unit variance; the standard deviation is floored at 1e-8.
std::vector<double> normalize_advantages(std::span<const double> advantages);

}  // namespace step::train
