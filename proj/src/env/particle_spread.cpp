#include "step/env/particle_spread.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "step/core/rng.hpp"

namespace step::env {

ParticleSpread::ParticleSpread(std::size_t num_agents, std::size_t horizon, double gamma)
    : n_(num_agents), horizon_(horizon), gamma_(gamma), pos_(2 * n_), vel_(2 * n_), landmarks_(2 * n_) {
  if (n_ == 0) throw EnvError("particle spread needs at least one agent");
  if (horizon_ == 0) throw EnvError("particle spread horizon must be positive");
  state_.observation = observe();
  state_.done = true;
}

core::Tensor ParticleSpread::observe() const {
  std::vector<double> obs;
  obs.reserve(observation_size());
  obs.insert(obs.end(), pos_.begin(), pos_.end());
  obs.insert(obs.end(), vel_.begin(), vel_.end());
  obs.insert(obs.end(), landmarks_.begin(), landmarks_.end());
  for (std::size_t a = 0; a < n_; ++a) {
    for (std::size_t l = 0; l < n_; ++l) {
      obs.push_back(landmarks_[2 * l] - pos_[2 * a]);
      obs.push_back(landmarks_[2 * l + 1] - pos_[2 * a + 1]);
    }
  }
  obs.push_back(static_cast<double>(state_.t) / static_cast<double>(horizon_));
  return core::Tensor::vector(std::move(obs));
}

EnvState ParticleSpread::reset(std::uint64_t seed) {
  core::Rng rng = core::Rng(seed).split("particle-start");
  for (double& v : pos_) v = rng.uniform();
  for (double& v : landmarks_) v = rng.uniform();
  std::fill(vel_.begin(), vel_.end(), 0.0);
  state_.t = 0;
  state_.done = false;
  state_.observation = observe();
  return state_;
}

double ParticleSpread::coverage_reward() const {
  double total = 0.0;
  for (std::size_t l = 0; l < n_; ++l) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < n_; ++a) {
      best = std::min(best, std::hypot(landmarks_[2 * l] - pos_[2 * a], landmarks_[2 * l + 1] - pos_[2 * a + 1]));
    }
    total += best;
  }
  return -total;
}

StepResult ParticleSpread::step(const std::vector<Action>& joint) {
  if (state_.done) throw EnvError("step called on a finished episode; reset first");
  validate_joint_action(*this, joint);
  for (std::size_t a = 0; a < n_; ++a) {
    for (std::size_t d = 0; d < 2; ++d) {
      double& v = vel_[2 * a + d];
      v = std::clamp(v + 0.1 * joint[a].values[d], -1.0, 1.0);
      double& p = pos_[2 * a + d];
      const double moved = p + 0.1 * v;
      p = std::clamp(moved, 0.0, 1.0);
      if (moved != p) v = 0.0;
    }
  }
  StepResult result;
  result.rewards.assign(n_, coverage_reward());
  ++state_.t;
  state_.done = state_.t >= horizon_;
  state_.observation = observe();
  result.next = state_;
  result.done = state_.done;
  return result;
}

}  // namespace step::env
