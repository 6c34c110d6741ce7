#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "step/core/tensor.hpp"

namespace step::env {

class EnvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ActionSpace {
  enum class Kind { kDiscrete, kBox };

  Kind kind = Kind::kDiscrete;
  /// Number of actions (discrete) or dimension (box).
  std::size_t size = 0;
  double low = 0.0;
  double high = 0.0;

  static ActionSpace discrete(std::size_t n) { return {Kind::kDiscrete, n, 0.0, 0.0}; }
  static ActionSpace box(std::size_t dim, double low, double high) { return {Kind::kBox, dim, low, high}; }
  bool is_discrete() const { return kind == Kind::kDiscrete; }

  friend bool operator==(const ActionSpace&, const ActionSpace&) = default;
};

/// One agent's action; `index` in discrete spaces, `values` in box spaces.
struct Action {
  std::size_t index = 0;
  std::vector<double> values;

  static Action discrete(std::size_t i) { return {i, {}}; }
  static Action continuous(std::vector<double> v) { return {0, std::move(v)}; }

  friend bool operator==(const Action&, const Action&) = default;
};

struct EnvState {
  core::Tensor observation;
  std::size_t t = 0;
  bool done = false;
};

struct StepResult {
  EnvState next;
  std::vector<double> rewards;
  bool done = false;
  std::map<std::string, double> info;
};

/// Markov game with a fixed decision priority: agent id order is priority
/// order. Every agent observes the same global state.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::string name() const = 0;
  virtual std::size_t num_agents() const = 0;
  virtual std::size_t observation_size() const = 0;
  virtual ActionSpace action_space(std::size_t agent) const = 0;
  virtual std::size_t horizon() const = 0;
  virtual double gamma() const = 0;

  virtual EnvState reset(std::uint64_t seed) = 0;
  /// Rejects steps after `done` and out-of-range actions (naming the agent).
  virtual StepResult step(const std::vector<Action>& joint) = 0;
  virtual const EnvState& state() const = 0;

  virtual std::unique_ptr<Environment> clone() const = 0;
};

/// Throws EnvError unless `joint` has one in-range action per agent.
void validate_joint_action(const Environment& env, const std::vector<Action>& joint);

}  // namespace step::env
