#pragma once

#include <memory>
#include <string>

#include "step/env/environment.hpp"

namespace step::env {

struct EnvConfig {
  std::string id = "matrix";    // matrix | merge | particle
  std::string game = "penalty";  // penalty | mixing | file (matrix only)
  std::string game_file;
  double k = 0.0;                // penalty parameter
  std::size_t horizon = 0;       // 0 = environment default
  double gamma = -1.0;           // negative = environment default
  std::size_t num_agents = 2;    // particle only
};

/// Builds an environment; throws EnvError on an unknown id or game.
std::unique_ptr<Environment> make_env(const EnvConfig& config);

}  // namespace step::env
