#include "step/env/registry.hpp"

#include "step/env/matrix_env.hpp"
#include "step/env/merge_corridor.hpp"
#include "step/env/particle_spread.hpp"
#include "step/oracle/game_io.hpp"

namespace step::env {

namespace {

std::size_t pick(std::size_t value, std::size_t fallback) { return value == 0 ? fallback : value; }
double pick(double value, double fallback) { return value < 0.0 ? fallback : value; }

}  // namespace

std::unique_ptr<Environment> make_env(const EnvConfig& config) {
  if (config.gamma > 1.0) throw EnvError("gamma must be in [0, 1]");
  if (config.id == "matrix") {
    oracle::MatrixGame game = [&] {
      if (config.game == "penalty") return oracle::penalty_game(config.k);
      if (config.game == "mixing") return oracle::mixing_game();
      if (config.game == "file") return oracle::load_game(config.game_file);
      throw EnvError("unknown matrix game '" + config.game + "'");
    }();
    return std::make_unique<RepeatedMatrixEnv>(std::move(game), pick(config.horizon, 25), pick(config.gamma, 0.95));
  }
  if (config.id == "merge") {
    return std::make_unique<MergeCorridor>(pick(config.horizon, 40), pick(config.gamma, 0.99));
  }
  if (config.id == "particle") {
    return std::make_unique<ParticleSpread>(config.num_agents, pick(config.horizon, 50), pick(config.gamma, 0.99));
  }
  throw EnvError("unknown environment '" + config.id + "'");
}

}  // namespace step::env
