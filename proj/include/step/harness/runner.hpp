#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "step/harness/run_config.hpp"
#include "step/train/trainer.hpp"

namespace step::harness {

/// What one seed produced. `error` is empty on success.
struct SeedOutcome {
  std::uint64_t seed = 0;
  std::string run_id;
  std::filesystem::path dir;
  train::Evaluation final_eval;
  std::vector<train::MetricsRow> metrics;
  double wall_seconds = 0.0;
  std::string error;
};

struct RunOutcome {
  RunConfig config;
  std::vector<SeedOutcome> seeds;  // in config.seeds order

  bool ok() const;
};

std::string run_id(const RunConfig& config, std::uint64_t seed);
/// <out_dir>/<name>/seed-<seed>
std::filesystem::path seed_dir(const RunConfig& config, std::uint64_t seed);

/// Metrics file header: run_id, seed, step, reward_<i>, return_<i>, se_rate,
/// ne_rate, collision_rate, entropy, lh.
std::string metrics_header(std::size_t num_agents);
std::string metrics_line(const std::string& run_id, std::uint64_t seed, const train::MetricsRow& row);

/// Trains one seed. With `write`, the seed directory receives metrics.csv,
/// checkpoint.txt and manifest.json.
SeedOutcome run_seed(const RunConfig& config, std::uint64_t seed, bool write = true);

/// Every seed of `config` on up to `jobs` worker threads. Failures are
/// recorded per seed rather than thrown. `log` (optional) gets one line per
/// finished seed.
RunOutcome run_all(const RunConfig& config, std::size_t jobs, std::ostream* log = nullptr);

}  // namespace step::harness
