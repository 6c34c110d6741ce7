#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "step/harness/runner.hpp"

namespace step::harness {

/// Nothing to report on, or a run directory that cannot be read.
class ReportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One seed's greedy outcome.
struct SeedRecord {
  std::string run_id;
  std::string name;
  std::string config_hash;
  std::uint64_t seed = 0;
  train::Evaluation eval;
  /// "SE", "NE(a,b)" or "other" on matrix games (1-based actions), "-" elsewhere.
  std::string label;
};

/// Label for the modal greedy joint action against the oracle's equilibria.
std::string outcome_label(const env::Environment& env, const train::Evaluation& eval);

SeedRecord record_from(const RunConfig& config, const SeedOutcome& outcome);

/// Finds every seed directory (one holding manifest.json) under `roots`,
/// rebuilds its greedy policy from the checkpoint and replays `episodes`
/// evaluation episodes. Throws ReportError when nothing is found.
std::vector<SeedRecord> replay_runs(const std::vector<std::filesystem::path>& roots, std::size_t episodes = 100);

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation; 0 for one value
};
MeanSd mean_sd(const std::vector<double>& values);

/// Seeds sharing a run name and config hash.
struct GroupSummary {
  std::string name;
  std::string config_hash;
  std::size_t seeds = 0;
  std::map<std::string, double> label_share;  // sums to 1
  std::vector<MeanSd> step_reward;            // per agent, across seeds
  std::vector<MeanSd> episode_return;         // per agent, across seeds
  MeanSd team_return;                         // per-seed mean over episodes of the agent-averaged return
  MeanSd se_rate;
  MeanSd collision_rate;
};

std::vector<GroupSummary> summarize(const std::vector<SeedRecord>& records);

std::string records_csv(const std::vector<SeedRecord>& records);
std::string summary_csv(const std::vector<GroupSummary>& groups);
/// Human-readable table with mean (sd) entries.
std::string summary_text(const std::vector<GroupSummary>& groups);

}  // namespace step::harness
