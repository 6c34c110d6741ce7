#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "step/train/config.hpp"

namespace step::harness {

using Json = nlohmann::json;

/// One experiment: training settings plus where and for which seeds to run.
struct RunConfig {
  std::string name = "run";
  train::TrainConfig train;
  std::vector<std::uint64_t> seeds{0};
  std::string out_dir = "runs";
};

/// Config files are JSON objects with up to three sections:
///
///   { "run":   { "name": ..., "seeds": [...], "out_dir": ... },
///     "env":   { "id": ..., "game": ..., "k": ..., ... },
///     "train": { "algorithm": ..., "beta": ..., ... } }
///
/// Every key must be known and correctly typed; errors throw
/// train::ConfigError naming the dotted key.
RunConfig parse_run_config(const Json& doc);
Json to_json(const RunConfig& config);

/// Reads and parses a config file; parse errors carry line and column.
Json load_config_file(const std::string& path);

/// Applies `section.key=value` to `doc`. The value is read as JSON when it
/// parses (numbers, booleans, arrays) and as a bare string otherwise.
void apply_override(Json& doc, const std::string& assignment);

/// Names accepted by preset_document.
std::vector<std::string> preset_names();
/// Built-in experiment definitions; throws ConfigError on an unknown name.
Json preset_document(const std::string& name);

/// "0-19", "3", "1,4,9" or combinations such as "0-4,10".
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

/// FNV-1a over the canonical JSON dump of the config without run.seeds and
/// run.out_dir, so identical experiments share a hash.
std::string config_hash(const RunConfig& config);

}  // namespace step::harness
