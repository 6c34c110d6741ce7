#include "step/harness/runner.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <mutex>
#include <ostream>
#include <thread>

#include "step/policy/checkpoint.hpp"

namespace step::harness {

namespace fs = std::filesystem;

namespace {

std::string number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Json nullable(double v) { return std::isnan(v) ? Json(nullptr) : Json(v); }

Json evaluation_json(const train::Evaluation& ev) {
  Json j = {{"episodes", ev.episodes},
            {"mean_step_reward", ev.mean_step_reward},
            {"mean_episode_return", ev.mean_episode_return},
            {"se_rate", nullable(ev.se_rate)},
            {"ne_rate", nullable(ev.ne_rate)},
            {"collision_rate", nullable(ev.collision_rate)}};
  if (ev.modal_joint) j["modal_joint"] = *ev.modal_joint;
  return j;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace

bool RunOutcome::ok() const {
  for (const SeedOutcome& s : seeds) {
    if (!s.error.empty()) return false;
  }
  return true;
}

std::string run_id(const RunConfig& config, std::uint64_t seed) { return config.name + "-s" + std::to_string(seed); }

fs::path seed_dir(const RunConfig& config, std::uint64_t seed) {
  return fs::path(config.out_dir) / config.name / ("seed-" + std::to_string(seed));
}

std::string metrics_header(std::size_t num_agents) {
  std::string h = "run_id,seed,step";
  for (std::size_t i = 1; i <= num_agents; ++i) h += ",reward_" + std::to_string(i);
  for (std::size_t i = 1; i <= num_agents; ++i) h += ",return_" + std::to_string(i);
  return h + ",se_rate,ne_rate,collision_rate,entropy,lh";
}

std::string metrics_line(const std::string& id, std::uint64_t seed, const train::MetricsRow& row) {
  std::string line = id + "," + std::to_string(seed) + "," + std::to_string(row.step);
  for (double r : row.eval.mean_step_reward) line += "," + number(r);
  for (double r : row.eval.mean_episode_return) line += "," + number(r);
  line += "," + number(row.eval.se_rate) + "," + number(row.eval.ne_rate) + "," + number(row.eval.collision_rate);
  return line + "," + number(row.entropy) + "," + number(row.lh);
}

SeedOutcome run_seed(const RunConfig& config, std::uint64_t seed, bool write) {
  SeedOutcome out;
  out.seed = seed;
  out.run_id = run_id(config, seed);
  out.dir = seed_dir(config, seed);
  const std::string started = utc_now();
  const auto t0 = std::chrono::steady_clock::now();

  train::TrainConfig tc = config.train;
  tc.seed = seed;
  train::Trainer trainer(tc);
  std::ofstream metrics;
  if (write) {
    fs::create_directories(out.dir);
    metrics.open(out.dir / "metrics.csv");
    metrics << metrics_header(trainer.num_agents()) << '\n';
  }
  const train::TrainResult result = trainer.run([&](const train::MetricsRow& row) {
    if (write) metrics << metrics_line(out.run_id, seed, row) << '\n' << std::flush;
  });
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.final_eval = result.final_eval;
  out.metrics = result.metrics;
  if (!write) return out;
  if (!metrics) throw std::runtime_error("cannot write " + (out.dir / "metrics.csv").string());

  policy::save_checkpoint(out.dir / "checkpoint.txt", result.checkpoint);
  RunConfig single = config;
  single.seeds = {seed};
  const Json manifest = {{"run_id", out.run_id},
                         {"seed", seed},
                         {"config", to_json(single)},
                         {"config_hash", config_hash(config)},
                         {"rng", {{"root_seed", seed},
                                  {"streams", {"env", "sampling", "minibatch", "policy-init", "critic-init", "eval"}}}},
                         {"steps", trainer.steps_done()},
                         {"started_at", started},
                         {"wall_seconds", out.wall_seconds},
                         {"final_eval", evaluation_json(result.final_eval)},
                         {"files", {{"metrics", "metrics.csv"}, {"checkpoint", "checkpoint.txt"}}}};
  write_text(out.dir / "manifest.json", manifest.dump(2) + "\n");
  return out;
}

RunOutcome run_all(const RunConfig& config, std::size_t jobs, std::ostream* log) {
  RunOutcome outcome;
  outcome.config = config;
  outcome.seeds.resize(config.seeds.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t k = next++; k < config.seeds.size(); k = next++) {
      const std::uint64_t seed = config.seeds[k];
      SeedOutcome& slot = outcome.seeds[k];
      try {
        slot = run_seed(config, seed);
      } catch (const std::exception& e) {
        slot.seed = seed;
        slot.run_id = run_id(config, seed);
        slot.dir = seed_dir(config, seed);
        slot.error = e.what();
      }
      if (log) {
        const std::lock_guard lock(log_mutex);
        *log << slot.run_id << ": " << (slot.error.empty() ? "done" : "FAILED " + slot.error);
        if (slot.error.empty()) *log << " in " << std::lround(slot.wall_seconds * 10) / 10.0 << " s";
        *log << std::endl;
      }
    }
  };
  jobs = std::max<std::size_t>(1, std::min(jobs, config.seeds.size()));
  std::vector<std::thread> pool;
  for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();
  return outcome;
}

}  // namespace step::harness
