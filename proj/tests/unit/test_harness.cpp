#include <doctest.h>

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>

#include "step/env/registry.hpp"
#include "step/harness/report.hpp"
#include "step/harness/sweep.hpp"

using namespace step;
using harness::Json;
namespace fs = std::filesystem;

namespace {

/// Fresh directory under the system temp dir, removed on destruction.
class ScratchDir {
 public:
  ScratchDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("step_harness_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json quick_mixing(const fs::path& out) {
  Json doc = harness::preset_document("mixing");
  doc["train"]["total_steps"] = 500;
  doc["train"]["eval_interval"] = 250;
  doc["train"]["eval_episodes"] = 10;
  doc["run"]["seeds"] = "3,4";
  doc["run"]["out_dir"] = out.string();
  return doc;
}

std::string error_of(const Json& doc) {
  try {
    harness::parse_run_config(doc);
  } catch (const train::ConfigError& e) {
    return e.what();
  }
  return "";
}

train::Evaluation fake_eval(std::vector<double> rewards, std::vector<double> returns, std::vector<double> episodes,
                            double se, double coll) {
  train::Evaluation ev;
  ev.episodes = episodes.size();
  ev.mean_step_reward = std::move(rewards);
  ev.mean_episode_return = std::move(returns);
  ev.episode_returns = std::move(episodes);
  ev.se_rate = se;
  ev.collision_rate = coll;
  return ev;
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("empty document gives defaults") {
    const harness::RunConfig c = harness::parse_run_config(Json::object());
    CHECK(c.name == "run");
    CHECK(c.seeds == std::vector<std::uint64_t>{0});
    CHECK(c.train.beta == 1.0);
    CHECK(c.train.algorithm == train::Algorithm::kStep);
  }

  TEST_CASE("to_json round trips every preset") {
    for (const std::string& name : harness::preset_names()) {
      CAPTURE(name);
      const harness::RunConfig c = harness::parse_run_config(harness::preset_document(name));
      const harness::RunConfig back = harness::parse_run_config(harness::to_json(c));
      CHECK(harness::to_json(back) == harness::to_json(c));
      CHECK(harness::config_hash(back) == harness::config_hash(c));
    }
  }

  TEST_CASE("preset catalogue") {
    CHECK(harness::preset_names().size() == 12);
    const harness::RunConfig pen = harness::parse_run_config(harness::preset_document("penalty_k-75"));
    CHECK(pen.train.env.k == -75.0);
    CHECK(pen.seeds.size() == 20);
    const harness::RunConfig central = harness::parse_run_config(harness::preset_document("mixing_central"));
    CHECK(central.train.algorithm == train::Algorithm::kCentralCritic);
    const harness::RunConfig p6 = harness::parse_run_config(harness::preset_document("particle_n6"));
    CHECK(p6.train.env.num_agents == 6);
    CHECK_THROWS_AS(harness::preset_document("penalty_k-60"), train::ConfigError);
  }

  TEST_CASE("unknown keys and sections are named") {
    Json doc = Json::object();
    doc["train"]["bta"] = 0.5;
    CHECK(error_of(doc).find("train.bta") != std::string::npos);
    Json sec = Json::object();
    sec["trian"]["beta"] = 0.5;
    CHECK(error_of(sec).find("trian") != std::string::npos);
  }

  TEST_CASE("wrong types are named") {
    Json doc = Json::object();
    doc["train"]["epochs"] = "four";
    CHECK(error_of(doc).find("train.epochs") != std::string::npos);
    Json neg = Json::object();
    neg["train"]["rollout"] = -5;
    CHECK(error_of(neg).find("train.rollout") != std::string::npos);
    Json flag = Json::object();
    flag["train"]["freeze_embeddings"] = 1;
    CHECK(error_of(flag).find("train.freeze_embeddings") != std::string::npos);
  }

  TEST_CASE("invalid values and environments are rejected") {
    Json doc = Json::object();
    doc["train"]["clip"] = -0.1;
    CHECK(error_of(doc).find("train.clip") != std::string::npos);
    Json env = Json::object();
    env["env"]["id"] = "nowhere";
    CHECK(error_of(env).find("env") != std::string::npos);
    Json algo = Json::object();
    algo["train"]["algorithm"] = "maddpg";
    CHECK_FALSE(error_of(algo).empty());
  }

  TEST_CASE("overrides") {
    Json doc = harness::preset_document("merge");
    harness::apply_override(doc, "train.beta=0");
    harness::apply_override(doc, "train.freeze_embeddings=true");
    harness::apply_override(doc, "run.name=merge_b0");
    harness::apply_override(doc, "train.algorithm=ippo");
    const harness::RunConfig c = harness::parse_run_config(doc);
    CHECK(c.train.beta == 0.0);
    CHECK(c.train.freeze_embeddings);
    CHECK(c.name == "merge_b0");
    CHECK(c.train.algorithm == train::Algorithm::kIppo);
    CHECK_THROWS_AS(harness::apply_override(doc, "train.bta=0"), train::ConfigError);
    CHECK_THROWS_AS(harness::apply_override(doc, "beta=0"), train::ConfigError);
    CHECK_THROWS_AS(harness::apply_override(doc, "train.beta"), train::ConfigError);
  }

  TEST_CASE("seed lists") {
    CHECK(harness::parse_seed_list("7") == std::vector<std::uint64_t>{7});
    CHECK(harness::parse_seed_list("0-4,10") == std::vector<std::uint64_t>{0, 1, 2, 3, 4, 10});
    CHECK(harness::parse_seed_list("1,5,9") == std::vector<std::uint64_t>{1, 5, 9});
    CHECK_THROWS_AS(harness::parse_seed_list("4-2"), train::ConfigError);
    CHECK_THROWS_AS(harness::parse_seed_list("x"), train::ConfigError);
    CHECK_THROWS_AS(harness::parse_seed_list(""), train::ConfigError);
    Json doc = Json::object();
    doc["run"]["seeds"] = "0-19";
    CHECK(harness::parse_run_config(doc).seeds.size() == 20);
    doc["run"]["seeds"] = 5;
    CHECK(harness::parse_run_config(doc).seeds == std::vector<std::uint64_t>{5});
    harness::apply_override(doc, "run.seeds=[2,3]");
    CHECK(harness::parse_run_config(doc).seeds == std::vector<std::uint64_t>{2, 3});
    doc["run"]["seeds"] = -1;
    CHECK(error_of(doc).find("run.seeds") != std::string::npos);
    doc["run"]["seeds"] = Json::array();
    CHECK(error_of(doc).find("run.seeds") != std::string::npos);
  }

  TEST_CASE("hash ignores seeds and output location only") {
    harness::RunConfig a = harness::parse_run_config(harness::preset_document("mixing"));
    harness::RunConfig b = a;
    b.seeds = {42, 43};
    b.out_dir = "elsewhere";
    CHECK(harness::config_hash(a) == harness::config_hash(b));
    b.train.beta = 0.5;
    CHECK(harness::config_hash(a) != harness::config_hash(b));
  }

  TEST_CASE("config files") {
    ScratchDir dir;
    const fs::path good = dir.path() / "good.json";
    std::ofstream(good) << R"({"env": {"id": "matrix", "game": "penalty", "k": -25}, "train": {"beta": 2}})";
    const harness::RunConfig c = harness::parse_run_config(harness::load_config_file(good.string()));
    CHECK(c.train.env.k == -25.0);
    CHECK(c.train.beta == 2.0);
    const fs::path bad = dir.path() / "bad.json";
    std::ofstream(bad) << "{\"env\": {";
    try {
      harness::load_config_file(bad.string());
      FAIL("expected a parse error");
    } catch (const train::ConfigError& e) {
      CHECK(std::string(e.what()).find("bad.json") != std::string::npos);
    }
    CHECK_THROWS_AS(harness::load_config_file((dir.path() / "missing.json").string()), train::ConfigError);
  }
}

TEST_SUITE("runner") {
  TEST_CASE("seed outputs are bit-identical across runs") {
    ScratchDir a, b;
    const harness::RunConfig ca = harness::parse_run_config(quick_mixing(a.path()));
    const harness::RunConfig cb = harness::parse_run_config(quick_mixing(b.path()));
    const harness::SeedOutcome oa = harness::run_seed(ca, 3);
    const harness::SeedOutcome ob = harness::run_seed(cb, 3);
    REQUIRE(oa.error.empty());
    CHECK(slurp(oa.dir / "metrics.csv") == slurp(ob.dir / "metrics.csv"));
    CHECK(slurp(oa.dir / "checkpoint.txt") == slurp(ob.dir / "checkpoint.txt"));
    CHECK(oa.dir == harness::seed_dir(ca, 3));
    CHECK(oa.run_id == "mixing-s3");
  }

  TEST_CASE("metrics file has one row per evaluation") {
    ScratchDir dir;
    const harness::RunConfig c = harness::parse_run_config(quick_mixing(dir.path()));
    const harness::SeedOutcome o = harness::run_seed(c, 4);
    std::istringstream lines(slurp(o.dir / "metrics.csv"));
    std::string line;
    std::getline(lines, line);
    CHECK(line == harness::metrics_header(2));
    std::size_t rows = 0;
    while (std::getline(lines, line)) {
      CHECK(line.rfind("mixing-s4,4,", 0) == 0);
      ++rows;
    }
    CHECK(rows == o.metrics.size());
    CHECK(rows == 3);
  }

  TEST_CASE("manifest records the effective config") {
    ScratchDir dir;
    Json doc = quick_mixing(dir.path());
    harness::apply_override(doc, "train.beta=0.25");
    const harness::RunConfig c = harness::parse_run_config(doc);
    const harness::SeedOutcome o = harness::run_seed(c, 3);
    std::ifstream in(o.dir / "manifest.json");
    const Json m = Json::parse(in);
    CHECK(m["config"]["train"]["beta"].get<double>() == 0.25);
    CHECK(m["config_hash"].get<std::string>() == harness::config_hash(c));
    CHECK(m["seed"].get<std::uint64_t>() == 3);
    CHECK(m["run_id"].get<std::string>() == "mixing-s3");
    CHECK(m.contains("started_at"));
    CHECK(m.contains("wall_seconds"));
  }

  TEST_CASE("parallel seeds match serial seeds") {
    ScratchDir a, b;
    const harness::RunConfig serial = harness::parse_run_config(quick_mixing(a.path()));
    const harness::RunConfig parallel = harness::parse_run_config(quick_mixing(b.path()));
    const harness::RunOutcome s = harness::run_all(serial, 1);
    const harness::RunOutcome p = harness::run_all(parallel, 2);
    REQUIRE(s.ok());
    REQUIRE(p.ok());
    REQUIRE(s.seeds.size() == 2);
    for (std::size_t k = 0; k < 2; ++k) {
      CHECK(s.seeds[k].seed == p.seeds[k].seed);
      CHECK(slurp(s.seeds[k].dir / "metrics.csv") == slurp(p.seeds[k].dir / "metrics.csv"));
    }
  }

  TEST_CASE("seed failures are recorded, not thrown") {
    ScratchDir dir;
    harness::RunConfig c = harness::parse_run_config(quick_mixing(dir.path()));
    c.train.rollout = 0;
    const harness::RunOutcome o = harness::run_all(c, 1);
    CHECK_FALSE(o.ok());
    CHECK_FALSE(o.seeds.front().error.empty());
  }
}

TEST_SUITE("report") {
  TEST_CASE("replayed checkpoints reproduce the final evaluation") {
    ScratchDir dir;
    const harness::RunConfig c = harness::parse_run_config(quick_mixing(dir.path()));
    const harness::RunOutcome o = harness::run_all(c, 1);
    REQUIRE(o.ok());
    const auto records = harness::replay_runs({dir.path()}, c.train.eval_episodes);
    REQUIRE(records.size() == 2);
    for (std::size_t k = 0; k < 2; ++k) {
      const train::Evaluation& live = o.seeds[k].final_eval;
      const train::Evaluation& again = records[k].eval;
      CHECK(records[k].seed == o.seeds[k].seed);
      CHECK(again.mean_step_reward == live.mean_step_reward);
      CHECK(again.episode_returns == live.episode_returns);
      CHECK(again.se_rate == live.se_rate);
      CHECK(again.modal_joint == live.modal_joint);
    }
  }

  TEST_CASE("empty or missing directories are report errors") {
    ScratchDir dir;
    CHECK_THROWS_AS(harness::replay_runs({dir.path()}), harness::ReportError);
    CHECK_THROWS_AS(harness::replay_runs({dir.path() / "nope"}), harness::ReportError);
    fs::create_directories(dir.path() / "broken");
    std::ofstream(dir.path() / "broken" / "manifest.json") << "{not json";
    CHECK_THROWS_AS(harness::replay_runs({dir.path()}), harness::ReportError);
  }

  TEST_CASE("labels against the oracle") {
    env::EnvConfig cfg;
    cfg.id = "matrix";
    cfg.game = "mixing";
    const auto mixing = env::make_env(cfg);
    train::Evaluation ev;
    CHECK(harness::outcome_label(*mixing, ev) == "other");
    ev.modal_joint = oracle::JointAction{0, 0};
    CHECK(harness::outcome_label(*mixing, ev) == "SE");
    ev.modal_joint = oracle::JointAction{1, 1};
    CHECK(harness::outcome_label(*mixing, ev) == "NE(2,2)");
    ev.modal_joint = oracle::JointAction{0, 2};
    CHECK(harness::outcome_label(*mixing, ev) == "other");

    env::EnvConfig merge;
    merge.id = "merge";
    CHECK(harness::outcome_label(*env::make_env(merge), ev) == "-");
  }

  TEST_CASE("mean and sample sd") {
    const harness::MeanSd m = harness::mean_sd({1.0, 2.0, 3.0, 4.0});
    CHECK(m.mean == doctest::Approx(2.5));
    CHECK(m.sd == doctest::Approx(std::sqrt(5.0 / 3.0)));
    CHECK(harness::mean_sd({7.0}).sd == 0.0);
    CHECK(std::isnan(harness::mean_sd({}).mean));
  }

  TEST_CASE("aggregation matches direct recomputation") {
    core::Rng rng(11);
    std::vector<harness::SeedRecord> records;
    const std::vector<std::string> labels{"SE", "NE(2,2)", "other"};
    for (std::uint64_t s = 0; s < 30; ++s) {
      harness::SeedRecord r;
      r.name = s % 3 == 2 ? "b" : "a";
      r.config_hash = "h";
      r.seed = s;
      std::vector<double> episodes(5);
      for (double& e : episodes) e = rng.uniform(-10.0, 10.0);
      r.eval = fake_eval({rng.uniform(-1, 1), rng.uniform(-1, 1)}, {rng.uniform(-5, 5), rng.uniform(-5, 5)}, episodes,
                         rng.uniform(0, 1), rng.uniform(0, 1));
      r.label = labels[rng.index(3)];
      records.push_back(r);
    }
    const auto groups = harness::summarize(records);
    REQUIRE(groups.size() == 2);
    for (const harness::GroupSummary& g : groups) {
      std::vector<const harness::SeedRecord*> mine;
      for (const auto& r : records) {
        if (r.name == g.name) mine.push_back(&r);
      }
      CHECK(g.seeds == mine.size());
      const double n = static_cast<double>(mine.size());
      double share_total = 0.0;
      for (const auto& [label, share] : g.label_share) {
        double count = 0.0;
        for (const auto* r : mine) count += r->label == label ? 1.0 : 0.0;
        CHECK(std::abs(share - count / n) < 1e-12);
        share_total += share;
      }
      CHECK(std::abs(share_total - 1.0) < 1e-12);
      for (std::size_t i = 0; i < 2; ++i) {
        double mean = 0.0;
        for (const auto* r : mine) mean += r->eval.mean_episode_return[i];
        mean /= n;
        double ss = 0.0;
        for (const auto* r : mine) ss += std::pow(r->eval.mean_episode_return[i] - mean, 2);
        CHECK(std::abs(g.episode_return[i].mean - mean) < 1e-12);
        CHECK(std::abs(g.episode_return[i].sd - std::sqrt(ss / (n - 1.0))) < 1e-12);
      }
      double team = 0.0;
      for (const auto* r : mine) {
        double e = 0.0;
        for (double x : r->eval.episode_returns) e += x;
        team += e / static_cast<double>(r->eval.episode_returns.size());
      }
      CHECK(std::abs(g.team_return.mean - team / n) < 1e-12);
    }
  }

  TEST_CASE("csv outputs have one row per record and per group entry") {
    std::vector<harness::SeedRecord> records(3);
    for (std::size_t k = 0; k < 3; ++k) {
      records[k].run_id = "x-s" + std::to_string(k);
      records[k].name = "x";
      records[k].config_hash = "h";
      records[k].seed = k;
      records[k].label = k == 0 ? "SE" : "other";
      records[k].eval = fake_eval({0.5, 0.25}, {1.0, 2.0}, {1.5}, 0.0, 0.0);
    }
    const std::string runs = harness::records_csv(records);
    CHECK(std::count(runs.begin(), runs.end(), '\n') == 4);
    CHECK(runs.find("x-s1,x,h,1,other,0.5,0.25,1,2,1.5,") != std::string::npos);
    const std::string summary = harness::summary_csv(harness::summarize(records));
    CHECK(std::count(summary.begin(), summary.end(), '\n') == 1 + 2 * 2);
    CHECK(harness::summary_text(harness::summarize(records)).find("SE 33.3%") != std::string::npos);
  }
}

TEST_SUITE("sweep") {
  TEST_CASE("one point per value with suffixed names") {
    ScratchDir dir;
    Json base = quick_mixing(dir.path());
    base["run"]["seeds"] = "0";
    const auto points = harness::run_sweep(base, "train.beta", {"0", "2"}, 1);
    REQUIRE(points.size() == 2);
    CHECK(points[0].outcome.config.name == "mixing_beta=0");
    CHECK(points[1].outcome.config.train.beta == 2.0);
    CHECK(fs::exists(dir.path() / "mixing_beta=2" / "seed-0" / "metrics.csv"));
    CHECK(points[0].curve.size() == 3);
    const std::string table = harness::sweep_table("train.beta", points);
    CHECK(table.rfind("train.beta,seeds,se_share,", 0) == 0);
    CHECK(std::count(table.begin(), table.end(), '\n') == 3);
    CHECK_THROWS_AS(harness::run_sweep(base, "train.bta", {"0"}, 1), train::ConfigError);
    CHECK_THROWS_AS(harness::run_sweep(base, "train.beta", {}, 1), train::ConfigError);
  }
}
