// step: train, inspect and aggregate Stackelberg-policy experiments.
//
//   step train  --preset penalty_k-50 [--set train.beta=0] [--seeds 0-4] [--jobs 2] [--out runs]
//   step oracle --preset mixing --claim unique_ne --claim pareto
//   step report runs/penalty_k-50 [--out summary_dir]
//   step sweep  --preset particle_n4 --param train.beta --values 0,0.1,1,10
//
// Exit codes: 0 success, 1 runtime failure or failed claim, 2 usage/config error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "step/env/environment.hpp"
#include "step/harness/report.hpp"
#include "step/harness/sweep.hpp"
#include "step/oracle/equilibria.hpp"
#include "step/oracle/game_io.hpp"

namespace fs = std::filesystem;
using namespace step;
using harness::Json;

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

struct ConfigArgs {
  std::string config;
  std::string preset;
  std::vector<std::string> sets;
  std::string out;
  std::string seeds;
};

void add_config_options(CLI::App* cmd, ConfigArgs& a) {
  auto* config = cmd->add_option("--config", a.config, "JSON config file");
  auto* preset = cmd->add_option("--preset", a.preset, "built-in experiment (see `step presets`)");
  config->excludes(preset);
  cmd->add_option("--set", a.sets, "override, e.g. train.beta=0 (repeatable)");
  cmd->add_option("--out", a.out, "output directory (run.out_dir)");
  cmd->add_option("--seeds", a.seeds, "seed list, e.g. 0-19 or 1,5,9");
}

Json resolve_document(const ConfigArgs& a) {
  if (a.config.empty() && a.preset.empty()) throw train::ConfigError("one of --config or --preset is required");
  Json doc = a.config.empty() ? harness::preset_document(a.preset) : harness::load_config_file(a.config);
  for (const std::string& s : a.sets) harness::apply_override(doc, s);
  if (!a.out.empty()) doc["run"]["out_dir"] = a.out;
  if (!a.seeds.empty()) doc["run"]["seeds"] = a.seeds;
  return doc;
}

void write_file(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

int cmd_train(const ConfigArgs& a, std::size_t jobs) {
  const harness::RunConfig config = harness::parse_run_config(resolve_document(a));
  std::cerr << "training " << config.name << " [" << harness::config_hash(config) << "] on " << config.seeds.size()
            << " seed(s)" << std::endl;
  const harness::RunOutcome outcome = harness::run_all(config, jobs, &std::cerr);
  std::vector<harness::SeedRecord> records;
  for (const auto& s : outcome.seeds) {
    if (s.error.empty()) records.push_back(harness::record_from(config, s));
  }
  if (!records.empty()) std::cout << harness::summary_text(harness::summarize(records));
  return outcome.ok() ? kOk : kFailure;
}

oracle::MatrixGame oracle_game(const std::string& preset, double k, const std::string& game_file,
                               const std::string& config) {
  if (!game_file.empty()) return oracle::load_game(game_file);
  if (!config.empty()) {
    const harness::RunConfig rc = harness::parse_run_config(harness::load_config_file(config));
    const auto& e = rc.train.env;
    if (e.id != "matrix") throw train::ConfigError("config does not describe a matrix game");
    if (e.game == "file") return oracle::load_game(e.game_file);
    return e.game == "mixing" ? oracle::mixing_game() : oracle::penalty_game(e.k);
  }
  if (preset == "penalty") return oracle::penalty_game(k);
  if (preset == "mixing") return oracle::mixing_game();
  if (preset == "prisoners") return oracle::prisoners_dilemma();
  if (preset == "pennies") return oracle::matching_pennies();
  throw train::ConfigError("unknown game preset '" + preset + "' (penalty, mixing, prisoners, pennies)");
}

int cmd_oracle(const std::string& preset, double k, const std::string& game_file, const std::string& config,
               const std::vector<std::string>& claims) {
  if (preset.empty() && game_file.empty() && config.empty()) {
    throw train::ConfigError("one of --preset, --game or --config is required");
  }
  const oracle::MatrixGame game = oracle_game(preset, k, game_file, config);
  const oracle::EquilibriumReport report = oracle::stackelberg_se(game);
  std::cout << "agents " << game.num_agents() << ", actions";
  for (std::size_t c : game.action_counts()) std::cout << ' ' << c;
  std::cout << "\npure NE:";
  if (report.pure_ne.empty()) std::cout << " none";
  for (const auto& ne : report.pure_ne) std::cout << ' ' << oracle::format_joint(ne);
  std::cout << "\nSE path: " << (report.se_path ? oracle::format_joint(*report.se_path) : "none");
  if (report.se_path) {
    std::cout << "  payoffs";
    for (double p : report.se_payoffs) std::cout << ' ' << p;
  }
  std::cout << "\nunique NE " << (report.unique_ne ? "yes" : "no") << ", unique SE "
            << (report.unique_se ? "yes" : "no") << ", SE Pareto-dominates NE "
            << (report.se_pareto_dominates_ne ? "yes" : "no") << '\n';
  for (const std::string& note : report.notes) std::cout << "note: " << note << '\n';
  if (claims.empty()) return kOk;
  bool all = true;
  for (const auto& r : oracle::verify_claims(game, claims)) {
    std::cout << "claim " << r.claim << ": " << (r.passed ? "pass" : "FAIL");
    if (!r.note.empty()) std::cout << " (" << r.note << ')';
    std::cout << '\n';
    all = all && r.passed;
  }
  return all ? kOk : kFailure;
}

int cmd_report(const std::vector<std::string>& dirs, const std::string& out, std::size_t episodes) {
  if (dirs.empty()) throw harness::ReportError("no run directories given");
  std::vector<fs::path> roots(dirs.begin(), dirs.end());
  const auto records = harness::replay_runs(roots, episodes);
  const auto groups = harness::summarize(records);
  std::cout << harness::summary_text(groups);
  if (!out.empty()) {
    write_file(fs::path(out) / "report_runs.csv", harness::records_csv(records));
    write_file(fs::path(out) / "report_summary.csv", harness::summary_csv(groups));
  } else {
    std::cout << '\n' << harness::records_csv(records);
  }
  return kOk;
}

int cmd_sweep(const ConfigArgs& a, const std::string& param, const std::vector<std::string>& values,
              std::size_t jobs) {
  const Json base = resolve_document(a);
  const harness::RunConfig config = harness::parse_run_config(base);
  const auto points = harness::run_sweep(base, param, values, jobs, &std::cerr);
  const std::string table = harness::sweep_table(param, points);
  const fs::path dir = fs::path(config.out_dir) / (config.name + "_sweep_" + param.substr(param.find('.') + 1));
  write_file(dir / "sweep_table.csv", table);
  write_file(dir / "sweep_curves.csv", harness::sweep_curves_csv(param, points));
  std::cout << table;
  for (const auto& p : points) {
    if (!p.outcome.ok()) return kFailure;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stackelberg-policy MARL experiments"};
  app.require_subcommand(1);
  std::size_t jobs = 1;

  ConfigArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "train every seed of a config and write metrics/checkpoints");
  add_config_options(train_cmd, train_args);
  train_cmd->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);

  std::string oracle_preset, game_file, oracle_config;
  double k = 0.0;
  std::vector<std::string> claims;
  auto* oracle_cmd = app.add_subcommand("oracle", "solve a matrix game for pure NE and the Stackelberg path");
  oracle_cmd->add_option("--preset", oracle_preset, "penalty, mixing, prisoners or pennies");
  oracle_cmd->add_option("--k", k, "penalty parameter");
  oracle_cmd->add_option("--game", game_file, "game file");
  oracle_cmd->add_option("--config", oracle_config, "run config describing a matrix game");
  oracle_cmd->add_option("--claim", claims, "unique_ne, unique_se or pareto (repeatable)");

  std::vector<std::string> dirs;
  std::string report_out;
  std::size_t episodes = 100;
  auto* report_cmd = app.add_subcommand("report", "replay final checkpoints and summarize outcomes");
  report_cmd->add_option("dirs", dirs, "run directories");
  report_cmd->add_option("--out", report_out, "write report_runs.csv and report_summary.csv here");
  report_cmd->add_option("--episodes", episodes, "greedy episodes per seed")->check(CLI::PositiveNumber);

  ConfigArgs sweep_args;
  std::string param;
  std::vector<std::string> values;
  auto* sweep_cmd = app.add_subcommand("sweep", "run a config over a grid of values for one key");
  add_config_options(sweep_cmd, sweep_args);
  sweep_cmd->add_option("--param", param, "dotted key, e.g. train.beta")->required();
  sweep_cmd->add_option("--values", values, "comma-separated values")->required()->delimiter(',');
  sweep_cmd->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);

  app.add_subcommand("presets", "list built-in experiments");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*train_cmd) return cmd_train(train_args, jobs);
    if (*oracle_cmd) return cmd_oracle(oracle_preset, k, game_file, oracle_config, claims);
    if (*report_cmd) return cmd_report(dirs, report_out, episodes);
    if (*sweep_cmd) return cmd_sweep(sweep_args, param, values, jobs);
    for (const std::string& name : harness::preset_names()) std::cout << name << '\n';
    return kOk;
  } catch (const train::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const harness::ReportError& e) {
    std::cerr << "report: " << e.what() << '\n';
    return kUsage;
  } catch (const oracle::GameError& e) {
    std::cerr << "game error: " << e.what() << '\n';
    return kUsage;
  } catch (const oracle::UnsupportedClaim& e) {
    std::cerr << "unsupported claim: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
}
