#include "step/harness/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "step/env/matrix_env.hpp"
#include "step/env/registry.hpp"
#include "step/oracle/equilibria.hpp"
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

std::string fixed(double v, int digits = 3) {
  if (std::isnan(v)) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string mean_sd_text(const MeanSd& m, int digits = 3) {
  return fixed(m.mean, digits) + " (" + fixed(m.sd, digits) + ")";
}

double team_mean(const train::Evaluation& ev) {
  if (ev.episode_returns.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double r : ev.episode_returns) s += r;
  return s / static_cast<double>(ev.episode_returns.size());
}

}  // namespace

std::string outcome_label(const env::Environment& env, const train::Evaluation& eval) {
  const auto* matrix = dynamic_cast<const env::RepeatedMatrixEnv*>(&env);
  if (!matrix) return "-";
  if (!eval.modal_joint) return "other";
  const oracle::EquilibriumReport report = oracle::stackelberg_se(matrix->game());
  if (report.se_path && *report.se_path == *eval.modal_joint) return "SE";
  for (const oracle::JointAction& ne : report.pure_ne) {
    if (ne == *eval.modal_joint) return "NE" + oracle::format_joint(ne);
  }
  return "other";
}

SeedRecord record_from(const RunConfig& config, const SeedOutcome& outcome) {
  SeedRecord r;
  r.run_id = outcome.run_id;
  r.name = config.name;
  r.config_hash = config_hash(config);
  r.seed = outcome.seed;
  r.eval = outcome.final_eval;
  r.label = outcome_label(*env::make_env(config.train.env), outcome.final_eval);
  return r;
}

std::vector<SeedRecord> replay_runs(const std::vector<fs::path>& roots, std::size_t episodes) {
  std::vector<fs::path> manifests;
  for (const fs::path& root : roots) {
    if (!fs::exists(root)) throw ReportError("no such directory: " + root.string());
    if (fs::is_regular_file(root / "manifest.json")) {
      manifests.push_back(root / "manifest.json");
      continue;
    }
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
      if (entry.is_regular_file() && entry.path().filename() == "manifest.json") manifests.push_back(entry.path());
    }
  }
  std::sort(manifests.begin(), manifests.end());
  if (manifests.empty()) throw ReportError("no completed runs found");

  std::vector<SeedRecord> records;
  for (const fs::path& path : manifests) {
    Json manifest;
    try {
      std::ifstream in(path);
      manifest = Json::parse(in);
    } catch (const std::exception& e) {
      throw ReportError(path.string() + ": " + e.what());
    }
    if (!manifest.contains("config") || !manifest.contains("seed")) {
      throw ReportError(path.string() + ": missing config or seed");
    }
    const RunConfig config = parse_run_config(manifest["config"]);
    const std::uint64_t seed = manifest["seed"].get<std::uint64_t>();
    const fs::path checkpoint = path.parent_path() / "checkpoint.txt";
    if (!fs::exists(checkpoint)) throw ReportError(path.parent_path().string() + ": no checkpoint.txt");
    const auto policy = policy::make_joint_policy(policy::load_checkpoint(checkpoint));
    const auto environment = env::make_env(config.train.env);

    SeedOutcome outcome;
    outcome.seed = seed;
    outcome.run_id = manifest.value("run_id", run_id(config, seed));
    outcome.final_eval = train::evaluate_policy(*policy, *environment, episodes, train::evaluation_seed(seed));
    records.push_back(record_from(config, outcome));
  }
  return records;
}

MeanSd mean_sd(const std::vector<double>& values) {
  MeanSd m;
  if (values.empty()) return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  for (double v : values) m.mean += v;
  m.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - m.mean) * (v - m.mean);
    m.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return m;
}

std::vector<GroupSummary> summarize(const std::vector<SeedRecord>& records) {
  std::vector<GroupSummary> groups;
  std::vector<std::vector<const SeedRecord*>> members;
  for (const SeedRecord& r : records) {
    auto it = std::find_if(groups.begin(), groups.end(),
                           [&](const GroupSummary& g) { return g.name == r.name && g.config_hash == r.config_hash; });
    if (it == groups.end()) {
      groups.push_back({});
      groups.back().name = r.name;
      groups.back().config_hash = r.config_hash;
      members.emplace_back();
      it = groups.end() - 1;
    }
    members[static_cast<std::size_t>(it - groups.begin())].push_back(&r);
  }
  for (std::size_t g = 0; g < groups.size(); ++g) {
    GroupSummary& s = groups[g];
    const auto& rs = members[g];
    s.seeds = rs.size();
    for (const SeedRecord* r : rs) s.label_share[r->label] += 1.0 / static_cast<double>(rs.size());
    const std::size_t n = rs.front()->eval.mean_step_reward.size();
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> rewards, returns;
      for (const SeedRecord* r : rs) {
        rewards.push_back(r->eval.mean_step_reward.at(i));
        returns.push_back(r->eval.mean_episode_return.at(i));
      }
      s.step_reward.push_back(mean_sd(rewards));
      s.episode_return.push_back(mean_sd(returns));
    }
    std::vector<double> team, se, coll;
    for (const SeedRecord* r : rs) {
      team.push_back(team_mean(r->eval));
      se.push_back(r->eval.se_rate);
      coll.push_back(r->eval.collision_rate);
    }
    s.team_return = mean_sd(team);
    s.se_rate = mean_sd(se);
    s.collision_rate = mean_sd(coll);
  }
  return groups;
}

std::string records_csv(const std::vector<SeedRecord>& records) {
  std::size_t n = 0;
  for (const SeedRecord& r : records) n = std::max(n, r.eval.mean_step_reward.size());
  std::ostringstream out;
  out << "run_id,name,config_hash,seed,label";
  for (std::size_t i = 1; i <= n; ++i) out << ",reward_" << i;
  for (std::size_t i = 1; i <= n; ++i) out << ",return_" << i;
  out << ",team_return,se_rate,ne_rate,collision_rate\n";
  for (const SeedRecord& r : records) {
    out << r.run_id << ',' << r.name << ',' << r.config_hash << ',' << r.seed << ',' << r.label;
    for (std::size_t i = 0; i < n; ++i) {
      out << ',' << (i < r.eval.mean_step_reward.size() ? number(r.eval.mean_step_reward[i]) : "");
    }
    for (std::size_t i = 0; i < n; ++i) {
      out << ',' << (i < r.eval.mean_episode_return.size() ? number(r.eval.mean_episode_return[i]) : "");
    }
    out << ',' << number(team_mean(r.eval)) << ',' << number(r.eval.se_rate) << ',' << number(r.eval.ne_rate) << ','
        << number(r.eval.collision_rate) << '\n';
  }
  return out.str();
}

std::string summary_csv(const std::vector<GroupSummary>& groups) {
  std::ostringstream out;
  out << "name,config_hash,seeds,label,share,agent,reward_mean,reward_sd,return_mean,return_sd\n";
  for (const GroupSummary& g : groups) {
    for (const auto& [label, share] : g.label_share) {
      for (std::size_t i = 0; i < g.step_reward.size(); ++i) {
        out << g.name << ',' << g.config_hash << ',' << g.seeds << ',' << label << ',' << number(share) << ','
            << i + 1 << ',' << number(g.step_reward[i].mean) << ',' << number(g.step_reward[i].sd) << ','
            << number(g.episode_return[i].mean) << ',' << number(g.episode_return[i].sd) << '\n';
      }
    }
  }
  return out.str();
}

std::string summary_text(const std::vector<GroupSummary>& groups) {
  std::ostringstream out;
  for (const GroupSummary& g : groups) {
    out << g.name << "  [" << g.config_hash << "]  " << g.seeds << " seed" << (g.seeds == 1 ? "" : "s") << '\n';
    if (!(g.label_share.size() == 1 && g.label_share.count("-"))) {
      out << "  outcomes:";
      for (const auto& [label, share] : g.label_share) out << "  " << label << ' ' << fixed(100.0 * share, 1) << '%';
      out << '\n';
    }
    for (std::size_t i = 0; i < g.step_reward.size(); ++i) {
      out << "  agent " << i + 1 << ": reward/step " << mean_sd_text(g.step_reward[i]) << "   return "
          << mean_sd_text(g.episode_return[i]) << '\n';
    }
    out << "  team return " << mean_sd_text(g.team_return);
    if (!std::isnan(g.se_rate.mean)) out << "   SE steps " << mean_sd_text(g.se_rate);
    if (!std::isnan(g.collision_rate.mean)) out << "   collisions " << mean_sd_text(g.collision_rate);
    out << '\n';
  }
  return out.str();
}

}  // namespace step::harness
