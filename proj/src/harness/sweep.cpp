#include "step/harness/sweep.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace step::harness {

namespace {

std::string fixed(double v, int digits = 3) {
  if (std::isnan(v)) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

double team_mean(const train::Evaluation& ev) {
  double s = 0.0;
  for (double r : ev.episode_returns) s += r;
  return ev.episode_returns.empty() ? std::nan("") : s / static_cast<double>(ev.episode_returns.size());
}

}  // namespace

std::vector<SweepPoint> run_sweep(const Json& base, const std::string& param, const std::vector<std::string>& values,
                                  std::size_t jobs, std::ostream* log) {
  if (values.empty()) throw train::ConfigError("sweep needs at least one value");
  const std::string key = param.substr(param.find('.') + 1);
  const std::string base_name = parse_run_config(base).name;
  std::vector<SweepPoint> points;
  for (const std::string& value : values) {
    Json doc = base;
    apply_override(doc, param + "=" + value);
    doc["run"]["name"] = base_name + "_" + key + "=" + value;
    const RunConfig config = parse_run_config(doc);
    SweepPoint p;
    p.value = value;
    p.outcome = run_all(config, jobs, log);
    if (!p.outcome.ok()) {
      points.push_back(std::move(p));
      continue;
    }
    std::vector<SeedRecord> records;
    for (const SeedOutcome& s : p.outcome.seeds) records.push_back(record_from(config, s));
    p.summary = summarize(records).front();
    const auto& first = p.outcome.seeds.front().metrics;
    for (std::size_t k = 0; k < first.size(); ++k) {
      double sum = 0.0;
      for (const SeedOutcome& s : p.outcome.seeds) sum += team_mean(s.metrics.at(k).eval);
      p.curve.emplace_back(first[k].step, sum / static_cast<double>(p.outcome.seeds.size()));
    }
    points.push_back(std::move(p));
  }
  return points;
}

std::string sweep_table(const std::string& param, const std::vector<SweepPoint>& points) {
  std::ostringstream out;
  out << param << ",seeds,se_share,team_return_mean,team_return_sd,collision_rate\n";
  for (const SweepPoint& p : points) {
    if (!p.outcome.ok()) {
      out << p.value << ",failed,,,,\n";
      continue;
    }
    const auto& g = p.summary;
    const auto se = g.label_share.find("SE");
    const bool matrix = !(g.label_share.size() == 1 && g.label_share.count("-"));
    out << p.value << ',' << g.seeds << ',' << (matrix ? fixed(se == g.label_share.end() ? 0.0 : se->second) : "-")
        << ',' << fixed(g.team_return.mean) << ',' << fixed(g.team_return.sd) << ',' << fixed(g.collision_rate.mean)
        << '\n';
  }
  return out.str();
}

std::string sweep_curves_csv(const std::string& param, const std::vector<SweepPoint>& points) {
  std::ostringstream out;
  out << param << ",step,team_return\n";
  for (const SweepPoint& p : points) {
    for (const auto& [step, value] : p.curve) out << p.value << ',' << step << ',' << fixed(value, 6) << '\n';
  }
  return out.str();
}

}  // namespace step::harness
