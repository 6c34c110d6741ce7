#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "step/harness/report.hpp"

namespace step::harness {

struct SweepPoint {
  std::string value;
  RunOutcome outcome;
  GroupSummary summary;
  /// (step, team return averaged over seeds) at each evaluation.
  std::vector<std::pair<std::size_t, double>> curve;
};

/// Runs `base` once per value of the dotted `param`, each over the base
/// seeds. Run names get a `_<key>=<value>` suffix.
std::vector<SweepPoint> run_sweep(const Json& base, const std::string& param, const std::vector<std::string>& values,
                                  std::size_t jobs, std::ostream* log = nullptr);

/// One row per value: SE share on matrix games, final team return otherwise.
std::string sweep_table(const std::string& param, const std::vector<SweepPoint>& points);
std::string sweep_curves_csv(const std::string& param, const std::vector<SweepPoint>& points);

}  // namespace step::harness
