#include "step/oracle/equilibria.hpp"

#include <algorithm>
#include <cmath>

namespace step::oracle {
namespace {

struct Induced {
  JointAction joint;
  bool tie = false;
};

Induced induce(const MatrixGame& game, std::size_t level, JointAction& joint) {
  if (level == game.num_agents()) return {joint, false};
  const std::size_t agent = game.ordering()[level];
  Induced best;
  double best_value = 0.0;
  bool have = false;
  bool tie_here = false;
  for (std::size_t a = 0; a < game.action_count(agent); ++a) {
    joint[agent] = a;
    Induced r = induce(game, level + 1, joint);
    const double v = game.payoff(agent, r.joint);
    if (!have || v > best_value) {
      best = std::move(r);
      best_value = v;
      have = true;
      tie_here = false;
    } else if (v == best_value) {
      tie_here = true;
    }
  }
  best.tie = best.tie || tie_here;
  return best;
}

bool weakly_dominates_strictly(const std::vector<double>& a, const std::vector<double>& b) {
  bool strict = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) return false;
    if (a[i] > b[i]) strict = true;
  }
  return strict;
}

}  // namespace

bool is_pure_ne(const MatrixGame& game, const JointAction& joint) {
  JointAction probe = joint;
  for (std::size_t agent = 0; agent < game.num_agents(); ++agent) {
    const double current = game.payoff(agent, joint);
    for (std::size_t a = 0; a < game.action_count(agent); ++a) {
      probe[agent] = a;
      if (game.payoff(agent, probe) > current) return false;
    }
    probe[agent] = joint[agent];
  }
  return true;
}

std::vector<JointAction> enumerate_pure_ne(const MatrixGame& game) {
  std::vector<JointAction> out;
  for (std::size_t flat = 0; flat < game.joint_count(); ++flat) {
    JointAction joint = game.joint_action(flat);
    if (is_pure_ne(game, joint)) out.push_back(std::move(joint));
  }
  return out;
}

JointAction best_response_chain(const MatrixGame& game, const std::vector<std::size_t>& prefix) {
  if (prefix.size() > game.num_agents()) throw GameError("prefix longer than the number of agents");
  JointAction joint(game.num_agents(), 0);
  for (std::size_t level = 0; level < prefix.size(); ++level) {
    const std::size_t agent = game.ordering()[level];
    if (prefix[level] >= game.action_count(agent)) throw GameError("prefix action out of range");
    joint[agent] = prefix[level];
  }
  return induce(game, prefix.size(), joint).joint;
}

EquilibriumReport stackelberg_se(const MatrixGame& game) {
  EquilibriumReport report;
  report.pure_ne = enumerate_pure_ne(game);
  report.unique_ne = report.pure_ne.size() == 1;

  JointAction scratch(game.num_agents(), 0);
  Induced se = induce(game, 0, scratch);
  report.se_path = se.joint;
  report.se_payoffs = game.payoffs(se.joint);
  report.unique_se = !se.tie;
  if (se.tie) report.notes.push_back("tie on the equilibrium path broken toward the lowest action index");

  if (report.pure_ne.empty()) {
    report.notes.push_back("no pure Nash equilibrium");
  } else {
    report.se_pareto_dominates_ne = std::all_of(report.pure_ne.begin(), report.pure_ne.end(), [&](const auto& ne) {
      return weakly_dominates_strictly(report.se_payoffs, game.payoffs(ne));
    });
  }
  return report;
}

std::vector<ClaimResult> verify_claims(const MatrixGame& game, const std::vector<std::string>& claims) {
  for (const auto& c : claims) {
    if (c.find("mixed") != std::string::npos) {
      throw UnsupportedClaim("claim '" + c + "' concerns mixed equilibria; only pure-strategy claims are checked");
    }
    if (c != "unique_ne" && c != "unique_se" && c != "pareto") throw UnsupportedClaim("unknown claim '" + c + "'");
  }
  const EquilibriumReport report = stackelberg_se(game);
  std::vector<ClaimResult> out;
  for (const auto& c : claims) {
    ClaimResult r{c, false, ""};
    if (c == "unique_ne") {
      r.passed = report.unique_ne;
      r.note = report.pure_ne.empty() ? "vacuous: the game has no pure Nash equilibrium"
                                      : std::to_string(report.pure_ne.size()) + " pure NE";
    } else if (c == "unique_se") {
      r.passed = report.unique_se;
      r.note = report.unique_se ? "no ties on the equilibrium path" : "tie on the equilibrium path";
    } else {
      r.passed = report.se_pareto_dominates_ne;
      r.note = report.pure_ne.empty() ? "vacuous: the game has no pure Nash equilibrium"
                                      : "SE payoffs compared with every pure NE";
    }
    out.push_back(std::move(r));
  }
  return out;
}

namespace {

constexpr double kTol = 1e-9;

// Solves the square system m * x = rhs in place by Gaussian elimination with
// partial pivoting. Returns false when the matrix is singular.
bool solve_linear(std::vector<std::vector<double>> m, std::vector<double> rhs, std::vector<double>& x) {
  const std::size_t n = rhs.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
    if (std::abs(m[pivot][col]) < 1e-12) return false;
    std::swap(m[pivot], m[col]);
    std::swap(rhs[pivot], rhs[col]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = m[r][col] / m[col][col];
      for (std::size_t c = col; c < n; ++c) m[r][c] -= f * m[col][c];
      rhs[r] -= f * rhs[col];
    }
  }
  x.assign(n, 0.0);
  for (std::size_t r = n; r-- > 0;) {
    double acc = rhs[r];
    for (std::size_t c = r + 1; c < n; ++c) acc -= m[r][c] * x[c];
    x[r] = acc / m[r][r];
  }
  return true;
}

std::vector<std::vector<std::size_t>> nonempty_subsets(std::size_t n) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t mask = 1; mask < (std::size_t{1} << n); ++mask) {
    std::vector<std::size_t> s;
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (std::size_t{1} << i)) s.push_back(i);
    out.push_back(std::move(s));
  }
  return out;
}

// Mixes over `support` of the opponent so that every strategy in `own` earns
// the same value under `pay(own_i, opp_j)`. Returns the full-length mixture and
// the common value.
template <typename Pay>
bool indifference(const std::vector<std::size_t>& own, const std::vector<std::size_t>& support, std::size_t opp_count,
                  Pay pay, std::vector<double>& mix, double& value) {
  const std::size_t k = support.size();
  // Unknowns: probabilities on `support`, then the value.
  std::vector<std::vector<double>> m(k + 1, std::vector<double>(k + 1, 0.0));
  std::vector<double> rhs(k + 1, 0.0);
  for (std::size_t r = 0; r < own.size(); ++r) {
    for (std::size_t c = 0; c < k; ++c) m[r][c] = pay(own[r], support[c]);
    m[r][k] = -1.0;
  }
  for (std::size_t c = 0; c < k; ++c) m[k][c] = 1.0;
  rhs[k] = 1.0;
  std::vector<double> x;
  if (!solve_linear(std::move(m), std::move(rhs), x)) return false;
  mix.assign(opp_count, 0.0);
  for (std::size_t c = 0; c < k; ++c) mix[support[c]] = x[c];
  value = x[k];
  return true;
}

}  // namespace

MixedNeResult enumerate_mixed_ne_2p(const MatrixGame& game) {
  if (game.num_agents() != 2) throw UnsupportedClaim("mixed NE enumeration supports exactly two players");
  const std::size_t rows = game.action_count(0);
  const std::size_t cols = game.action_count(1);
  if (rows > 3 || cols > 3) throw UnsupportedClaim("mixed NE enumeration supports at most 3x3 games");

  auto A = [&](std::size_t i, std::size_t j) { return game.payoff(0, {i, j}); };
  auto B = [&](std::size_t i, std::size_t j) { return game.payoff(1, {i, j}); };

  MixedNeResult result;
  for (const auto& I : nonempty_subsets(rows)) {
    for (const auto& J : nonempty_subsets(cols)) {
      if (I.size() != J.size()) continue;
      std::vector<double> y, x;
      double u = 0.0, v = 0.0;
      const bool ok_y = indifference(I, J, cols, A, y, u);
      const bool ok_x = indifference(J, I, rows, [&](std::size_t j, std::size_t i) { return B(i, j); }, x, v);
      if (!ok_y || !ok_x) {
        result.degenerate = true;
        continue;
      }
      if (std::any_of(x.begin(), x.end(), [](double p) { return p < -kTol; }) ||
          std::any_of(y.begin(), y.end(), [](double p) { return p < -kTol; })) {
        continue;
      }
      for (double& p : x) p = std::max(p, 0.0);
      for (double& p : y) p = std::max(p, 0.0);

      std::size_t row_best = 0, col_best = 0;
      bool stable = true;
      for (std::size_t i = 0; i < rows; ++i) {
        double val = 0.0;
        for (std::size_t j = 0; j < cols; ++j) val += A(i, j) * y[j];
        if (val > u + kTol) stable = false;
        if (std::abs(val - u) <= kTol) ++row_best;
      }
      for (std::size_t j = 0; j < cols; ++j) {
        double val = 0.0;
        for (std::size_t i = 0; i < rows; ++i) val += B(i, j) * x[i];
        if (val > v + kTol) stable = false;
        if (std::abs(val - v) <= kTol) ++col_best;
      }
      if (!stable) continue;
      if (row_best > I.size() || col_best > J.size()) result.degenerate = true;

      const bool seen = std::any_of(result.profiles.begin(), result.profiles.end(), [&](const MixedProfile& p) {
        for (std::size_t i = 0; i < rows; ++i)
          if (std::abs(p.row[i] - x[i]) > 1e-7) return false;
        for (std::size_t j = 0; j < cols; ++j)
          if (std::abs(p.col[j] - y[j]) > 1e-7) return false;
        return true;
      });
      if (!seen) result.profiles.push_back({x, y, u, v});
    }
  }
  return result;
}

}  // namespace step::oracle
