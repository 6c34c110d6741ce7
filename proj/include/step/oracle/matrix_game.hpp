#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace step::oracle {

/// Zero-based action per agent, indexed by agent id.
using JointAction = std::vector<std::size_t>;

class GameError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Largest joint-action space the exhaustive solvers accept.
inline constexpr std::size_t kMaxJointActions = 1'000'000;

/// n-player normal-form game with a Stackelberg priority ordering.
///
/// Payoff tensor i holds agent i's payoff for every joint action, flattened
/// row-major with agent 0's action as the slowest-varying index. `ordering[k]`
/// is the agent that decides at level k (level 0 leads).
class MatrixGame {
 public:
  MatrixGame(std::vector<std::size_t> action_counts, std::vector<std::vector<double>> payoffs,
             std::vector<std::size_t> ordering = {});

  std::size_t num_agents() const { return action_counts_.size(); }
  std::size_t action_count(std::size_t agent) const { return action_counts_.at(agent); }
  const std::vector<std::size_t>& action_counts() const { return action_counts_; }
  const std::vector<std::size_t>& ordering() const { return ordering_; }
  std::size_t joint_count() const { return joint_count_; }

  std::size_t flat_index(const JointAction& joint) const;
  JointAction joint_action(std::size_t flat) const;

  double payoff(std::size_t agent, const JointAction& joint) const;
  std::vector<double> payoffs(const JointAction& joint) const;
  const std::vector<double>& payoff_tensor(std::size_t agent) const { return payoffs_.at(agent); }

  /// Same payoffs under a different priority ordering.
  MatrixGame with_ordering(std::vector<std::size_t> ordering) const;

 private:
  std::vector<std::size_t> action_counts_;
  std::vector<std::vector<double>> payoffs_;
  std::vector<std::size_t> ordering_;
  std::size_t joint_count_ = 1;
};

/// Common-payoff Penalty game: rows (k,k,10), (k,2,k), (8,k,k).
MatrixGame penalty_game(double k);
/// General-sum Mixing game with a unique pure NE (2,2) and unique SE (1,1).
MatrixGame mixing_game();
/// Prisoner's dilemma with T=5, R=3, P=1, S=0; action 0 cooperates, 1 defects.
MatrixGame prisoners_dilemma();
MatrixGame matching_pennies();

/// Formats a joint action 1-based, e.g. "(1,3)".
std::string format_joint(const JointAction& joint);

}  // namespace step::oracle
