#include "step/oracle/matrix_game.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace step::oracle {

MatrixGame::MatrixGame(std::vector<std::size_t> action_counts, std::vector<std::vector<double>> payoffs,
                       std::vector<std::size_t> ordering)
    : action_counts_(std::move(action_counts)), payoffs_(std::move(payoffs)), ordering_(std::move(ordering)) {
  const std::size_t n = action_counts_.size();
  if (n == 0) throw GameError("game needs at least one agent");
  for (std::size_t i = 0; i < n; ++i) {
    if (action_counts_[i] == 0) throw GameError("agent " + std::to_string(i + 1) + " has no actions");
    if (joint_count_ > kMaxJointActions / action_counts_[i]) {
      throw GameError("joint-action space exceeds " + std::to_string(kMaxJointActions) + " entries");
    }
    joint_count_ *= action_counts_[i];
  }
  if (payoffs_.size() != n) {
    throw GameError("expected " + std::to_string(n) + " payoff tensors, got " + std::to_string(payoffs_.size()));
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (payoffs_[i].size() != joint_count_) {
      throw GameError("payoff tensor of agent " + std::to_string(i + 1) + " has " +
                      std::to_string(payoffs_[i].size()) + " entries, expected " + std::to_string(joint_count_));
    }
    for (double v : payoffs_[i]) {
      if (!std::isfinite(v)) throw GameError("payoff tensor of agent " + std::to_string(i + 1) + " is not finite");
    }
  }
  if (ordering_.empty()) {
    ordering_.resize(n);
    std::iota(ordering_.begin(), ordering_.end(), std::size_t{0});
  }
  std::vector<std::size_t> sorted = ordering_;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (sorted.size() != n || sorted[i] != i) throw GameError("ordering is not a permutation of the agents");
  }
}

std::size_t MatrixGame::flat_index(const JointAction& joint) const {
  if (joint.size() != num_agents()) throw GameError("joint action has wrong arity");
  std::size_t flat = 0;
  for (std::size_t i = 0; i < joint.size(); ++i) {
    if (joint[i] >= action_counts_[i]) {
      throw GameError("action " + std::to_string(joint[i] + 1) + " out of range for agent " + std::to_string(i + 1));
    }
    flat = flat * action_counts_[i] + joint[i];
  }
  return flat;
}

JointAction MatrixGame::joint_action(std::size_t flat) const {
  JointAction joint(num_agents());
  for (std::size_t i = num_agents(); i-- > 0;) {
    joint[i] = flat % action_counts_[i];
    flat /= action_counts_[i];
  }
  return joint;
}

double MatrixGame::payoff(std::size_t agent, const JointAction& joint) const {
  return payoffs_.at(agent)[flat_index(joint)];
}

std::vector<double> MatrixGame::payoffs(const JointAction& joint) const {
  const std::size_t flat = flat_index(joint);
  std::vector<double> out(num_agents());
  for (std::size_t i = 0; i < num_agents(); ++i) out[i] = payoffs_[i][flat];
  return out;
}

MatrixGame MatrixGame::with_ordering(std::vector<std::size_t> ordering) const {
  return MatrixGame(action_counts_, payoffs_, std::move(ordering));
}

MatrixGame penalty_game(double k) {
  std::vector<double> common{k, k, 10.0,  //
                             k, 2.0, k,   //
                             8.0, k, k};
  return MatrixGame({3, 3}, {common, common});
}

MatrixGame mixing_game() {
  std::vector<double> leader{0.0, -5.0, -5.0,  //
                             3.0, -1.0, -1.0,  //
                             -5.0, -5.0, -2.0};
  std::vector<double> follower{5.0, -5.0, -5.0,  //
                               -5.0, 1.0, -5.0,  //
                               -5.0, -5.0, 2.0};
  return MatrixGame({3, 3}, {leader, follower});
}

MatrixGame prisoners_dilemma() {
  // (C,C)=3,3  (C,D)=0,5  (D,C)=5,0  (D,D)=1,1
  return MatrixGame({2, 2}, {{3.0, 0.0, 5.0, 1.0}, {3.0, 5.0, 0.0, 1.0}});
}

MatrixGame matching_pennies() { return MatrixGame({2, 2}, {{1.0, -1.0, -1.0, 1.0}, {-1.0, 1.0, 1.0, -1.0}}); }

std::string format_joint(const JointAction& joint) {
  std::string out = "(";
  for (std::size_t i = 0; i < joint.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(joint[i] + 1);
  }
  return out + ")";
}

}  // namespace step::oracle
