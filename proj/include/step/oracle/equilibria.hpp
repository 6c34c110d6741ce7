#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "step/oracle/matrix_game.hpp"

namespace step::oracle {

class UnsupportedClaim : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct EquilibriumReport {
  std::vector<JointAction> pure_ne;
  std::optional<JointAction> se_path;
  std::vector<double> se_payoffs;
  bool unique_ne = false;
  bool unique_se = false;
  /// SE payoffs weakly dominate every pure-NE payoff vector, strictly somewhere.
  bool se_pareto_dominates_ne = false;
  std::vector<std::string> notes;
};

/// Joint actions where no agent strictly gains from a unilateral deviation,
/// in increasing flat-index order.
std::vector<JointAction> enumerate_pure_ne(const MatrixGame& game);

/// Whether `joint` survives every unilateral deviation.
bool is_pure_ne(const MatrixGame& game, const JointAction& joint);

/// Pure-strategy n-level Stackelberg equilibrium by backward induction over
/// the game's priority ordering. Ties go to the lowest action index; any tie
/// on the equilibrium path clears `unique_se`.
EquilibriumReport stackelberg_se(const MatrixGame& game);

/// Action the agent at `level` picks after the prefix `prefix` (actions of
/// levels 0..level-1, in level order), with the full induced continuation.
/// Returns the completed joint action indexed by agent id.
JointAction best_response_chain(const MatrixGame& game, const std::vector<std::size_t>& prefix);

struct ClaimResult {
  std::string claim;
  bool passed = false;
  std::string note;
};

/// Checks claims named "unique_ne", "unique_se" or "pareto" against the
/// oracle. Claims about mixed equilibria raise UnsupportedClaim.
std::vector<ClaimResult> verify_claims(const MatrixGame& game, const std::vector<std::string>& claims);

struct MixedProfile {
  std::vector<double> row;
  std::vector<double> col;
  double row_payoff = 0.0;
  double col_payoff = 0.0;
};

struct MixedNeResult {
  std::vector<MixedProfile> profiles;
  /// Some support admits a continuum of equilibria or more best responses
  /// than its size; the listed profiles are then not exhaustive.
  bool degenerate = false;
};

/// Two-player support enumeration for games up to 3x3, with 1e-9
/// feasibility tolerance.
MixedNeResult enumerate_mixed_ne_2p(const MatrixGame& game);

}  // namespace step::oracle
