#pragma once

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include "step/core/rng.hpp"
#include "step/core/tape.hpp"

namespace step::core {

inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 2.0;

class Categorical {
 public:
  explicit Categorical(std::vector<double> logits);

  std::size_t size() const { return logits_.size(); }
  const std::vector<double>& logits() const { return logits_; }
  const std::vector<double>& probs() const { return probs_; }

  std::size_t sample(Rng& rng) const;
  /// Highest-probability action, lowest index on ties.
  std::size_t mode() const;
  double log_prob(std::size_t action) const;
  double entropy() const;

 private:
  std::vector<double> logits_;
  std::vector<double> log_probs_;
  std::vector<double> probs_;
};

class DiagGaussian {
 public:
  /// `log_std` is clamped to [kLogStdMin, kLogStdMax].
  DiagGaussian(std::vector<double> mean, std::vector<double> log_std);

  std::size_t dim() const { return mean_.size(); }
  const std::vector<double>& mean() const { return mean_; }
  const std::vector<double>& log_std() const { return log_std_; }

  std::vector<double> sample(Rng& rng) const;
  std::vector<double> mode() const { return mean_; }
  double log_prob(std::span<const double> action) const;
  double entropy() const;

 private:
  std::vector<double> mean_;
  std::vector<double> log_std_;
};

using ActionDistribution = std::variant<Categorical, DiagGaussian>;

/// A sampled action in either space; `index` for categorical, `values` for Gaussian.
struct SampledAction {
  std::size_t index = 0;
  std::vector<double> values;
};

SampledAction dist_sample(const ActionDistribution& d, Rng& rng);
SampledAction dist_mode(const ActionDistribution& d);
double dist_log_prob(const ActionDistribution& d, const SampledAction& action);
double dist_entropy(const ActionDistribution& d);

// Batched, differentiable counterparts used by the losses.

/// log pi(a_r | row r) for logits[B,k]; shape [B].
Var categorical_log_prob(const Var& logits, std::span<const std::size_t> actions);
/// Per-row entropy of logits[B,k]; shape [B].
Var categorical_entropy(const Var& logits);
/// log N(actions | mean, exp(clamp(log_std))) for mean[B,d], log_std[d], actions[B,d]; shape [B].
Var gaussian_log_prob(const Var& mean, const Var& log_std, const Tensor& actions);
/// Entropy of the diagonal Gaussian (state independent); shape [].
Var gaussian_entropy(const Var& log_std);

}  // namespace step::core
