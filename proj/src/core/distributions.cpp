#include "step/core/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "step/core/errors.hpp"
#include "step/core/kernels.hpp"
#include "step/core/ops.hpp"

namespace step::core {
namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * ln(2*pi)

void require_finite_values(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw NonFiniteError(std::string(what) + " contains a non-finite value");
  }
}

}  // namespace

Categorical::Categorical(std::vector<double> logits) : logits_(std::move(logits)) {
  if (logits_.empty()) throw ContractError("Categorical needs at least one logit");
  require_finite_values(logits_, "categorical logits");
  const Tensor lp = kernel::log_softmax_rows(Tensor::vector(logits_));
  log_probs_.assign(lp.values().begin(), lp.values().end());
  probs_.resize(log_probs_.size());
  for (std::size_t i = 0; i < probs_.size(); ++i) probs_[i] = std::exp(log_probs_[i]);
}

std::size_t Categorical::sample(Rng& rng) const {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < probs_.size(); ++i) {
    acc += probs_[i];
    if (u < acc) return i;
  }
  // Rounding left u above the final cumulative sum; take the last action with mass.
  for (std::size_t i = probs_.size(); i-- > 0;) {
    if (probs_[i] > 0.0) return i;
  }
  return probs_.size() - 1;
}

std::size_t Categorical::mode() const {
  return static_cast<std::size_t>(std::max_element(logits_.begin(), logits_.end()) - logits_.begin());
}

double Categorical::log_prob(std::size_t action) const {
  if (action >= log_probs_.size()) {
    throw ContractError("categorical action " + std::to_string(action) + " outside support of size " +
                        std::to_string(log_probs_.size()));
  }
  return log_probs_[action];
}

double Categorical::entropy() const {
  double h = 0.0;
  for (std::size_t i = 0; i < probs_.size(); ++i) h -= probs_[i] * log_probs_[i];
  return std::max(h, 0.0);
}

DiagGaussian::DiagGaussian(std::vector<double> mean, std::vector<double> log_std)
    : mean_(std::move(mean)), log_std_(std::move(log_std)) {
  if (mean_.size() != log_std_.size()) throw DimensionError("DiagGaussian mean and log_std sizes differ");
  require_finite_values(mean_, "gaussian mean");
  require_finite_values(log_std_, "gaussian log_std");
  for (double& s : log_std_) s = std::clamp(s, kLogStdMin, kLogStdMax);
}

std::vector<double> DiagGaussian::sample(Rng& rng) const {
  std::vector<double> out(mean_.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = mean_[i] + std::exp(log_std_[i]) * rng.normal();
  return out;
}

double DiagGaussian::log_prob(std::span<const double> action) const {
  if (action.size() != mean_.size()) {
    throw ContractError("gaussian action of dimension " + std::to_string(action.size()) + ", expected " +
                        std::to_string(mean_.size()));
  }
  require_finite_values(action, "gaussian action");
  double lp = 0.0;
  for (std::size_t i = 0; i < mean_.size(); ++i) {
    const double z = (action[i] - mean_[i]) * std::exp(-log_std_[i]);
    lp += -0.5 * z * z - log_std_[i] - kHalfLog2Pi;
  }
  return lp;
}

double DiagGaussian::entropy() const {
  double h = 0.0;
  for (double s : log_std_) h += s + 0.5 + kHalfLog2Pi;
  return h;
}

SampledAction dist_sample(const ActionDistribution& d, Rng& rng) {
  if (const auto* c = std::get_if<Categorical>(&d)) return {c->sample(rng), {}};
  return {0, std::get<DiagGaussian>(d).sample(rng)};
}

SampledAction dist_mode(const ActionDistribution& d) {
  if (const auto* c = std::get_if<Categorical>(&d)) return {c->mode(), {}};
  return {0, std::get<DiagGaussian>(d).mode()};
}

double dist_log_prob(const ActionDistribution& d, const SampledAction& action) {
  if (const auto* c = std::get_if<Categorical>(&d)) return c->log_prob(action.index);
  return std::get<DiagGaussian>(d).log_prob(action.values);
}

double dist_entropy(const ActionDistribution& d) {
  return std::visit([](const auto& dist) { return dist.entropy(); }, d);
}

Var categorical_log_prob(const Var& logits, std::span<const std::size_t> actions) {
  return pick(log_softmax_rows(logits), actions);
}

Var categorical_entropy(const Var& logits) {
  Var lp = log_softmax_rows(logits);
  return scale(row_sum(mul(exp(lp), lp)), -1.0);
}

Var gaussian_log_prob(const Var& mean, const Var& log_std, const Tensor& actions) {
  const std::size_t batch = mean.value().rows();
  const std::size_t dim = mean.value().cols();
  if (actions.rows() != batch || actions.cols() != dim || log_std.value().size() != dim) {
    throw DimensionError("gaussian_log_prob: mean " + shape_string(mean.shape()) + ", log_std " +
                         shape_string(log_std.shape()) + ", actions " + shape_string(actions.shape()));
  }
  Tape& tape = *mean.tape();
  Var ls = clamp(log_std, kLogStdMin, kLogStdMax);
  Var ls_rows = broadcast_rows(ls, batch);
  Var inv_std = exp(scale(ls_rows, -1.0));
  Var diff = sub(tape.constant(actions.reshaped(Shape{batch, dim})), mean);
  Var z = mul(diff, inv_std);
  Var per_dim = add_scalar(add(scale(square(z), -0.5), scale(ls_rows, -1.0)), -kHalfLog2Pi);
  return row_sum(per_dim);
}

Var gaussian_entropy(const Var& log_std) {
  Var ls = clamp(log_std, kLogStdMin, kLogStdMax);
  const double dim = static_cast<double>(log_std.value().size());
  return add_scalar(sum(ls), dim * (0.5 + kHalfLog2Pi));
}

}  // namespace step::core
