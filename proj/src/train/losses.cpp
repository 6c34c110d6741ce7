#include "step/train/losses.hpp"

#include <algorithm>

#include "step/core/distributions.hpp"
#include "step/core/errors.hpp"
#include "step/core/ops.hpp"

namespace step::train {

using core::Shape;
using core::Tensor;
using core::Var;

namespace {

Tensor column(std::span<const double> v) { return Tensor(Shape{v.size()}, std::vector<double>(v.begin(), v.end())); }

}  // namespace

double clipped_surrogate(double ratio, double advantage, double clip) {
  return std::min(ratio * advantage, std::clamp(ratio, 1.0 - clip, 1.0 + clip) * advantage);
}

Var action_log_prob(const policy::HeadVars& head, const Minibatch& mb, bool discrete) {
  if (discrete) return core::categorical_log_prob(head.output, mb.actions);
  return core::gaussian_log_prob(head.output, head.log_std, mb.action_values);
}

Var mean_entropy(const policy::HeadVars& head, bool discrete) {
  if (discrete) return core::mean(core::categorical_entropy(head.output));
  return core::gaussian_entropy(head.log_std);
}

ActorLoss ppo_actor_loss(const policy::HeadVars& head, const Minibatch& mb, bool discrete, double clip,
                         double entropy_coef) {
  core::Tape& tape = *head.output.tape();
  const Var logp = action_log_prob(head, mb, discrete);
  const Var ratio = core::exp(core::sub(logp, tape.constant(column(mb.old_log_probs))));
  const Var adv = tape.constant(column(mb.advantages));
  const Var unclipped = core::mul(ratio, adv);
  const Var clipped = core::mul(core::clamp(ratio, 1.0 - clip, 1.0 + clip), adv);
  ActorLoss out;
  out.surrogate = core::mean(core::minimum(unclipped, clipped));
  out.entropy = mean_entropy(head, discrete);
  out.lh = tape.constant(Tensor::scalar(0.0));
  out.loss = core::sub(core::scale(out.surrogate, -1.0), core::scale(out.entropy, entropy_coef));
  return out;
}

Var hypernet_regularizer(const policy::NLevelPolicy& model, const core::VarMap& vars, std::size_t agent,
                         std::span<const Tensor> anchors, double beta) {
  core::Tape& tape = *vars.begin()->second.tape();
  if (agent == 0 || beta == 0.0) return tape.constant(Tensor::scalar(0.0));
  if (anchors.size() < agent) throw core::ContractError("hypernet_regularizer needs one anchor per superior agent");
  Var total;
  for (std::size_t j = 0; j < agent; ++j) {
    const Var diff = core::sub(model.generate_target_params(vars, j), tape.constant(anchors[j]));
    const Var term = core::sum(core::square(diff));
    total = total.valid() ? core::add(total, term) : term;
  }
  return core::scale(total, beta / static_cast<double>(agent));
}

ActorLoss step_actor_loss(const policy::NLevelPolicy& model, const core::VarMap& vars, const Minibatch& mb,
                          std::size_t agent, std::span<const Tensor> anchors, double clip, double entropy_coef,
                          double beta) {
  core::Tape& tape = *vars.begin()->second.tape();
  const policy::HeadVars head = model.forward(vars, tape.constant(mb.actor_inputs), agent);
  ActorLoss out = ppo_actor_loss(head, mb, model.arch().discrete(), clip, entropy_coef);
  out.lh = hypernet_regularizer(model, vars, agent, anchors, beta);
  out.loss = core::add(out.loss, out.lh);
  return out;
}

Var critic_loss(const Var& values, std::span<const double> old_values, std::span<const double> returns,
                double value_clip) {
  core::Tape& tape = *values.tape();
  const Var old = tape.constant(column(old_values));
  const Var ret = tape.constant(column(returns));
  const Var clipped = core::add(old, core::clamp(core::sub(values, old), -value_clip, value_clip));
  const Var unclipped_err = core::square(core::sub(values, ret));
  const Var clipped_err = core::square(core::sub(clipped, ret));
  return core::mean(core::maximum(unclipped_err, clipped_err));
}

}  // namespace step::train
