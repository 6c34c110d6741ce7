#include "step/core/tape.hpp"

#include "step/core/errors.hpp"

namespace step::core {

const Tensor& Var::value() const {
  if (!tape_) throw ContractError("use of an unbound Var");
  return tape_->value(id_);
}

bool GradAccess::needs(std::size_t k) const { return tape_.requires_grad(parents_.at(k)); }

Tensor& GradAccess::operator[](std::size_t k) {
  const std::size_t id = parents_.at(k);
  auto& slot = grads_[id];
  if (!slot) slot.emplace(tape_.value(id).shape());
  return *slot;
}

Var Tape::leaf(std::string name, Tensor value) {
  if (leaves_.contains(name)) throw ContractError("leaf '" + name + "' registered twice on one tape");
  require_finite(value, "leaf '" + name + "'");
  nodes_.push_back(Node{std::move(value), {}, {}, true});
  const std::size_t id = nodes_.size() - 1;
  leaves_.emplace(std::move(name), id);
  return Var(this, id);
}

Var Tape::constant(Tensor value) {
  require_finite(value, "constant");
  nodes_.push_back(Node{std::move(value), {}, {}, false});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, const std::vector<Var>& parents, BackwardFn backward, std::string_view op) {
  require_finite(value, op);
  Node node{std::move(value), {}, std::move(backward), false};
  node.parents.reserve(parents.size());
  for (const Var& p : parents) {
    if (p.tape() != this) throw ContractError(std::string(op) + ": operand recorded on a different tape");
    node.parents.push_back(p.id());
    node.requires_grad = node.requires_grad || nodes_[p.id()].requires_grad;
  }
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Gradients Tape::backward(const Var& loss) {
  if (loss.tape() != this) throw ContractError("backward: loss belongs to a different tape");
  if (loss.value().size() != 1) {
    throw ContractError("backward: loss must be scalar, got shape " + shape_string(loss.shape()));
  }
  std::vector<std::optional<Tensor>> grads(nodes_.size());
  grads[loss.id()].emplace(loss.shape(), 1.0);

  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (!grads[id] || !node.requires_grad || !node.backward) continue;
    GradAccess access(*this, grads, node.parents);
    node.backward(*grads[id], access);
  }

  Gradients out;
  for (const auto& [name, id] : leaves_) {
    if (grads[id]) {
      require_finite(*grads[id], "gradient of leaf '" + name + "'");
      out.emplace(name, std::move(*grads[id]));
    } else {
      out.emplace(name, Tensor(nodes_[id].value.shape()));
    }
  }
  return out;
}

}  // namespace step::core
