#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "step/core/tensor.hpp"

namespace step::core {

class Tape;

/// Handle to a value recorded on a tape.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

using Gradients = std::map<std::string, Tensor>;

/// Lazily-zeroed gradient buffers for the parents of the node being replayed.
class GradAccess {
 public:
  /// Whether parent k participates in differentiation at all.
  bool needs(std::size_t k) const;
  /// Accumulation buffer for parent k, zero-initialised on first use.
  Tensor& operator[](std::size_t k);

 private:
  friend class Tape;
  GradAccess(Tape& tape, std::vector<std::optional<Tensor>>& grads, const std::vector<std::size_t>& parents)
      : tape_(tape), grads_(grads), parents_(parents) {}

  Tape& tape_;
  std::vector<std::optional<Tensor>>& grads_;
  const std::vector<std::size_t>& parents_;
};

/// Reverse-mode computation record.
///
/// Nodes are appended in evaluation order, so replaying ids in descending
/// order is a valid topological traversal. Leaves are registered by name and
/// `backward` reports a gradient for every one of them, exact zeros for leaves
/// the loss does not depend on. Each tape owns its gradient state; tapes share
/// nothing.
class Tape {
 public:
  using BackwardFn = std::function<void(const Tensor& out_grad, GradAccess& parents)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(std::string name, Tensor value);
  Var constant(Tensor value);
  Var record(Tensor value, const std::vector<Var>& parents, BackwardFn backward, std::string_view op);

  /// Gradients of a scalar `loss` with respect to every registered leaf.
  Gradients backward(const Var& loss);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  std::size_t size() const { return nodes_.size(); }
  const std::map<std::string, std::size_t>& leaves() const { return leaves_; }

 private:
  struct Node {
    Tensor value;
    std::vector<std::size_t> parents;
    BackwardFn backward;
    bool requires_grad = false;
  };

  std::deque<Node> nodes_;
  std::map<std::string, std::size_t> leaves_;
};

}  // namespace step::core
