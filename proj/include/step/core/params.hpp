#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>

#include "step/core/tape.hpp"
#include "step/core/tensor.hpp"

namespace step::core {

using VarMap = std::map<std::string, Var>;

/// Named trainable tensors, iterated in name order.
class ParamSet {
 public:
  void set(std::string name, Tensor value);
  const Tensor& at(std::string_view name) const;
  Tensor& at(std::string_view name);
  bool contains(std::string_view name) const;

  /// Total number of scalar values across all tensors.
  std::size_t count() const;
  /// Number of scalar values in tensors whose name starts with `prefix`.
  std::size_t count(std::string_view prefix) const;

  /// Registers every tensor as a named leaf on `tape`.
  VarMap bind(Tape& tape) const;
  /// Subset whose names start with `prefix`.
  ParamSet subset(std::string_view prefix) const;

  auto begin() const { return tensors_.begin(); }
  auto end() const { return tensors_.end(); }
  std::size_t size() const { return tensors_.size(); }

  friend bool operator==(const ParamSet&, const ParamSet&) = default;

 private:
  std::map<std::string, Tensor, std::less<>> tensors_;
};

}  // namespace step::core
