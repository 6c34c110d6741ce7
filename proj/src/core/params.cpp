#include "step/core/params.hpp"

#include "step/core/errors.hpp"

namespace step::core {

void ParamSet::set(std::string name, Tensor value) {
  require_finite(value, "parameter '" + name + "'");
  tensors_.insert_or_assign(std::move(name), std::move(value));
}

const Tensor& ParamSet::at(std::string_view name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw ContractError("unknown parameter '" + std::string(name) + "'");
  return it->second;
}

Tensor& ParamSet::at(std::string_view name) {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw ContractError("unknown parameter '" + std::string(name) + "'");
  return it->second;
}

bool ParamSet::contains(std::string_view name) const { return tensors_.find(name) != tensors_.end(); }

std::size_t ParamSet::count() const { return count(""); }

std::size_t ParamSet::count(std::string_view prefix) const {
  std::size_t total = 0;
  for (const auto& [name, t] : tensors_) {
    if (name.starts_with(prefix)) total += t.size();
  }
  return total;
}

VarMap ParamSet::bind(Tape& tape) const {
  VarMap out;
  for (const auto& [name, t] : tensors_) out.emplace(name, tape.leaf(name, t));
  return out;
}

ParamSet ParamSet::subset(std::string_view prefix) const {
  ParamSet out;
  for (const auto& [name, t] : tensors_) {
    if (name.starts_with(prefix)) out.tensors_.emplace(name, t);
  }
  return out;
}

}  // namespace step::core
