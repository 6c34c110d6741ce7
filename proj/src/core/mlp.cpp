#include "step/core/mlp.hpp"

#include <cmath>

#include "step/core/errors.hpp"
#include "step/core/kernels.hpp"
#include "step/core/ops.hpp"

namespace step::core {

Tensor mlp_forward(std::span<const DenseLayer> layers, const Tensor& input) {
  Tensor x = input;
  for (const DenseLayer& layer : layers) {
    x = kernel::add_row(kernel::matmul(x, layer.weight), layer.bias);
    if (layer.activation == Activation::kTanh) x = kernel::tanh(x);
  }
  require_finite(x, "mlp_forward");
  return x;
}

Var mlp_forward(std::span<const DenseLayerVar> layers, const Var& input) {
  Var x = input;
  for (const DenseLayerVar& layer : layers) {
    x = add_row(matmul(x, layer.weight), layer.bias);
    if (layer.activation == Activation::kTanh) x = tanh(x);
  }
  return x;
}

std::size_t dense_parameter_count(std::span<const std::size_t> widths) {
  std::size_t total = 0;
  for (std::size_t k = 0; k + 1 < widths.size(); ++k) total += widths[k] * widths[k + 1] + widths[k + 1];
  return total;
}

double glorot_bound(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

Mlp::Mlp(std::string prefix, std::vector<std::size_t> widths, Activation output)
    : prefix_(std::move(prefix)), widths_(std::move(widths)), output_(output) {
  if (widths_.size() < 2) throw ContractError("Mlp '" + prefix_ + "' needs at least input and output widths");
}

std::string Mlp::weight_name(std::size_t layer) const { return prefix_ + "/l" + std::to_string(layer) + "/w"; }
std::string Mlp::bias_name(std::size_t layer) const { return prefix_ + "/l" + std::to_string(layer) + "/b"; }

Activation Mlp::layer_activation(std::size_t layer) const {
  return layer + 2 == widths_.size() ? output_ : Activation::kTanh;
}

void Mlp::init(ParamSet& params, Rng& rng, double final_scale) const {
  for (std::size_t k = 0; k + 1 < widths_.size(); ++k) {
    const std::size_t in = widths_[k];
    const std::size_t out = widths_[k + 1];
    const double bound = glorot_bound(in, out) * (k + 2 == widths_.size() ? final_scale : 1.0);
    Tensor w(Shape{in, out});
    for (double& v : w.values()) v = rng.uniform(-bound, bound);
    params.set(weight_name(k), std::move(w));
    params.set(bias_name(k), Tensor(Shape{out}));
  }
}

Tensor Mlp::forward(const ParamSet& params, const Tensor& input) const {
  if (input.cols() != widths_.front()) {
    throw DimensionError("Mlp '" + prefix_ + "' expects input width " + std::to_string(widths_.front()) + ", got " +
                         std::to_string(input.cols()));
  }
  std::vector<DenseLayer> layers;
  layers.reserve(widths_.size() - 1);
  for (std::size_t k = 0; k + 1 < widths_.size(); ++k) {
    layers.push_back({params.at(weight_name(k)), params.at(bias_name(k)), layer_activation(k)});
  }
  return mlp_forward(layers, input);
}

Var Mlp::forward(const VarMap& vars, const Var& input) const {
  if (input.value().cols() != widths_.front()) {
    throw DimensionError("Mlp '" + prefix_ + "' expects input width " + std::to_string(widths_.front()) + ", got " +
                         std::to_string(input.value().cols()));
  }
  std::vector<DenseLayerVar> layers;
  layers.reserve(widths_.size() - 1);
  for (std::size_t k = 0; k + 1 < widths_.size(); ++k) {
    layers.push_back({vars.at(weight_name(k)), vars.at(bias_name(k)), layer_activation(k)});
  }
  return mlp_forward(layers, input);
}

}  // namespace step::core
