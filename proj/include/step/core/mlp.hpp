#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "step/core/params.hpp"
#include "step/core/rng.hpp"

namespace step::core {

enum class Activation { kTanh, kIdentity };

/// Non-owning view of one affine layer.
struct DenseLayer {
  const Tensor& weight;  // [in, out]
  const Tensor& bias;    // [out]
  Activation activation = Activation::kIdentity;
};

struct DenseLayerVar {
  Var weight;
  Var bias;
  Activation activation = Activation::kIdentity;
};

/// Affine + activation stack on a batch of rows `input[batch, in]`.
Tensor mlp_forward(std::span<const DenseLayer> layers, const Tensor& input);
Var mlp_forward(std::span<const DenseLayerVar> layers, const Var& input);

/// Parameter count of a dense stack with the given layer widths.
std::size_t dense_parameter_count(std::span<const std::size_t> widths);

/// Glorot-uniform bound sqrt(6 / (fan_in + fan_out)).
double glorot_bound(std::size_t fan_in, std::size_t fan_out);

/// A named multilayer perceptron whose weights live in a ParamSet under
/// `<prefix>/l<k>/w` and `<prefix>/l<k>/b`. Hidden layers use tanh.
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::string prefix, std::vector<std::size_t> widths, Activation output = Activation::kIdentity);

  /// Glorot-uniform weights, zero biases; the last layer is scaled by `final_scale`.
  void init(ParamSet& params, Rng& rng, double final_scale = 1.0) const;

  Tensor forward(const ParamSet& params, const Tensor& input) const;
  Var forward(const VarMap& vars, const Var& input) const;

  std::size_t parameter_count() const { return dense_parameter_count(widths_); }
  std::size_t input_width() const { return widths_.front(); }
  std::size_t output_width() const { return widths_.back(); }
  const std::vector<std::size_t>& widths() const { return widths_; }
  const std::string& prefix() const { return prefix_; }

  std::string weight_name(std::size_t layer) const;
  std::string bias_name(std::size_t layer) const;

 private:
  Activation layer_activation(std::size_t layer) const;

  std::string prefix_;
  std::vector<std::size_t> widths_;
  Activation output_ = Activation::kIdentity;
};

}  // namespace step::core
