#include "step/core/kernels.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "step/core/errors.hpp"

namespace step::core::kernel {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using Map = Eigen::Map<RowMat>;

ConstMap as_matrix(const Tensor& t) {
  return ConstMap(t.raw(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols()));
}

Map as_matrix(Tensor& t) {
  return Map(t.raw(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols()));
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() > 2 || b.rank() != 2) {
    throw DimensionError("matmul expects a rank<=2 lhs and a matrix rhs, got " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()));
  }
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul inner dimensions differ: " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()));
  }
  Tensor out(Shape{a.rows(), b.cols()});
  as_matrix(out).noalias() = as_matrix(a) * as_matrix(b);
  return out;
}

void matmul_tn_acc(const Tensor& a, const Tensor& g, Tensor& out) {
  as_matrix(out).noalias() += as_matrix(a).transpose() * as_matrix(g);
}

void matmul_nt_acc(const Tensor& g, const Tensor& b, Tensor& out) {
  as_matrix(out).noalias() += as_matrix(g) * as_matrix(b).transpose();
}

Tensor add_row(const Tensor& x, const Tensor& bias) {
  if (bias.size() != x.cols()) {
    throw DimensionError("bias of shape " + shape_string(bias.shape()) + " does not match rows of width " +
                         std::to_string(x.cols()));
  }
  Tensor out = x;
  const std::size_t cols = x.cols();
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double* row = out.raw() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) row[c] += bias[c];
  }
  return out;
}

Tensor tanh(const Tensor& x) {
  Tensor out = x;
  for (double& v : out.values()) v = std::tanh(v);
  return out;
}

Tensor log_softmax_rows(const Tensor& x) {
  Tensor out = x;
  const std::size_t cols = x.cols();
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double* row = out.raw() + r * cols;
    const double mx = *std::max_element(row, row + cols);
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) total += std::exp(row[c] - mx);
    const double lse = mx + std::log(total);
    for (std::size_t c = 0; c < cols; ++c) row[c] -= lse;
  }
  return out;
}

}  // namespace step::core::kernel
