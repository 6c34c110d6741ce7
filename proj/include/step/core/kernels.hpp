#pragma once

#include "step/core/tensor.hpp"

// Plain (tape-free) arithmetic shared by the inference path and the recorded
// ops, so both produce bit-identical values for the same inputs.
namespace step::core::kernel {

/// a[m,k] * b[k,n]. Rank-1 `a` is treated as a single row.
Tensor matmul(const Tensor& a, const Tensor& b);
/// out[k,n] += a[m,k]^T * g[m,n]
void matmul_tn_acc(const Tensor& a, const Tensor& g, Tensor& out);
/// out[m,k] += g[m,n] * b[k,n]^T
void matmul_nt_acc(const Tensor& g, const Tensor& b, Tensor& out);
/// x[m,n] + bias[n] broadcast over rows.
Tensor add_row(const Tensor& x, const Tensor& bias);
Tensor tanh(const Tensor& x);
/// Row-wise log-softmax of a [m,k] matrix.
Tensor log_softmax_rows(const Tensor& x);

}  // namespace step::core::kernel
