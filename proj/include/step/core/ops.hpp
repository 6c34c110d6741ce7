#pragma once

#include <cstddef>
#include <span>

#include "step/core/tape.hpp"

// Differentiable primitives. Every op validates shapes (DimensionError) and
// rejects non-finite outputs (NonFiniteError).
namespace step::core {

Var matmul(const Var& a, const Var& b);
/// x[m,n] + bias[n] broadcast over rows.
Var add_row(const Var& x, const Var& bias);
/// v[n] or v[1,n] repeated into [rows,n].
Var broadcast_rows(const Var& v, std::size_t rows);

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double factor);
Var add_scalar(const Var& a, double c);

Var tanh(const Var& a);
Var exp(const Var& a);
Var square(const Var& a);

/// Sum of all entries, shape [].
Var sum(const Var& a);
/// Mean of all entries, shape [].
Var mean(const Var& a);
/// Per-row sum of a [m,n] matrix, shape [m].
Var row_sum(const Var& a);

Var log_softmax_rows(const Var& logits);
/// out[r] = a[r, index[r]].
Var pick(const Var& a, std::span<const std::size_t> index);

/// Elementwise clamp; the gradient is passed only strictly inside (lo, hi).
Var clamp(const Var& a, double lo, double hi);
/// Elementwise min/max; ties route the gradient to the first operand.
Var minimum(const Var& a, const Var& b);
Var maximum(const Var& a, const Var& b);

/// Contiguous flat slice [offset, offset + prod(shape)) reshaped to `shape`.
Var slice(const Var& a, std::size_t offset, Shape shape);
Var reshape(const Var& a, Shape shape);

}  // namespace step::core
