#include "step/core/ops.hpp"

#include <cmath>

#include "step/core/errors.hpp"
#include "step/core/kernels.hpp"

namespace step::core {
namespace {

Tape& tape_of(const Var& a) {
  if (!a.valid()) throw ContractError("op on unbound Var");
  return *a.tape();
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shapes differ " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
}

template <typename F>
Tensor map_values(const Tensor& x, F f) {
  Tensor out = x;
  for (double& v : out.values()) v = f(v);
  return out;
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  Tensor out = kernel::matmul(a.value(), b.value());
  Tape& t = tape_of(a);
  return t.record(std::move(out), {a, b},
                  [&t, ia = a.id(), ib = b.id()](const Tensor& g, GradAccess& p) {
                    if (p.needs(0)) kernel::matmul_nt_acc(g, t.value(ib), p[0]);
                    if (p.needs(1)) kernel::matmul_tn_acc(t.value(ia), g, p[1]);
                  },
                  "matmul");
}

Var add_row(const Var& x, const Var& bias) {
  Tensor out = kernel::add_row(x.value(), bias.value());
  const std::size_t rows = x.value().rows();
  const std::size_t cols = x.value().cols();
  return tape_of(x).record(std::move(out), {x, bias},
                           [rows, cols](const Tensor& g, GradAccess& p) {
                             if (p.needs(0)) {
                               Tensor& gx = p[0];
                               for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
                             }
                             if (p.needs(1)) {
                               Tensor& gb = p[1];
                               for (std::size_t r = 0; r < rows; ++r)
                                 for (std::size_t c = 0; c < cols; ++c) gb[c] += g[r * cols + c];
                             }
                           },
                           "add_row");
}

Var broadcast_rows(const Var& v, std::size_t rows) {
  const Tensor& src = v.value();
  if (src.rank() > 2 || src.rows() != 1) {
    throw DimensionError("broadcast_rows expects a vector, got " + shape_string(src.shape()));
  }
  const std::size_t cols = src.cols();
  Tensor out(Shape{rows, cols});
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = src[c];
  return tape_of(v).record(std::move(out), {v},
                           [rows, cols](const Tensor& g, GradAccess& p) {
                             Tensor& gv = p[0];
                             for (std::size_t r = 0; r < rows; ++r)
                               for (std::size_t c = 0; c < cols; ++c) gv[c] += g[r * cols + c];
                           },
                           "broadcast_rows");
}

Var add(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  return tape_of(a).record(std::move(out), {a, b},
                           [](const Tensor& g, GradAccess& p) {
                             for (std::size_t k = 0; k < 2; ++k) {
                               if (!p.needs(k)) continue;
                               Tensor& gk = p[k];
                               for (std::size_t i = 0; i < g.size(); ++i) gk[i] += g[i];
                             }
                           },
                           "add");
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a, b, "sub");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  return tape_of(a).record(std::move(out), {a, b},
                           [](const Tensor& g, GradAccess& p) {
                             if (p.needs(0)) {
                               Tensor& ga = p[0];
                               for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
                             }
                             if (p.needs(1)) {
                               Tensor& gb = p[1];
                               for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
                             }
                           },
                           "sub");
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a, b, "mul");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  Tape& t = tape_of(a);
  return t.record(std::move(out), {a, b},
                  [&t, ia = a.id(), ib = b.id()](const Tensor& g, GradAccess& p) {
                    const Tensor& av = t.value(ia);
                    const Tensor& bv = t.value(ib);
                    if (p.needs(0)) {
                      Tensor& ga = p[0];
                      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
                    }
                    if (p.needs(1)) {
                      Tensor& gb = p[1];
                      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
                    }
                  },
                  "mul");
}

Var scale(const Var& a, double factor) {
  Tensor out = map_values(a.value(), [factor](double v) { return v * factor; });
  return tape_of(a).record(std::move(out), {a},
                           [factor](const Tensor& g, GradAccess& p) {
                             Tensor& ga = p[0];
                             for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * factor;
                           },
                           "scale");
}

Var add_scalar(const Var& a, double c) {
  Tensor out = map_values(a.value(), [c](double v) { return v + c; });
  return tape_of(a).record(std::move(out), {a},
                           [](const Tensor& g, GradAccess& p) {
                             Tensor& ga = p[0];
                             for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
                           },
                           "add_scalar");
}

Var tanh(const Var& a) {
  Tensor y = kernel::tanh(a.value());
  Tensor y_copy = y;
  return tape_of(a).record(std::move(y), {a},
                  [y = std::move(y_copy)](const Tensor& g, GradAccess& p) {
                    Tensor& ga = p[0];
                    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
                  },
                  "tanh");
}

Var exp(const Var& a) {
  Tape& t = tape_of(a);
  Tensor y = map_values(a.value(), [](double v) { return std::exp(v); });
  Tensor y_copy = y;
  return t.record(std::move(y), {a},
                  [y = std::move(y_copy)](const Tensor& g, GradAccess& p) {
                    Tensor& ga = p[0];
                    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i];
                  },
                  "exp");
}

Var square(const Var& a) {
  Tape& t = tape_of(a);
  Tensor out = map_values(a.value(), [](double v) { return v * v; });
  return t.record(std::move(out), {a},
                  [&t, ia = a.id()](const Tensor& g, GradAccess& p) {
                    const Tensor& x = t.value(ia);
                    Tensor& ga = p[0];
                    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += 2.0 * g[i] * x[i];
                  },
                  "square");
}

Var sum(const Var& a) {
  double total = 0.0;
  for (double v : a.value().values()) total += v;
  return tape_of(a).record(Tensor::scalar(total), {a},
                           [](const Tensor& g, GradAccess& p) {
                             Tensor& ga = p[0];
                             const double gv = g[0];
                             for (double& v : ga.values()) v += gv;
                           },
                           "sum");
}

Var mean(const Var& a) {
  const std::size_t n = a.value().size();
  if (n == 0) throw DimensionError("mean of empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

Var row_sum(const Var& a) {
  const Tensor& x = a.value();
  const std::size_t rows = x.rows();
  const std::size_t cols = x.cols();
  Tensor out(Shape{rows});
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[r] += x[r * cols + c];
  return tape_of(a).record(std::move(out), {a},
                           [rows, cols](const Tensor& g, GradAccess& p) {
                             Tensor& ga = p[0];
                             for (std::size_t r = 0; r < rows; ++r)
                               for (std::size_t c = 0; c < cols; ++c) ga[r * cols + c] += g[r];
                           },
                           "row_sum");
}

Var log_softmax_rows(const Var& logits) {
  Tape& t = tape_of(logits);
  Tensor y = kernel::log_softmax_rows(logits.value());
  const std::size_t rows = y.rows();
  const std::size_t cols = y.cols();
  Tensor y_copy = y;
  return t.record(std::move(y), {logits},
                  [y = std::move(y_copy), rows, cols](const Tensor& g, GradAccess& p) {
                    Tensor& gx = p[0];
                    for (std::size_t r = 0; r < rows; ++r) {
                      double gsum = 0.0;
                      for (std::size_t c = 0; c < cols; ++c) gsum += g[r * cols + c];
                      for (std::size_t c = 0; c < cols; ++c) {
                        const std::size_t i = r * cols + c;
                        gx[i] += g[i] - std::exp(y[i]) * gsum;
                      }
                    }
                  },
                  "log_softmax_rows");
}

Var pick(const Var& a, std::span<const std::size_t> index) {
  const Tensor& x = a.value();
  const std::size_t rows = x.rows();
  const std::size_t cols = x.cols();
  if (index.size() != rows) {
    throw DimensionError("pick: " + std::to_string(index.size()) + " indices for " + std::to_string(rows) + " rows");
  }
  std::vector<std::size_t> idx(index.begin(), index.end());
  Tensor out(Shape{rows});
  for (std::size_t r = 0; r < rows; ++r) {
    if (idx[r] >= cols) throw DimensionError("pick: index " + std::to_string(idx[r]) + " out of range");
    out[r] = x[r * cols + idx[r]];
  }
  return tape_of(a).record(std::move(out), {a},
                           [idx = std::move(idx), cols](const Tensor& g, GradAccess& p) {
                             Tensor& ga = p[0];
                             for (std::size_t r = 0; r < idx.size(); ++r) ga[r * cols + idx[r]] += g[r];
                           },
                           "pick");
}

Var clamp(const Var& a, double lo, double hi) {
  Tape& t = tape_of(a);
  Tensor out = map_values(a.value(), [lo, hi](double v) { return std::min(std::max(v, lo), hi); });
  return t.record(std::move(out), {a},
                  [&t, ia = a.id(), lo, hi](const Tensor& g, GradAccess& p) {
                    const Tensor& x = t.value(ia);
                    Tensor& ga = p[0];
                    for (std::size_t i = 0; i < g.size(); ++i)
                      if (x[i] > lo && x[i] < hi) ga[i] += g[i];
                  },
                  "clamp");
}

namespace {

Var select(const Var& a, const Var& b, bool take_min) {
  require_same_shape(a, b, take_min ? "minimum" : "maximum");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Tensor out = av;
  std::vector<bool> first(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) {
    first[i] = take_min ? av[i] <= bv[i] : av[i] >= bv[i];
    out[i] = first[i] ? av[i] : bv[i];
  }
  return tape_of(a).record(std::move(out), {a, b},
                           [first = std::move(first)](const Tensor& g, GradAccess& p) {
                             if (p.needs(0)) {
                               Tensor& ga = p[0];
                               for (std::size_t i = 0; i < g.size(); ++i)
                                 if (first[i]) ga[i] += g[i];
                             }
                             if (p.needs(1)) {
                               Tensor& gb = p[1];
                               for (std::size_t i = 0; i < g.size(); ++i)
                                 if (!first[i]) gb[i] += g[i];
                             }
                           },
                           take_min ? "minimum" : "maximum");
}

}  // namespace

Var minimum(const Var& a, const Var& b) { return select(a, b, true); }
Var maximum(const Var& a, const Var& b) { return select(a, b, false); }

Var slice(const Var& a, std::size_t offset, Shape shape) {
  const Tensor& x = a.value();
  const std::size_t n = shape_size(shape);
  if (offset + n > x.size()) {
    throw DimensionError("slice [" + std::to_string(offset) + "," + std::to_string(offset + n) +
                         ") exceeds tensor of " + std::to_string(x.size()) + " values");
  }
  std::vector<double> values(x.values().begin() + static_cast<std::ptrdiff_t>(offset),
                             x.values().begin() + static_cast<std::ptrdiff_t>(offset + n));
  return tape_of(a).record(Tensor(std::move(shape), std::move(values)), {a},
                           [offset](const Tensor& g, GradAccess& p) {
                             Tensor& ga = p[0];
                             for (std::size_t i = 0; i < g.size(); ++i) ga[offset + i] += g[i];
                           },
                           "slice");
}

Var reshape(const Var& a, Shape shape) {
  return tape_of(a).record(a.value().reshaped(std::move(shape)), {a},
                           [](const Tensor& g, GradAccess& p) {
                             Tensor& ga = p[0];
                             for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
                           },
                           "reshape");
}

}  // namespace step::core
