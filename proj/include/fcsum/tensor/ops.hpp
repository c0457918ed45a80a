#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "fcsum/tensor/tape.hpp"

namespace fcsum {

namespace detail {

template <class T>
void require_same_shape(std::string_view op, const Matrix<T>& a, const Matrix<T>& b) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(op) + " shape mismatch: " + a.shape_string() + " vs " +
                         b.shape_string());
  }
}

template <class T>
T sigmoid(T x) {
  return x >= T{0} ? T{1} / (T{1} + std::exp(-x)) : std::exp(x) / (T{1} + std::exp(x));
}

}  // namespace detail

template <class T>
Var<T> matmul(Var<T> a, Var<T> b) {
  const std::size_t ia = a.id, ib = b.id;
  return a.tape->record("matmul", multiply(a.value(), b.value()), {a, b},
                        [ia, ib](Tape<T>& t, const Matrix<T>& g) {
                          if (t.requires_grad(ia)) kernels::gemm_nt(g, t.value(ib), t.grad(ia));
                          if (t.requires_grad(ib)) kernels::gemm_tn(t.value(ia), g, t.grad(ib));
                        });
}

// a * b^T, the attention score product.
template <class T>
Var<T> matmul_nt(Var<T> a, Var<T> b) {
  if (a.cols() != b.cols()) {
    throw DimensionError("matmul_nt shape mismatch: " + a.value().shape_string() + " * (" +
                         b.value().shape_string() + ")^T");
  }
  Matrix<T> out(a.rows(), b.rows());
  kernels::gemm_nt(a.value(), b.value(), out);
  const std::size_t ia = a.id, ib = b.id;
  return a.tape->record("matmul_nt", std::move(out), {a, b},
                        [ia, ib](Tape<T>& t, const Matrix<T>& g) {
                          if (t.requires_grad(ia)) kernels::gemm_nn(g, t.value(ib), t.grad(ia));
                          if (t.requires_grad(ib)) kernels::gemm_tn(g, t.value(ia), t.grad(ib));
                        });
}

template <class T>
Var<T> add(Var<T> a, Var<T> b) {
  detail::require_same_shape("add", a.value(), b.value());
  Matrix<T> out = a.value();
  kernels::add_into(out, b.value());
  const std::size_t ia = a.id, ib = b.id;
  return a.tape->record("add", std::move(out), {a, b}, [ia, ib](Tape<T>& t, const Matrix<T>& g) {
    if (t.requires_grad(ia)) kernels::add_into(t.grad(ia), g);
    if (t.requires_grad(ib)) kernels::add_into(t.grad(ib), g);
  });
}

template <class T>
Var<T> hadamard(Var<T> a, Var<T> b) {
  detail::require_same_shape("hadamard", a.value(), b.value());
  Matrix<T> out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  const std::size_t ia = a.id, ib = b.id;
  return a.tape->record("hadamard", std::move(out), {a, b},
                        [ia, ib](Tape<T>& t, const Matrix<T>& g) {
                          if (t.requires_grad(ia)) {
                            auto& ga = t.grad(ia);
                            const auto& bv = t.value(ib);
                            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
                          }
                          if (t.requires_grad(ib)) {
                            auto& gb = t.grad(ib);
                            const auto& av = t.value(ia);
                            for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
                          }
                        });
}

// scale * a + shift, elementwise.
template <class T>
Var<T> affine(Var<T> a, T scale, T shift = T{0}) {
  Matrix<T> out = a.value();
  for (auto& v : out.values()) v = scale * v + shift;
  const std::size_t ia = a.id;
  return a.tape->record("affine", std::move(out), {a}, [ia, scale](Tape<T>& t, const Matrix<T>& g) {
    auto& ga = t.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += scale * g[i];
  });
}

// Adds a 1xC bias to every row of an RxC matrix.
template <class T>
Var<T> add_row(Var<T> a, Var<T> bias) {
  if (bias.rows() != 1 || bias.cols() != a.cols()) {
    throw DimensionError("add_row shape mismatch: " + a.value().shape_string() + " + " +
                         bias.value().shape_string());
  }
  Matrix<T> out = a.value();
  const auto& bv = bias.value();
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += bv[c];
  }
  const std::size_t ia = a.id, ib = bias.id;
  return a.tape->record("add_row", std::move(out), {a, bias},
                        [ia, ib](Tape<T>& t, const Matrix<T>& g) {
                          if (t.requires_grad(ia)) kernels::add_into(t.grad(ia), g);
                          if (t.requires_grad(ib)) {
                            auto& gb = t.grad(ib);
                            for (std::size_t r = 0; r < g.rows(); ++r) {
                              const auto row = g.row(r);
                              for (std::size_t c = 0; c < row.size(); ++c) gb[c] += row[c];
                            }
                          }
                        });
}

template <class T>
Var<T> sigmoid(Var<T> a) {
  Matrix<T> out = a.value();
  for (auto& v : out.values()) v = detail::sigmoid(v);
  const std::size_t ia = a.id, io = a.tape->size();
  return a.tape->record("sigmoid", std::move(out), {a}, [ia, io](Tape<T>& t, const Matrix<T>& g) {
    auto& ga = t.grad(ia);
    const auto& y = t.value(io);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (T{1} - y[i]);
  });
}

template <class T>
Var<T> tanh(Var<T> a) {
  Matrix<T> out = a.value();
  for (auto& v : out.values()) v = std::tanh(v);
  const std::size_t ia = a.id, io = a.tape->size();
  return a.tape->record("tanh", std::move(out), {a}, [ia, io](Tape<T>& t, const Matrix<T>& g) {
    auto& ga = t.grad(ia);
    const auto& y = t.value(io);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (T{1} - y[i] * y[i]);
  });
}

template <class T>
Var<T> relu(Var<T> a) {
  Matrix<T> out = a.value();
  for (auto& v : out.values()) v = std::max(v, T{0});
  const std::size_t ia = a.id, io = a.tape->size();
  return a.tape->record("relu", std::move(out), {a}, [ia, io](Tape<T>& t, const Matrix<T>& g) {
    auto& ga = t.grad(ia);
    const auto& y = t.value(io);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (y[i] > T{0}) ga[i] += g[i];
  });
}

// Plain (tape-free) row softmax with max subtraction.
template <class T>
Matrix<T> softmax_rows(const Matrix<T>& m) {
  Matrix<T> out = m;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    if (row.empty()) continue;
    const T mx = *std::max_element(row.begin(), row.end());
    T sum{0};
    for (auto& v : row) {
      v = std::exp(v - mx);
      sum += v;
    }
    for (auto& v : row) v /= sum;
  }
  return out;
}

template <class T>
Var<T> softmax_rows(Var<T> a) {
  if (a.value().empty()) throw DimensionError("softmax_rows of an empty matrix");
  const std::size_t ia = a.id, io = a.tape->size();
  return a.tape->record("softmax_rows", softmax_rows(a.value()), {a},
                        [ia, io](Tape<T>& t, const Matrix<T>& g) {
                          auto& ga = t.grad(ia);
                          const auto& y = t.value(io);
                          for (std::size_t r = 0; r < y.rows(); ++r) {
                            const auto yr = y.row(r);
                            const auto gr = g.row(r);
                            T dot{0};
                            for (std::size_t c = 0; c < yr.size(); ++c) dot += yr[c] * gr[c];
                            auto out = ga.row(r);
                            for (std::size_t c = 0; c < yr.size(); ++c) out[c] += yr[c] * (gr[c] - dot);
                          }
                        });
}

// Horizontal concatenation; all parts share a row count.
template <class T>
Var<T> concat_cols(std::span<const Var<T>> parts) {
  if (parts.empty()) throw DimensionError("concat_cols of zero parts");
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) {
      throw DimensionError("concat_cols row mismatch: " + std::to_string(rows) + " vs " +
                           std::to_string(p.rows()));
    }
    cols += p.cols();
  }
  Matrix<T> out(rows, cols);
  std::vector<std::size_t> ids, offsets;
  std::size_t off = 0;
  for (const auto& p : parts) {
    const auto& v = p.value();
    for (std::size_t r = 0; r < rows; ++r) std::copy(v.row(r).begin(), v.row(r).end(), out.row(r).begin() + off);
    ids.push_back(p.id);
    offsets.push_back(off);
    off += p.cols();
  }
  return parts.front().tape->record(
      "concat_cols", std::move(out), parts,
      [ids = std::move(ids), offsets = std::move(offsets)](Tape<T>& t, const Matrix<T>& g) {
        for (std::size_t k = 0; k < ids.size(); ++k) {
          if (!t.requires_grad(ids[k])) continue;
          auto& gk = t.grad(ids[k]);
          for (std::size_t r = 0; r < gk.rows(); ++r) {
            const auto src = g.row(r).subspan(offsets[k], gk.cols());
            auto dst = gk.row(r);
            for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += src[c];
          }
        }
      });
}

// Vertical concatenation; all parts share a column count.
template <class T>
Var<T> concat_rows(std::span<const Var<T>> parts) {
  if (parts.empty()) throw DimensionError("concat_rows of zero parts");
  const std::size_t cols = parts.front().cols();
  std::vector<T> data;
  std::vector<std::size_t> ids;
  for (const auto& p : parts) {
    if (p.cols() != cols) throw DimensionError("concat_rows column mismatch");
    data.insert(data.end(), p.value().values().begin(), p.value().values().end());
    ids.push_back(p.id);
  }
  const std::size_t rows = data.size() / std::max<std::size_t>(cols, 1);
  return parts.front().tape->record(
      "concat_rows", Matrix<T>(rows, cols, std::move(data)), parts,
      [ids = std::move(ids)](Tape<T>& t, const Matrix<T>& g) {
        std::size_t off = 0;
        for (const auto id : ids) {
          const std::size_t n = t.value(id).size();
          if (t.requires_grad(id)) {
            auto& gi = t.grad(id);
            for (std::size_t i = 0; i < n; ++i) gi[i] += g[off + i];
          }
          off += n;
        }
      });
}

// Row-major reinterpretation; Flatten is reshape(a, 1, size).
template <class T>
Var<T> reshape(Var<T> a, std::size_t rows, std::size_t cols) {
  if (rows * cols != a.value().size()) {
    throw DimensionError("reshape " + a.value().shape_string() + " to " + std::to_string(rows) +
                         "x" + std::to_string(cols));
  }
  Matrix<T> out(rows, cols, std::vector<T>(a.value().values().begin(), a.value().values().end()));
  const std::size_t ia = a.id;
  return a.tape->record("reshape", std::move(out), {a}, [ia](Tape<T>& t, const Matrix<T>& g) {
    auto& ga = t.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

template <class T>
Var<T> slice_rows(Var<T> a, std::size_t start, std::size_t count) {
  if (start + count > a.rows()) {
    throw DimensionError("slice_rows [" + std::to_string(start) + ", " +
                         std::to_string(start + count) + ") of " + a.value().shape_string());
  }
  const std::size_t cols = a.cols();
  const auto src = a.value().values().subspan(start * cols, count * cols);
  Matrix<T> out(count, cols, std::vector<T>(src.begin(), src.end()));
  const std::size_t ia = a.id;
  return a.tape->record("slice_rows", std::move(out), {a},
                        [ia, start, cols](Tape<T>& t, const Matrix<T>& g) {
                          auto& ga = t.grad(ia);
                          for (std::size_t i = 0; i < g.size(); ++i) ga[start * cols + i] += g[i];
                        });
}

// Row t of the result is table row ids[t]; the gradient scatter-adds back.
template <class T>
Var<T> embedding(Var<T> table, std::span<const std::int32_t> ids) {
  const auto& tv = table.value();
  Matrix<T> out(ids.size(), tv.cols());
  for (std::size_t t = 0; t < ids.size(); ++t) {
    const auto id = ids[t];
    if (id < 0 || static_cast<std::size_t>(id) >= tv.rows()) {
      throw IndexError("embedding id " + std::to_string(id) + " out of range for table with " +
                       std::to_string(tv.rows()) + " rows");
    }
    std::copy(tv.row(id).begin(), tv.row(id).end(), out.row(t).begin());
  }
  const std::size_t it = table.id;
  return table.tape->record(
      "embedding", std::move(out), {table},
      [it, ids = std::vector<std::int32_t>(ids.begin(), ids.end())](Tape<T>& t, const Matrix<T>& g) {
        auto& gt = t.grad(it);
        for (std::size_t r = 0; r < ids.size(); ++r) {
          auto dst = gt.row(ids[r]);
          const auto src = g.row(r);
          for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += src[c];
        }
      });
}

template <class T>
Var<T> sum(Var<T> a) {
  T s{0};
  for (const auto v : a.value().values()) s += v;
  const std::size_t ia = a.id;
  return a.tape->record("sum", Matrix<T>(1, 1, s), {a}, [ia](Tape<T>& t, const Matrix<T>& g) {
    auto& ga = t.grad(ia);
    for (auto& v : ga.values()) v += g[0];
  });
}

// Sum of 1x1 scalars times `scale`; used for batch-mean losses.
template <class T>
Var<T> scaled_sum(std::span<const Var<T>> scalars, T scale) {
  T s{0};
  std::vector<std::size_t> ids;
  for (const auto& v : scalars) {
    if (v.value().size() != 1) throw DimensionError("scaled_sum expects 1x1 operands");
    s += v.value()[0];
    ids.push_back(v.id);
  }
  return scalars.front().tape->record(
      "scaled_sum", Matrix<T>(1, 1, s * scale), scalars,
      [ids = std::move(ids), scale](Tape<T>& t, const Matrix<T>& g) {
        for (const auto id : ids)
          if (t.requires_grad(id)) t.grad(id)[0] += scale * g[0];
      });
}

inline constexpr double kCrossEntropyFloor = 1e-12;

// -log(max(p[target], 1e-12)) over a 1xV probability row.
template <class T>
Var<T> cross_entropy(Var<T> probs, std::size_t target) {
  const auto& p = probs.value();
  if (p.rows() != 1) throw DimensionError("cross_entropy expects a 1xV row, got " + p.shape_string());
  if (target >= p.cols()) {
    throw IndexError("target " + std::to_string(target) + " out of range for " +
                     std::to_string(p.cols()) + " classes");
  }
  const T floor = static_cast<T>(kCrossEntropyFloor);
  const T pt = std::max(p[target], floor);
  const std::size_t ip = probs.id;
  return probs.tape->record("cross_entropy", Matrix<T>(1, 1, -std::log(pt)), {probs},
                            [ip, target, floor](Tape<T>& t, const Matrix<T>& g) {
                              const T v = t.value(ip)[target];
                              if (v > floor) t.grad(ip)[target] -= g[0] / v;
                            });
}

// Softmax over a 1xV logit row fused with cross-entropy; gradient is p - onehot.
template <class T>
Var<T> softmax_cross_entropy(Var<T> logits, std::size_t target) {
  const auto& z = logits.value();
  if (z.rows() != 1) throw DimensionError("softmax_cross_entropy expects a 1xV row, got " + z.shape_string());
  if (target >= z.cols()) {
    throw IndexError("target " + std::to_string(target) + " out of range for " +
                     std::to_string(z.cols()) + " classes");
  }
  Matrix<T> p = softmax_rows(z);
  const T pt = std::max(p[target], static_cast<T>(kCrossEntropyFloor));
  const std::size_t iz = logits.id;
  return logits.tape->record("softmax_cross_entropy", Matrix<T>(1, 1, -std::log(pt)), {logits},
                             [iz, target, p = std::move(p)](Tape<T>& t, const Matrix<T>& g) {
                               auto& gz = t.grad(iz);
                               for (std::size_t i = 0; i < p.size(); ++i) gz[i] += g[0] * p[i];
                               gz[target] -= g[0];
                             });
}

enum class Activation { none, relu, softmax };

// activation(x W + b), b broadcast over rows.
template <class T>
Var<T> dense(Var<T> x, Var<T> w, Var<T> b, Activation act) {
  auto pre = add_row(matmul(x, w), b);
  switch (act) {
    case Activation::relu:
      return relu(pre);
    case Activation::softmax:
      return softmax_rows(pre);
    case Activation::none:
      break;
  }
  return pre;
}

}  // namespace fcsum
