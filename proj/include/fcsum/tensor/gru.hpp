#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "fcsum/tensor/ops.hpp"

namespace fcsum {

// Gate convention (reset applied to h before U_h):
//   z  = sigmoid(x W_z + h U_z + b_z)
//   r  = sigmoid(x W_r + h U_r + b_r)
//   h~ = tanh(x W_h + (r . h) U_h + b_h)
//   h' = (1 - z) . h + z . h~
inline constexpr std::array<std::string_view, 9> kGruParamNames = {
    "W_z", "W_r", "W_h", "U_z", "U_r", "U_h", "b_z", "b_r", "b_h"};

template <class T>
struct GruParams {
  Matrix<T> W_z, W_r, W_h;  // input_dim x hidden
  Matrix<T> U_z, U_r, U_h;  // hidden x hidden
  Matrix<T> b_z, b_r, b_h;  // 1 x hidden

  GruParams() = default;
  GruParams(std::size_t input_dim, std::size_t hidden)
      : W_z(input_dim, hidden), W_r(input_dim, hidden), W_h(input_dim, hidden),
        U_z(hidden, hidden), U_r(hidden, hidden), U_h(hidden, hidden),
        b_z(1, hidden), b_r(1, hidden), b_h(1, hidden) {}

  std::size_t input_dim() const { return W_z.rows(); }
  std::size_t hidden() const { return W_z.cols(); }

  std::array<Matrix<T>*, 9> fields() { return {&W_z, &W_r, &W_h, &U_z, &U_r, &U_h, &b_z, &b_r, &b_h}; }
  std::array<const Matrix<T>*, 9> fields() const {
    return {&W_z, &W_r, &W_h, &U_z, &U_r, &U_h, &b_z, &b_r, &b_h};
  }

  void validate() const {
    const auto in = input_dim(), h = hidden();
    const auto check = [&](const Matrix<T>& m, std::size_t r, std::size_t c, std::string_view name) {
      if (m.rows() != r || m.cols() != c) {
        throw DimensionError("GRU " + std::string(name) + " is " + m.shape_string() + ", expected " +
                             std::to_string(r) + "x" + std::to_string(c));
      }
    };
    check(W_r, in, h, "W_r");
    check(W_h, in, h, "W_h");
    check(U_z, h, h, "U_z");
    check(U_r, h, h, "U_r");
    check(U_h, h, h, "U_h");
    check(b_z, 1, h, "b_z");
    check(b_r, 1, h, "b_r");
    check(b_h, 1, h, "b_h");
  }
};

// The nine GRU parameters as tape nodes.
template <class T>
struct GruVars {
  Var<T> W_z, W_r, W_h, U_z, U_r, U_h, b_z, b_r, b_h;

  std::array<Var<T>, 9> all() const { return {W_z, W_r, W_h, U_z, U_r, U_h, b_z, b_r, b_h}; }
  std::size_t input_dim() const { return W_z.rows(); }
  std::size_t hidden() const { return W_z.cols(); }
};

// Registers `p` on the tape under "<prefix>.W_z" etc.
template <class T>
GruVars<T> register_gru(Tape<T>& tape, const std::string& prefix, const GruParams<T>& p) {
  p.validate();
  const auto f = p.fields();
  std::array<Var<T>, 9> v;
  for (std::size_t i = 0; i < 9; ++i) v[i] = tape.parameter(prefix + "." + std::string(kGruParamNames[i]), *f[i]);
  return {v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8]};
}

// One recurrent step composed from primitive tape operations. x is BxI, h is BxH.
template <class T>
Var<T> gru_step(Var<T> x, Var<T> h, const GruVars<T>& p) {
  if (x.cols() != p.input_dim() || h.cols() != p.hidden() || x.rows() != h.rows()) {
    throw DimensionError("gru_step shape mismatch: x " + x.value().shape_string() + ", h " +
                         h.value().shape_string() + ", W " + p.W_z.value().shape_string());
  }
  auto z = sigmoid(add_row(add(matmul(x, p.W_z), matmul(h, p.U_z)), p.b_z));
  auto r = sigmoid(add_row(add(matmul(x, p.W_r), matmul(h, p.U_r)), p.b_r));
  auto cand = tanh(add_row(add(matmul(x, p.W_h), matmul(hadamard(r, h), p.U_h)), p.b_h));
  return add(hadamard(affine(z, T{-1}, T{1}), h), hadamard(z, cand));
}

namespace detail {

template <class T>
Matrix<T> rows_of(const Matrix<T>& m, std::size_t start, std::size_t count) {
  const auto src = m.values().subspan(start * m.cols(), count * m.cols());
  return Matrix<T>(count, m.cols(), std::vector<T>(src.begin(), src.end()));
}

template <class T>
void bias_rows(Matrix<T>& m, const Matrix<T>& b) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += b[c];
  }
}

template <class T>
void col_sums_into(const Matrix<T>& g, Matrix<T>& b) {
  for (std::size_t r = 0; r < g.rows(); ++r) {
    const auto row = g.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) b[c] += row[c];
  }
}

}  // namespace detail

// Runs `steps` GRU steps over a batch of `batch` independent sequences in one
// tape node. `xs` is time-major: row t*batch + b holds input t of sequence b.
// h0 is batch x hidden. The result holds every hidden state in the same
// time-major layout (steps*batch x hidden).
template <class T>
Var<T> gru_sequence_states(Var<T> xs, Var<T> h0, const GruVars<T>& p, std::size_t batch) {
  const std::size_t in = p.input_dim(), hid = p.hidden();
  if (batch == 0 || xs.rows() % batch != 0 || (xs.rows() > 0 && xs.cols() != in) ||
      h0.rows() != batch || h0.cols() != hid) {
    throw DimensionError("gru_sequence shape mismatch: xs " + xs.value().shape_string() + ", h0 " +
                         h0.value().shape_string() + ", batch " + std::to_string(batch) +
                         ", W " + p.W_z.value().shape_string());
  }
  const std::size_t steps = xs.rows() / batch;

  struct StepCache {
    Matrix<T> x, h_prev, z, r, rh, cand;
  };
  std::vector<StepCache> cache(steps);
  Matrix<T> states(steps * batch, hid);
  Matrix<T> h = h0.value();

  const auto& Wz = p.W_z.value();
  const auto& Wr = p.W_r.value();
  const auto& Wh = p.W_h.value();
  const auto& Uz = p.U_z.value();
  const auto& Ur = p.U_r.value();
  const auto& Uh = p.U_h.value();

  for (std::size_t t = 0; t < steps; ++t) {
    StepCache& c = cache[t];
    c.x = detail::rows_of(xs.value(), t * batch, batch);
    c.h_prev = h;
    c.z = Matrix<T>(batch, hid);
    c.r = Matrix<T>(batch, hid);
    c.cand = Matrix<T>(batch, hid);
    kernels::gemm_nn(c.x, Wz, c.z);
    kernels::gemm_nn(h, Uz, c.z);
    detail::bias_rows(c.z, p.b_z.value());
    kernels::gemm_nn(c.x, Wr, c.r);
    kernels::gemm_nn(h, Ur, c.r);
    detail::bias_rows(c.r, p.b_r.value());
    for (auto& v : c.z.values()) v = detail::sigmoid(v);
    for (auto& v : c.r.values()) v = detail::sigmoid(v);
    c.rh = c.r;
    for (std::size_t i = 0; i < c.rh.size(); ++i) c.rh[i] *= h[i];
    kernels::gemm_nn(c.x, Wh, c.cand);
    kernels::gemm_nn(c.rh, Uh, c.cand);
    detail::bias_rows(c.cand, p.b_h.value());
    for (auto& v : c.cand.values()) v = std::tanh(v);
    for (std::size_t i = 0; i < h.size(); ++i) h[i] = (T{1} - c.z[i]) * h[i] + c.z[i] * c.cand[i];
    std::copy(h.values().begin(), h.values().end(), states.values().begin() + t * batch * hid);
  }

  const auto pv = p.all();
  std::array<std::size_t, 9> pid;
  for (std::size_t i = 0; i < 9; ++i) pid[i] = pv[i].id;
  const std::size_t ix = xs.id, ih = h0.id;
  std::array<Var<T>, 11> inputs = {xs, h0, pv[0], pv[1], pv[2], pv[3], pv[4], pv[5], pv[6], pv[7], pv[8]};

  return xs.tape->record(
      "gru_sequence", std::move(states), std::span<const Var<T>>(inputs),
      [cache = std::move(cache), pid, ix, ih, batch, hid, steps](Tape<T>& t, const Matrix<T>& g) {
        const auto& Wz = t.value(pid[0]);
        const auto& Wr = t.value(pid[1]);
        const auto& Wh = t.value(pid[2]);
        const auto& Uz = t.value(pid[3]);
        const auto& Ur = t.value(pid[4]);
        const auto& Uh = t.value(pid[5]);
        const bool need_x = t.requires_grad(ix);
        std::array<bool, 9> need;
        for (std::size_t i = 0; i < 9; ++i) need[i] = t.requires_grad(pid[i]);

        Matrix<T> dh_next(batch, hid);
        Matrix<T> dz(batch, hid), dr(batch, hid), dc(batch, hid), drh(batch, hid);
        for (std::size_t step = steps; step-- > 0;) {
          const StepCache& c = cache[step];
          Matrix<T> dh = detail::rows_of(g, step * batch, batch);
          kernels::add_into(dh, dh_next);

          // Pre-activation gradients for the update gate and candidate.
          Matrix<T> dh_prev(batch, hid);
          for (std::size_t i = 0; i < dh.size(); ++i) {
            const T z = c.z[i];
            dz[i] = dh[i] * (c.cand[i] - c.h_prev[i]) * z * (T{1} - z);
            dc[i] = dh[i] * z * (T{1} - c.cand[i] * c.cand[i]);
            dh_prev[i] = dh[i] * (T{1} - z);
          }
          drh.fill(T{0});
          kernels::gemm_nt(dc, Uh, drh);
          for (std::size_t i = 0; i < dh.size(); ++i) {
            const T r = c.r[i];
            dr[i] = drh[i] * c.h_prev[i] * r * (T{1} - r);
            dh_prev[i] += drh[i] * r;
          }
          kernels::gemm_nt(dz, Uz, dh_prev);
          kernels::gemm_nt(dr, Ur, dh_prev);

          if (need[0]) kernels::gemm_tn(c.x, dz, t.grad(pid[0]));
          if (need[1]) kernels::gemm_tn(c.x, dr, t.grad(pid[1]));
          if (need[2]) kernels::gemm_tn(c.x, dc, t.grad(pid[2]));
          if (need[3]) kernels::gemm_tn(c.h_prev, dz, t.grad(pid[3]));
          if (need[4]) kernels::gemm_tn(c.h_prev, dr, t.grad(pid[4]));
          if (need[5]) kernels::gemm_tn(c.rh, dc, t.grad(pid[5]));
          if (need[6]) detail::col_sums_into(dz, t.grad(pid[6]));
          if (need[7]) detail::col_sums_into(dr, t.grad(pid[7]));
          if (need[8]) detail::col_sums_into(dc, t.grad(pid[8]));

          if (need_x) {
            Matrix<T> dx(batch, c.x.cols());
            kernels::gemm_nt(dz, Wz, dx);
            kernels::gemm_nt(dr, Wr, dx);
            kernels::gemm_nt(dc, Wh, dx);
            auto gx = t.grad(ix).values().subspan(step * batch * dx.cols(), dx.size());
            for (std::size_t i = 0; i < dx.size(); ++i) gx[i] += dx[i];
          }
          dh_next = std::move(dh_prev);
        }
        if (t.requires_grad(ih)) kernels::add_into(t.grad(ih), dh_next);
      });
}

template <class T>
struct GruSequenceResult {
  std::optional<Var<T>> states;  // steps*batch x hidden, when requested
  Var<T> final;                  // batch x hidden
};

// gru_sequence over a single sequence (batch 1) or a time-major batch.
// An empty input yields final = h0 and no states.
template <class T>
GruSequenceResult<T> gru_sequence(Var<T> xs, Var<T> h0, const GruVars<T>& p, bool return_sequences,
                                  std::size_t batch = 1) {
  if (xs.rows() == 0) {
    if (h0.cols() != p.hidden()) throw DimensionError("gru_sequence h0 width mismatch");
    return {std::nullopt, h0};
  }
  auto states = gru_sequence_states(xs, h0, p, batch);
  auto final = slice_rows(states, states.rows() - batch, batch);
  if (!return_sequences) return {std::nullopt, final};
  return {states, final};
}

}  // namespace fcsum
