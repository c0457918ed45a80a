#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "fcsum/rng.hpp"
#include "fcsum/tensor/gru.hpp"

namespace fcsum {

struct GradCheckResult {
  std::string name;
  double max_rel_error = 0;
  std::size_t checked = 0;

  bool passed(double tolerance) const { return checked > 0 && max_rel_error < tolerance; }
};

// |a - n| / max(|a|, |n|, floor). The floor keeps entries whose true gradient
// is ~0 from dividing round-off by round-off.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

using GradBuilder = std::function<Var<double>(Tape<double>&, const std::vector<Var<double>>&)>;

// Central differences against reverse mode for a scalar-valued `build`.
// `max_entries_per_input` = 0 checks every entry; otherwise a seeded sample.
inline GradCheckResult check_gradients(const std::string& name, std::vector<Matrix<double>> inputs,
                                       const GradBuilder& build, double step = 1e-5,
                                       std::size_t max_entries_per_input = 0, std::uint64_t seed = 0) {
  const auto evaluate = [&](std::vector<Matrix<double>>& xs) {
    Tape<double> tape(false);
    std::vector<Var<double>> vars;
    for (std::size_t i = 0; i < xs.size(); ++i) vars.push_back(tape.parameter("x" + std::to_string(i), xs[i]));
    return build(tape, vars).value()[0];
  };

  Tape<double> tape;
  std::vector<Var<double>> vars;
  for (std::size_t i = 0; i < inputs.size(); ++i) vars.push_back(tape.parameter("x" + std::to_string(i), inputs[i]));
  tape.backward(build(tape, vars));
  const auto grads = tape.parameter_gradients();

  GradCheckResult res{name, 0.0, 0};
  Rng rng(seed);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const std::string key = "x" + std::to_string(i);
    const auto git = grads.find(key);
    const Matrix<double> zero(inputs[i].rows(), inputs[i].cols());
    const Matrix<double>& g = git == grads.end() ? zero : git->second;

    std::vector<std::size_t> entries(inputs[i].size());
    for (std::size_t k = 0; k < entries.size(); ++k) entries[k] = k;
    if (max_entries_per_input > 0 && entries.size() > max_entries_per_input) {
      rng.shuffle(std::span<std::size_t>(entries));
      entries.resize(max_entries_per_input);
    }
    for (const auto k : entries) {
      auto& x = inputs[i].values()[k];
      const double saved = x;
      x = saved + step;
      const double up = evaluate(inputs);
      x = saved - step;
      const double down = evaluate(inputs);
      x = saved;
      const double numeric = (up - down) / (2 * step);
      res.max_rel_error = std::max(res.max_rel_error, relative_error(g.values()[k], numeric));
      ++res.checked;
    }
  }
  return res;
}

// Matrix with entries in ±[lo, hi], bounded away from zero so relu kinks are not straddled.
inline Matrix<double> random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double lo = 0.1, double hi = 1.0) {
  Matrix<double> m(rows, cols);
  for (auto& v : m.values()) v = (rng.below(2) ? 1.0 : -1.0) * rng.uniform(lo, hi);
  return m;
}

// Reduces a matrix-valued op to a scalar with fixed random weights.
inline Var<double> project(Var<double> out, const Matrix<double>& weights) {
  return sum(hadamard(out, out.tape->constant(weights)));
}

// One check per differentiable operation, at double precision.
inline std::vector<GradCheckResult> op_gradient_suite(std::uint64_t seed = 0) {
  Rng rng(seed);
  std::vector<GradCheckResult> out;
  const auto R = [&](std::size_t r, std::size_t c) { return random_matrix(r, c, rng); };
  const auto unary = [&](const std::string& name, Matrix<double> x, std::function<Var<double>(Var<double>)> op,
                         std::size_t out_rows, std::size_t out_cols) {
    const auto w = R(out_rows, out_cols);
    out.push_back(check_gradients(name, {std::move(x)}, [op, w](Tape<double>&, const std::vector<Var<double>>& v) {
      return project(op(v[0]), w);
    }));
  };
  const auto binary = [&](const std::string& name, Matrix<double> a, Matrix<double> b,
                          std::function<Var<double>(Var<double>, Var<double>)> op, std::size_t out_rows,
                          std::size_t out_cols) {
    const auto w = R(out_rows, out_cols);
    out.push_back(check_gradients(name, {std::move(a), std::move(b)},
                                  [op, w](Tape<double>&, const std::vector<Var<double>>& v) {
                                    return project(op(v[0], v[1]), w);
                                  }));
  };

  binary("matmul", R(3, 4), R(4, 5), [](auto a, auto b) { return matmul(a, b); }, 3, 5);
  binary("matmul_nt", R(3, 4), R(5, 4), [](auto a, auto b) { return matmul_nt(a, b); }, 3, 5);
  binary("add", R(3, 4), R(3, 4), [](auto a, auto b) { return add(a, b); }, 3, 4);
  binary("hadamard", R(3, 4), R(3, 4), [](auto a, auto b) { return hadamard(a, b); }, 3, 4);
  binary("add_row", R(3, 4), R(1, 4), [](auto a, auto b) { return add_row(a, b); }, 3, 4);
  unary("affine", R(3, 4), [](auto a) { return affine(a, -1.5, 0.25); }, 3, 4);
  unary("sigmoid", R(3, 4), [](auto a) { return sigmoid(a); }, 3, 4);
  unary("tanh", R(3, 4), [](auto a) { return tanh(a); }, 3, 4);
  unary("relu", R(3, 4), [](auto a) { return relu(a); }, 3, 4);
  unary("softmax_rows", R(3, 5), [](auto a) { return softmax_rows(a); }, 3, 5);
  unary("reshape", R(3, 4), [](auto a) { return reshape(a, 2, 6); }, 2, 6);
  unary("slice_rows", R(5, 3), [](auto a) { return slice_rows(a, 1, 3); }, 3, 3);
  unary("sum", R(3, 4), [](auto a) { return affine(sum(a), 1.0); }, 1, 1);
  binary("concat_cols", R(3, 2), R(3, 4),
         [](auto a, auto b) { return concat_cols(std::span<const Var<double>>(std::vector<Var<double>>{a, b})); },
         3, 6);
  binary("concat_rows", R(2, 3), R(4, 3),
         [](auto a, auto b) { return concat_rows(std::span<const Var<double>>(std::vector<Var<double>>{a, b})); },
         6, 3);
  {
    const std::vector<std::int32_t> ids = {2, 0, 2, 4};
    unary("embedding", R(5, 3), [ids](auto t) { return embedding(t, std::span<const std::int32_t>(ids)); }, 4, 3);
  }
  binary("scaled_sum", R(1, 1), R(1, 1),
         [](auto a, auto b) {
           const std::vector<Var<double>> s{a, b};
           return scaled_sum(std::span<const Var<double>>(s), 0.5);
         },
         1, 1);
  out.push_back(check_gradients("cross_entropy", {R(1, 6)}, [](Tape<double>&, const std::vector<Var<double>>& v) {
    return cross_entropy(softmax_rows(v[0]), 2);
  }));
  out.push_back(check_gradients("softmax_cross_entropy", {R(1, 6)},
                                [](Tape<double>&, const std::vector<Var<double>>& v) {
                                  return softmax_cross_entropy(v[0], 4);
                                }));
  for (const auto act : {Activation::none, Activation::relu, Activation::softmax}) {
    const auto w = R(3, 5);
    const std::string name = act == Activation::none ? "dense" : act == Activation::relu ? "dense_relu" : "dense_softmax";
    out.push_back(check_gradients(name, {R(3, 4), R(4, 5), R(1, 5)},
                                  [act, w](Tape<double>&, const std::vector<Var<double>>& v) {
                                    return project(dense(v[0], v[1], v[2], act), w);
                                  }));
  }

  // GRU: inputs are xs, h0 and the nine parameters.
  const auto gru_inputs = [&](std::size_t steps, std::size_t batch, std::size_t in, std::size_t hid) {
    std::vector<Matrix<double>> xs{R(steps * batch, in), R(batch, hid)};
    for (std::size_t i = 0; i < 9; ++i) xs.push_back(i < 3 ? R(in, hid) : i < 6 ? R(hid, hid) : R(1, hid));
    return xs;
  };
  const auto vars_of = [](const std::vector<Var<double>>& v) {
    return GruVars<double>{v[2], v[3], v[4], v[5], v[6], v[7], v[8], v[9], v[10]};
  };
  {
    const auto w = R(2, 3);
    out.push_back(check_gradients("gru_step", gru_inputs(1, 2, 4, 3),
                                  [w, vars_of](Tape<double>&, const std::vector<Var<double>>& v) {
                                    return project(gru_step(v[0], v[1], vars_of(v)), w);
                                  }));
  }
  for (const std::size_t batch : {1, 3}) {
    const auto w = R(4 * batch, 3);
    out.push_back(check_gradients("gru_sequence_states/batch" + std::to_string(batch), gru_inputs(4, batch, 4, 3),
                                  [w, vars_of, batch](Tape<double>&, const std::vector<Var<double>>& v) {
                                    return project(gru_sequence_states(v[0], v[1], vars_of(v), batch), w);
                                  }));
  }
  return out;
}

}  // namespace fcsum
