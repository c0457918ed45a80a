#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>

#include "fcsum/error.hpp"
#include "fcsum/tensor/matrix.hpp"

namespace fcsum {

template <class T>
using ParamMap = std::map<std::string, Matrix<T>>;

// Adam with bias correction. Moments are created lazily on the first step.
struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <class T>
struct OptimizerState {
  AdamConfig config;
  std::int64_t step = 0;
  ParamMap<T> first_moment;
  ParamMap<T> second_moment;
};

template <class T>
void optimizer_step(ParamMap<T>& params, const ParamMap<T>& grads, OptimizerState<T>& state) {
  if (grads.size() != params.size()) {
    throw DataError("optimizer_step: " + std::to_string(params.size()) + " parameters but " +
                    std::to_string(grads.size()) + " gradients");
  }
  for (const auto& [name, p] : params) {
    const auto it = grads.find(name);
    if (it == grads.end()) throw DataError("optimizer_step: missing gradient for '" + name + "'");
    if (!it->second.same_shape(p)) {
      throw DimensionError("optimizer_step: gradient for '" + name + "' is " + it->second.shape_string() +
                           ", parameter is " + p.shape_string());
    }
  }

  ++state.step;
  const auto& c = state.config;
  const double correction1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double correction2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  const T b1 = static_cast<T>(c.beta1), b2 = static_cast<T>(c.beta2);

  for (auto& [name, p] : params) {
    const Matrix<T>& g = grads.at(name);
    auto [m_it, m_new] = state.first_moment.try_emplace(name, p.rows(), p.cols());
    auto [v_it, v_new] = state.second_moment.try_emplace(name, p.rows(), p.cols());
    Matrix<T>& m = m_it->second;
    Matrix<T>& v = v_it->second;
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = b1 * m[i] + (T{1} - b1) * g[i];
      v[i] = b2 * v[i] + (T{1} - b2) * g[i] * g[i];
      const double m_hat = static_cast<double>(m[i]) / correction1;
      const double v_hat = static_cast<double>(v[i]) / correction2;
      p[i] -= static_cast<T>(c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon));
    }
  }
}

}  // namespace fcsum
