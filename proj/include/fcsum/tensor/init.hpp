#pragma once

#include <cmath>

#include "fcsum/rng.hpp"
#include "fcsum/tensor/gru.hpp"

namespace fcsum {

// Glorot-uniform: U(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
template <class T>
void init_glorot(Matrix<T>& m, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
  for (auto& v : m.values()) v = static_cast<T>(rng.uniform(-a, a));
}

template <class T>
void init_uniform(Matrix<T>& m, Rng& rng, double limit) {
  for (auto& v : m.values()) v = static_cast<T>(rng.uniform(-limit, limit));
}

inline constexpr double kEmbeddingInitLimit = 0.05;

template <class T>
void init_gru(GruParams<T>& p, Rng& rng) {
  for (auto* w : {&p.W_z, &p.W_r, &p.W_h, &p.U_z, &p.U_r, &p.U_h}) init_glorot(*w, rng);
  for (auto* b : {&p.b_z, &p.b_r, &p.b_h}) b->fill(T{0});
}

}  // namespace fcsum
