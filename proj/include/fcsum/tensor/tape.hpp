#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fcsum/error.hpp"
#include "fcsum/tensor/matrix.hpp"

namespace fcsum {

template <class T>
class Tape;

// Handle to a node on a Tape. Cheap to copy; only valid while its tape lives.
template <class T>
struct Var {
  Tape<T>* tape = nullptr;
  std::size_t id = 0;

  const Matrix<T>& value() const { return tape->value(id); }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

// Records primitive operations in execution order, which is a topological
// order by construction: a node can only reference nodes that already exist.
// backward() walks the record in reverse and accumulates into input gradients.
template <class T>
class Tape {
 public:
  using Backward = std::function<void(Tape&, const Matrix<T>& grad_out)>;

  // With track_gradients off, parameters are treated as constants and no
  // backward closures are kept (inference).
  explicit Tape(bool track_gradients = true) : track_(track_gradients) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // With validation on, every recorded value is checked for NaN/Inf.
  void set_validate(bool on) { validate_ = on; }

  Var<T> constant(Matrix<T> value) {
    Node n;
    n.op = "constant";
    n.value = std::move(value);
    return push(std::move(n));
  }

  // Parameters are referenced, not copied; `storage` must outlive the tape.
  // Registering the same name twice returns the existing node.
  Var<T> parameter(const std::string& name, const Matrix<T>& storage) {
    if (auto it = params_.find(name); it != params_.end()) return {this, it->second};
    Node n;
    n.op = "parameter";
    n.external = &storage;
    n.requires_grad = track_;
    n.param_name = name;
    const auto v = push(std::move(n));
    params_.emplace(name, v.id);
    return v;
  }

  Var<T> record(std::string_view op, Matrix<T> value, std::initializer_list<Var<T>> inputs,
                Backward backward) {
    return record(op, std::move(value), std::span<const Var<T>>(inputs.begin(), inputs.size()),
                  std::move(backward));
  }

  Var<T> record(std::string_view op, Matrix<T> value, std::span<const Var<T>> inputs,
                Backward backward) {
    Node n;
    n.op = op;
    n.value = std::move(value);
    for (const auto& in : inputs) {
      if (in.tape != this) throw std::logic_error("operand recorded on a different tape");
      n.requires_grad = n.requires_grad || nodes_[in.id].requires_grad;
    }
    if (n.requires_grad) n.backward = std::move(backward);
    if (validate_ && !n.value.all_finite()) {
      throw NumericError("non-finite value produced by '" + std::string(op) + "' (node " +
                         std::to_string(nodes_.size()) + ")");
    }
    return push(std::move(n));
  }

  const Matrix<T>& value(std::size_t id) const {
    const Node& n = nodes_[id];
    return n.external != nullptr ? *n.external : n.value;
  }

  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  std::string_view op_name(std::size_t id) const { return nodes_[id].op; }
  std::size_t size() const { return nodes_.size(); }

  // Gradient buffer for `id`, allocated as zeros on first touch.
  Matrix<T>& grad(std::size_t id) {
    Matrix<T>& g = grads_[id];
    if (g.empty() && !value(id).empty()) g = Matrix<T>(value(id).rows(), value(id).cols());
    return g;
  }

  // Seeds d(loss)/d(loss) = 1 and propagates in reverse record order.
  void backward(Var<T> loss) {
    const Matrix<T>& lv = value(loss.id);
    if (lv.rows() != 1 || lv.cols() != 1) {
      throw DimensionError("backward requires a scalar loss, got " + lv.shape_string());
    }
    grads_.assign(nodes_.size(), Matrix<T>{});
    grad(loss.id)(0, 0) = T{1};
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.backward || grads_[i].empty()) continue;
      n.backward(*this, grads_[i]);
    }
  }

  // Gradient for every registered parameter; parameters the loss never
  // reached get zeros of the right shape.
  std::map<std::string, Matrix<T>> parameter_gradients() const {
    std::map<std::string, Matrix<T>> out;
    for (const auto& [name, id] : params_) {
      const bool touched = id < grads_.size() && !grads_[id].empty();
      out.emplace(name, touched ? grads_[id] : Matrix<T>(value(id).rows(), value(id).cols()));
    }
    return out;
  }

  std::optional<std::size_t> parameter_id(const std::string& name) const {
    if (auto it = params_.find(name); it != params_.end()) return it->second;
    return std::nullopt;
  }

  // Description of the earliest node holding a NaN/Inf, if any.
  std::optional<std::string> first_non_finite() const {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (!value(i).all_finite()) {
        std::string what = "node " + std::to_string(i) + " '" + std::string(nodes_[i].op) + "'";
        if (!nodes_[i].param_name.empty()) what += " (" + nodes_[i].param_name + ")";
        return what;
      }
    }
    return std::nullopt;
  }

 private:
  struct Node {
    std::string_view op;
    Matrix<T> value;
    const Matrix<T>* external = nullptr;
    bool requires_grad = false;
    Backward backward;
    std::string param_name;
  };

  Var<T> push(Node n) {
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
  }

  std::vector<Node> nodes_;
  std::vector<Matrix<T>> grads_;
  std::unordered_map<std::string, std::size_t> params_;
  bool validate_ = false;
  bool track_ = true;
};

}  // namespace fcsum
