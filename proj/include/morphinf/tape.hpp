// Copyright 2026 The morphinf Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Reverse-mode automatic differentiation over NumArray values.
//
// A Tape records every operation applied to its Vars in creation order, so
// the node list is always topologically sorted. backward() walks the list in
// reverse, calling each node's backprop rule, and accumulates partials into
// the gradients of its inputs. A node consumed twice therefore receives the
// sum of both partials.
//
// An inference tape (record_gradients = false) keeps values only; no
// backprop rules are stored and backward() is rejected.

#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "morphinf/num_array.hpp"

namespace morphinf {

template <typename T>
class Tape;

/// A named trainable array. Storage lives outside any tape; Tape::param
/// binds it as a leaf node for one pass.
template <typename T>
struct Parameter {
  std::string name;
  NumArray<T> value;
};

/// Handle to a node on a tape.
template <typename T>
struct Var {
  Tape<T>* tape = nullptr;
  std::size_t index = 0;

  const NumArray<T>& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

template <typename T>
class Tape {
 public:
  using Backprop = std::function<void(Tape&, std::size_t)>;

  explicit Tape(bool record_gradients = true) : record_(record_gradients) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool records() const { return record_; }
  std::size_t size() const { return nodes_.size(); }

  Var<T> constant(NumArray<T> value);
  Var<T> variable(NumArray<T> value);
  /// Binds a parameter as a leaf. Binding the same parameter twice returns
  /// the same node, so every use contributes to one gradient.
  Var<T> param(const Parameter<T>& p);

  const NumArray<T>& value(Var<T> v) const;
  /// Gradient of the last backward() loss with respect to v; zeros when v
  /// was not reached.
  NumArray<T> gradient(Var<T> v) const;
  /// nullptr when the parameter is not bound here or was not reached.
  const NumArray<T>* gradient_of(const Parameter<T>& p) const;
  /// Every bound parameter that received a gradient, in binding order.
  std::vector<std::pair<const Parameter<T>*, const NumArray<T>*>> parameter_gradients() const;

  void backward(Var<T> loss);

  // Interface for op implementations.
  Var<T> push(const char* op, NumArray<T> value, std::vector<std::size_t> inputs,
              Backprop backprop);
  void check(Var<T> v, const char* op) const;
  bool needs_grad(std::size_t node) const { return nodes_[node].needs_grad; }
  const NumArray<T>& value_at(std::size_t node) const { return nodes_[node].value; }
  const NumArray<T>& grad_at(std::size_t node) const { return nodes_[node].grad; }
  NumArray<T>& accumulator(std::size_t node);

 private:
  struct Node {
    const char* op = "";
    NumArray<T> value;
    NumArray<T> grad;  // empty until first accumulation
    bool needs_grad = false;
    std::vector<std::size_t> inputs;
    Backprop backprop;
  };

  Var<T> leaf(const char* op, NumArray<T> value, bool needs_grad);

  bool record_;
  std::deque<Node> nodes_;
  std::vector<std::pair<const Parameter<T>*, std::size_t>> bound_params_;
  std::unordered_map<const Parameter<T>*, std::size_t> param_index_;
};

template <typename T>
const NumArray<T>& Var<T>::value() const {
  return tape->value(*this);
}

// ---------------------------------------------------------------------------
// Differentiable operations. Shape mismatches raise ShapeError naming the
// operation and both shapes.

/// (r x k) * (k x c) -> (r x c).
template <typename T>
Var<T> matmul(Var<T> a, Var<T> b);
template <typename T>
Var<T> add(Var<T> a, Var<T> b);
/// Adds a length-c bias to every row of an (r x c) array.
template <typename T>
Var<T> add_bias(Var<T> x, Var<T> bias);
template <typename T>
Var<T> mul(Var<T> a, Var<T> b);
/// Scales row i of x (r x c) by column[i] (r x 1).
template <typename T>
Var<T> mul_col(Var<T> x, Var<T> column);
/// Elementwise product with a constant mask (dropout, padding carry).
template <typename T>
Var<T> mask_mul(Var<T> x, const NumArray<T>& mask);
template <typename T>
Var<T> scale(Var<T> x, T factor);
template <typename T>
Var<T> tanh(Var<T> x);
template <typename T>
Var<T> sigmoid(Var<T> x);
/// Row-wise softmax. Entries where `mask` is zero get probability exactly 0.
template <typename T>
Var<T> softmax(Var<T> x, const NumArray<T>* mask = nullptr);
template <typename T>
Var<T> concat_cols(const std::vector<Var<T>>& parts);
template <typename T>
Var<T> slice_cols(Var<T> x, std::size_t start, std::size_t count);
/// Embedding lookup: row ids[i] of table becomes row i of the result.
template <typename T>
Var<T> gather_rows(Var<T> table, const std::vector<int>& ids);
template <typename T>
Var<T> sum(Var<T> x);
template <typename T>
Var<T> mean(Var<T> x);
/// Per-row weight[i] * (logsumexp(logits_i) - logits_i[target_i]), shape (r x 1).
template <typename T>
Var<T> softmax_cross_entropy(Var<T> logits, const std::vector<int>& targets,
                             const std::vector<T>& weights);
/// Per-row sum of binary cross-entropy of sigmoid(logits) against targets,
/// shape (r x 1).
template <typename T>
Var<T> sigmoid_binary_cross_entropy(Var<T> logits, const NumArray<T>& targets);

/// Row-wise log-softmax of a plain array, computed in double precision.
template <typename T>
std::vector<double> log_softmax_row(const NumArray<T>& logits, std::size_t row);

}  // namespace morphinf
