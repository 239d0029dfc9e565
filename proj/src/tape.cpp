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

#include "morphinf/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

namespace morphinf {

namespace {

[[noreturn]] void shape_mismatch(const char* op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a) + " vs " +
                   shape_string(b));
}

template <typename T>
Tape<T>& tape_of(const char* op, Var<T> a) {
  if (a.tape == nullptr) throw std::invalid_argument(std::string(op) + ": null variable");
  a.tape->check(a, op);
  return *a.tape;
}

template <typename T>
Tape<T>& tape_of(const char* op, Var<T> a, Var<T> b) {
  Tape<T>& tape = tape_of(op, a);
  tape.check(b, op);
  return tape;
}

}  // namespace

// ---------------------------------------------------------------------------
// Tape

template <typename T>
Var<T> Tape<T>::leaf(const char* op, NumArray<T> value, bool needs_grad) {
  if (!value.all_finite()) throw NumericError(std::string(op) + ": non-finite input value");
  Node node;
  node.op = op;
  node.value = std::move(value);
  node.needs_grad = needs_grad && record_;
  nodes_.push_back(std::move(node));
  return Var<T>{this, nodes_.size() - 1};
}

template <typename T>
Var<T> Tape<T>::constant(NumArray<T> value) {
  return leaf("constant", std::move(value), false);
}

template <typename T>
Var<T> Tape<T>::variable(NumArray<T> value) {
  return leaf("variable", std::move(value), true);
}

template <typename T>
Var<T> Tape<T>::param(const Parameter<T>& p) {
  if (auto it = param_index_.find(&p); it != param_index_.end()) {
    return Var<T>{this, it->second};
  }
  Var<T> v = leaf("param", p.value, true);
  param_index_.emplace(&p, v.index);
  bound_params_.emplace_back(&p, v.index);
  return v;
}

template <typename T>
void Tape<T>::check(Var<T> v, const char* op) const {
  if (v.tape != this || v.index >= nodes_.size()) {
    throw std::invalid_argument(std::string(op) + ": node is not on this tape");
  }
}

template <typename T>
const NumArray<T>& Tape<T>::value(Var<T> v) const {
  check(v, "value");
  return nodes_[v.index].value;
}

template <typename T>
NumArray<T> Tape<T>::gradient(Var<T> v) const {
  check(v, "gradient");
  const Node& node = nodes_[v.index];
  if (node.grad.empty()) return NumArray<T>(node.value.shape(), T(0));
  return node.grad;
}

template <typename T>
const NumArray<T>* Tape<T>::gradient_of(const Parameter<T>& p) const {
  auto it = param_index_.find(&p);
  if (it == param_index_.end()) return nullptr;
  const Node& node = nodes_[it->second];
  return node.grad.empty() ? nullptr : &node.grad;
}

template <typename T>
std::vector<std::pair<const Parameter<T>*, const NumArray<T>*>> Tape<T>::parameter_gradients() const {
  std::vector<std::pair<const Parameter<T>*, const NumArray<T>*>> out;
  for (const auto& [p, index] : bound_params_) {
    const Node& node = nodes_[index];
    if (!node.grad.empty()) out.emplace_back(p, &node.grad);
  }
  return out;
}

template <typename T>
NumArray<T>& Tape<T>::accumulator(std::size_t node) {
  Node& n = nodes_[node];
  if (n.grad.empty()) n.grad = NumArray<T>(n.value.shape(), T(0));
  return n.grad;
}

template <typename T>
Var<T> Tape<T>::push(const char* op, NumArray<T> value, std::vector<std::size_t> inputs,
                     Backprop backprop) {
  if (!value.all_finite()) throw NumericError(std::string(op) + ": produced a non-finite value");
  Node node;
  node.op = op;
  node.value = std::move(value);
  if (record_) {
    for (const std::size_t i : inputs) {
      if (nodes_[i].needs_grad) {
        node.needs_grad = true;
        break;
      }
    }
  }
  if (node.needs_grad) {
    node.inputs = std::move(inputs);
    node.backprop = std::move(backprop);
  }
  nodes_.push_back(std::move(node));
  return Var<T>{this, nodes_.size() - 1};
}

template <typename T>
void Tape<T>::backward(Var<T> loss) {
  if (!record_) throw std::logic_error("backward: tape does not record gradients");
  check(loss, "backward");
  if (nodes_[loss.index].value.size() != 1) {
    throw ShapeError("backward: loss must be a scalar, got shape " +
                     shape_string(nodes_[loss.index].value.shape()));
  }
  for (Node& node : nodes_) node.grad = NumArray<T>();
  accumulator(loss.index)[0] = T(1);
  for (std::size_t i = loss.index + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (node.grad.empty() || !node.backprop) continue;
    node.backprop(*this, i);
  }
}

// ---------------------------------------------------------------------------
// Operations

template <typename T>
Var<T> matmul(Var<T> a, Var<T> b) {
  Tape<T>& tape = tape_of("matmul", a, b);
  const NumArray<T>& av = a.value();
  const NumArray<T>& bv = b.value();
  if (av.cols() != bv.rows()) shape_mismatch("matmul", av.shape(), bv.shape());
  NumArray<T> out = NumArray<T>::matrix(av.rows(), bv.cols());
  out.mat().noalias() = av.mat() * bv.mat();
  const std::size_t ai = a.index, bi = b.index;
  return tape.push("matmul", std::move(out), {ai, bi}, [ai, bi](Tape<T>& t, std::size_t self) {
    const NumArray<T>& g = t.grad_at(self);
    if (t.needs_grad(ai)) {
      t.accumulator(ai).mat().noalias() += g.mat() * t.value_at(bi).mat().transpose();
    }
    if (t.needs_grad(bi)) {
      t.accumulator(bi).mat().noalias() += t.value_at(ai).mat().transpose() * g.mat();
    }
  });
}

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  Tape<T>& tape = tape_of("add", a, b);
  const NumArray<T>& av = a.value();
  const NumArray<T>& bv = b.value();
  if (av.shape() != bv.shape()) shape_mismatch("add", av.shape(), bv.shape());
  NumArray<T> out = av;
  out.arr() += bv.arr();
  const std::size_t ai = a.index, bi = b.index;
  return tape.push("add", std::move(out), {ai, bi}, [ai, bi](Tape<T>& t, std::size_t self) {
    const NumArray<T>& g = t.grad_at(self);
    if (t.needs_grad(ai)) t.accumulator(ai).arr() += g.arr();
    if (t.needs_grad(bi)) t.accumulator(bi).arr() += g.arr();
  });
}

template <typename T>
Var<T> add_bias(Var<T> x, Var<T> bias) {
  Tape<T>& tape = tape_of("add_bias", x, bias);
  const NumArray<T>& xv = x.value();
  const NumArray<T>& bv = bias.value();
  if (bv.rows() != 1 || bv.cols() != xv.cols()) shape_mismatch("add_bias", xv.shape(), bv.shape());
  NumArray<T> out = xv;
  out.mat().rowwise() += bv.mat().row(0);
  const std::size_t xi = x.index, bi = bias.index;
  return tape.push("add_bias", std::move(out), {xi, bi}, [xi, bi](Tape<T>& t, std::size_t self) {
    const NumArray<T>& g = t.grad_at(self);
    if (t.needs_grad(xi)) t.accumulator(xi).arr() += g.arr();
    if (t.needs_grad(bi)) t.accumulator(bi).mat().row(0) += g.mat().colwise().sum();
  });
}

template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
  Tape<T>& tape = tape_of("mul", a, b);
  const NumArray<T>& av = a.value();
  const NumArray<T>& bv = b.value();
  if (av.shape() != bv.shape()) shape_mismatch("mul", av.shape(), bv.shape());
  NumArray<T> out = av;
  out.arr() *= bv.arr();
  const std::size_t ai = a.index, bi = b.index;
  return tape.push("mul", std::move(out), {ai, bi}, [ai, bi](Tape<T>& t, std::size_t self) {
    const NumArray<T>& g = t.grad_at(self);
    if (t.needs_grad(ai)) t.accumulator(ai).arr() += g.arr() * t.value_at(bi).arr();
    if (t.needs_grad(bi)) t.accumulator(bi).arr() += g.arr() * t.value_at(ai).arr();
  });
}

template <typename T>
Var<T> mul_col(Var<T> x, Var<T> column) {
  Tape<T>& tape = tape_of("mul_col", x, column);
  const NumArray<T>& xv = x.value();
  const NumArray<T>& cv = column.value();
  if (cv.cols() != 1 || cv.rows() != xv.rows()) shape_mismatch("mul_col", xv.shape(), cv.shape());
  NumArray<T> out = xv;
  out.mat().array().colwise() *= cv.mat().col(0).array();
  const std::size_t xi = x.index, ci = column.index;
  return tape.push("mul_col", std::move(out), {xi, ci}, [xi, ci](Tape<T>& t, std::size_t self) {
    const NumArray<T>& g = t.grad_at(self);
    if (t.needs_grad(xi)) {
      t.accumulator(xi).mat().array() += g.mat().array().colwise() * t.value_at(ci).mat().col(0).array();
    }
    if (t.needs_grad(ci)) {
      t.accumulator(ci).mat().col(0) +=
          (g.mat().array() * t.value_at(xi).mat().array()).rowwise().sum().matrix();
    }
  });
}

template <typename T>
Var<T> mask_mul(Var<T> x, const NumArray<T>& mask) {
  Tape<T>& tape = tape_of("mask_mul", x);
  const NumArray<T>& xv = x.value();
  if (mask.shape() != xv.shape()) shape_mismatch("mask_mul", xv.shape(), mask.shape());
  NumArray<T> out = xv;
  out.arr() *= mask.arr();
  auto saved = std::make_shared<const NumArray<T>>(mask);
  const std::size_t xi = x.index;
  return tape.push("mask_mul", std::move(out), {xi}, [xi, saved](Tape<T>& t, std::size_t self) {
    t.accumulator(xi).arr() += t.grad_at(self).arr() * saved->arr();
  });
}

template <typename T>
Var<T> scale(Var<T> x, T factor) {
  Tape<T>& tape = tape_of("scale", x);
  NumArray<T> out = x.value();
  out.arr() *= factor;
  const std::size_t xi = x.index;
  return tape.push("scale", std::move(out), {xi}, [xi, factor](Tape<T>& t, std::size_t self) {
    t.accumulator(xi).arr() += factor * t.grad_at(self).arr();
  });
}

template <typename T>
Var<T> tanh(Var<T> x) {
  Tape<T>& tape = tape_of("tanh", x);
  NumArray<T> out = x.value();
  out.arr() = out.arr().tanh();
  const std::size_t xi = x.index;
  return tape.push("tanh", std::move(out), {xi}, [xi](Tape<T>& t, std::size_t self) {
    const auto y = t.value_at(self).arr();
    t.accumulator(xi).arr() += t.grad_at(self).arr() * (T(1) - y * y);
  });
}

template <typename T>
Var<T> sigmoid(Var<T> x) {
  Tape<T>& tape = tape_of("sigmoid", x);
  NumArray<T> out = x.value();
  for (T& v : out.values()) v = T(1) / (T(1) + std::exp(-v));
  const std::size_t xi = x.index;
  return tape.push("sigmoid", std::move(out), {xi}, [xi](Tape<T>& t, std::size_t self) {
    const auto y = t.value_at(self).arr();
    t.accumulator(xi).arr() += t.grad_at(self).arr() * y * (T(1) - y);
  });
}

template <typename T>
Var<T> softmax(Var<T> x, const NumArray<T>* mask) {
  Tape<T>& tape = tape_of("softmax", x);
  const NumArray<T>& xv = x.value();
  if (mask != nullptr && mask->shape() != xv.shape()) {
    shape_mismatch("softmax", xv.shape(), mask->shape());
  }
  NumArray<T> out(xv.shape(), T(0));
  const std::size_t rows = xv.rows(), cols = xv.cols();
  for (std::size_t r = 0; r < rows; ++r) {
    T peak = -std::numeric_limits<T>::infinity();
    for (std::size_t c = 0; c < cols; ++c) {
      if (mask == nullptr || (*mask)(r, c) != T(0)) peak = std::max(peak, xv(r, c));
    }
    if (!std::isfinite(peak)) throw std::invalid_argument("softmax: row with every entry masked");
    T total = 0;
    for (std::size_t c = 0; c < cols; ++c) {
      if (mask == nullptr || (*mask)(r, c) != T(0)) {
        out(r, c) = std::exp(xv(r, c) - peak);
        total += out(r, c);
      }
    }
    for (std::size_t c = 0; c < cols; ++c) out(r, c) /= total;
  }
  const std::size_t xi = x.index;
  return tape.push("softmax", std::move(out), {xi}, [xi](Tape<T>& t, std::size_t self) {
    const auto y = t.value_at(self).mat().array();
    const auto g = t.grad_at(self).mat().array();
    const auto dot = (g * y).rowwise().sum();
    t.accumulator(xi).mat().array() += y * (g.colwise() - dot);
  });
}

template <typename T>
Var<T> concat_cols(const std::vector<Var<T>>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  Tape<T>& tape = tape_of("concat_cols", parts.front());
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  std::vector<std::size_t> inputs;
  std::vector<std::size_t> offsets;
  for (const Var<T>& p : parts) {
    tape.check(p, "concat_cols");
    if (p.rows() != rows) shape_mismatch("concat_cols", parts.front().shape(), p.shape());
    offsets.push_back(cols);
    cols += p.cols();
    inputs.push_back(p.index);
  }
  NumArray<T> out = NumArray<T>::matrix(rows, cols);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const NumArray<T>& pv = parts[i].value();
    out.mat().middleCols(offsets[i], pv.cols()) = pv.mat();
  }
  return tape.push("concat_cols", std::move(out), inputs,
                   [inputs, offsets](Tape<T>& t, std::size_t self) {
                     const NumArray<T>& g = t.grad_at(self);
                     for (std::size_t i = 0; i < inputs.size(); ++i) {
                       if (!t.needs_grad(inputs[i])) continue;
                       NumArray<T>& acc = t.accumulator(inputs[i]);
                       acc.mat() += g.mat().middleCols(offsets[i], acc.cols());
                     }
                   });
}

template <typename T>
Var<T> slice_cols(Var<T> x, std::size_t start, std::size_t count) {
  Tape<T>& tape = tape_of("slice_cols", x);
  const NumArray<T>& xv = x.value();
  if (count == 0 || start + count > xv.cols()) {
    shape_mismatch("slice_cols", xv.shape(), Shape{start, count});
  }
  NumArray<T> out = NumArray<T>::matrix(xv.rows(), count);
  out.mat() = xv.mat().middleCols(start, count);
  const std::size_t xi = x.index;
  return tape.push("slice_cols", std::move(out), {xi},
                   [xi, start, count](Tape<T>& t, std::size_t self) {
                     t.accumulator(xi).mat().middleCols(start, count) += t.grad_at(self).mat();
                   });
}

template <typename T>
Var<T> gather_rows(Var<T> table, const std::vector<int>& ids) {
  Tape<T>& tape = tape_of("gather_rows", table);
  const NumArray<T>& tv = table.value();
  if (ids.empty()) throw ShapeError("gather_rows: empty id list");
  for (const int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= tv.rows()) {
      throw std::out_of_range("gather_rows: id " + std::to_string(id) + " outside table of " +
                              std::to_string(tv.rows()) + " rows");
    }
  }
  NumArray<T> out = NumArray<T>::matrix(ids.size(), tv.cols());
  for (std::size_t r = 0; r < ids.size(); ++r) out.mat().row(r) = tv.mat().row(ids[r]);
  const std::size_t ti = table.index;
  return tape.push("gather_rows", std::move(out), {ti}, [ti, ids](Tape<T>& t, std::size_t self) {
    const NumArray<T>& g = t.grad_at(self);
    NumArray<T>& acc = t.accumulator(ti);
    for (std::size_t r = 0; r < ids.size(); ++r) acc.mat().row(ids[r]) += g.mat().row(r);
  });
}

template <typename T>
Var<T> sum(Var<T> x) {
  Tape<T>& tape = tape_of("sum", x);
  const std::size_t xi = x.index;
  return tape.push("sum", NumArray<T>::scalar(x.value().arr().sum()), {xi},
                   [xi](Tape<T>& t, std::size_t self) {
                     t.accumulator(xi).arr() += t.grad_at(self)[0];
                   });
}

template <typename T>
Var<T> mean(Var<T> x) {
  Tape<T>& tape = tape_of("mean", x);
  const std::size_t xi = x.index;
  const T n = static_cast<T>(x.value().size());
  return tape.push("mean", NumArray<T>::scalar(x.value().arr().sum() / n), {xi},
                   [xi, n](Tape<T>& t, std::size_t self) {
                     t.accumulator(xi).arr() += t.grad_at(self)[0] / n;
                   });
}

template <typename T>
Var<T> softmax_cross_entropy(Var<T> logits, const std::vector<int>& targets,
                             const std::vector<T>& weights) {
  Tape<T>& tape = tape_of("softmax_cross_entropy", logits);
  const NumArray<T>& lv = logits.value();
  const std::size_t rows = lv.rows(), cols = lv.cols();
  if (targets.size() != rows || weights.size() != rows) {
    shape_mismatch("softmax_cross_entropy", lv.shape(), Shape{targets.size(), weights.size()});
  }
  NumArray<T> out = NumArray<T>::matrix(rows, 1);
  for (std::size_t r = 0; r < rows; ++r) {
    if (targets[r] < 0 || static_cast<std::size_t>(targets[r]) >= cols) {
      throw std::out_of_range("softmax_cross_entropy: target " + std::to_string(targets[r]) +
                              " outside " + std::to_string(cols) + " classes");
    }
    if (weights[r] == T(0)) continue;
    const auto row = lv.mat().row(r).array();
    const T peak = row.maxCoeff();
    const T lse = peak + std::log((row - peak).exp().sum());
    out(r, 0) = weights[r] * (lse - lv(r, targets[r]));
  }
  const std::size_t li = logits.index;
  return tape.push("softmax_cross_entropy", std::move(out), {li},
                   [li, targets, weights](Tape<T>& t, std::size_t self) {
                     const NumArray<T>& lv = t.value_at(li);
                     const NumArray<T>& g = t.grad_at(self);
                     NumArray<T>& acc = t.accumulator(li);
                     for (std::size_t r = 0; r < lv.rows(); ++r) {
                       const T coeff = g(r, 0) * weights[r];
                       if (coeff == T(0)) continue;
                       const auto row = lv.mat().row(r).array();
                       const auto e = (row - row.maxCoeff()).exp();
                       acc.mat().row(r).array() += coeff * e / e.sum();
                       acc(r, targets[r]) -= coeff;
                     }
                   });
}

template <typename T>
Var<T> sigmoid_binary_cross_entropy(Var<T> logits, const NumArray<T>& targets) {
  Tape<T>& tape = tape_of("sigmoid_binary_cross_entropy", logits);
  const NumArray<T>& lv = logits.value();
  if (targets.shape() != lv.shape()) {
    shape_mismatch("sigmoid_binary_cross_entropy", lv.shape(), targets.shape());
  }
  NumArray<T> out = NumArray<T>::matrix(lv.rows(), 1);
  for (std::size_t r = 0; r < lv.rows(); ++r) {
    T total = 0;
    for (std::size_t c = 0; c < lv.cols(); ++c) {
      const T x = lv(r, c);
      total += std::max(x, T(0)) - x * targets(r, c) + std::log1p(std::exp(-std::abs(x)));
    }
    out(r, 0) = total;
  }
  auto saved = std::make_shared<const NumArray<T>>(targets);
  const std::size_t li = logits.index;
  return tape.push("sigmoid_binary_cross_entropy", std::move(out), {li},
                   [li, saved](Tape<T>& t, std::size_t self) {
                     const NumArray<T>& lv = t.value_at(li);
                     const NumArray<T>& g = t.grad_at(self);
                     NumArray<T>& acc = t.accumulator(li);
                     for (std::size_t r = 0; r < lv.rows(); ++r) {
                       for (std::size_t c = 0; c < lv.cols(); ++c) {
                         const T p = T(1) / (T(1) + std::exp(-lv(r, c)));
                         acc(r, c) += g(r, 0) * (p - (*saved)(r, c));
                       }
                     }
                   });
}

template <typename T>
std::vector<double> log_softmax_row(const NumArray<T>& logits, std::size_t row) {
  const std::size_t cols = logits.cols();
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < cols; ++c) peak = std::max(peak, static_cast<double>(logits(row, c)));
  double total = 0;
  for (std::size_t c = 0; c < cols; ++c) total += std::exp(static_cast<double>(logits(row, c)) - peak);
  const double lse = peak + std::log(total);
  std::vector<double> out(cols);
  for (std::size_t c = 0; c < cols; ++c) out[c] = static_cast<double>(logits(row, c)) - lse;
  return out;
}

#define MORPHINF_INSTANTIATE_OPS(T)                                                          \
  template class Tape<T>;                                                                     \
  template Var<T> matmul(Var<T>, Var<T>);                                                     \
  template Var<T> add(Var<T>, Var<T>);                                                        \
  template Var<T> add_bias(Var<T>, Var<T>);                                                   \
  template Var<T> mul(Var<T>, Var<T>);                                                        \
  template Var<T> mul_col(Var<T>, Var<T>);                                                    \
  template Var<T> mask_mul(Var<T>, const NumArray<T>&);                                       \
  template Var<T> scale(Var<T>, T);                                                           \
  template Var<T> tanh(Var<T>);                                                               \
  template Var<T> sigmoid(Var<T>);                                                            \
  template Var<T> softmax(Var<T>, const NumArray<T>*);                                        \
  template Var<T> concat_cols(const std::vector<Var<T>>&);                                    \
  template Var<T> slice_cols(Var<T>, std::size_t, std::size_t);                               \
  template Var<T> gather_rows(Var<T>, const std::vector<int>&);                               \
  template Var<T> sum(Var<T>);                                                                \
  template Var<T> mean(Var<T>);                                                               \
  template Var<T> softmax_cross_entropy(Var<T>, const std::vector<int>&, const std::vector<T>&); \
  template Var<T> sigmoid_binary_cross_entropy(Var<T>, const NumArray<T>&);                   \
  template std::vector<double> log_softmax_row(const NumArray<T>&, std::size_t);

MORPHINF_INSTANTIATE_OPS(float)
MORPHINF_INSTANTIATE_OPS(double)

}  // namespace morphinf
