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

#include "morphinf/layers.hpp"

#include <stdexcept>

namespace morphinf {

template <typename T>
Parameter<T>& ParameterSet<T>::add(std::string name, Shape shape) {
  if (find(name) != nullptr) throw std::invalid_argument("duplicate parameter name: " + name);
  params_.push_back(std::make_unique<Parameter<T>>(Parameter<T>{std::move(name), NumArray<T>(std::move(shape))}));
  return *params_.back();
}

template <typename T>
Parameter<T>* ParameterSet<T>::find(const std::string& name) {
  for (auto& p : params_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

template <typename T>
const Parameter<T>* ParameterSet<T>::find(const std::string& name) const {
  for (const auto& p : params_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

template <typename T>
std::vector<Parameter<T>*> ParameterSet<T>::all() {
  std::vector<Parameter<T>*> out;
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

template <typename T>
std::size_t ParameterSet<T>::element_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

namespace {

template <typename T>
void fill_uniform(NumArray<T>& a, const Initializer& init) {
  if (init.rng == nullptr) return;
  std::uniform_real_distribution<double> dist(-init.range, init.range);
  for (T& v : a.values()) v = static_cast<T>(dist(*init.rng));
}

}  // namespace

template <typename T>
DenseParams<T> make_dense(ParameterSet<T>& set, const std::string& prefix, std::size_t in,
                          std::size_t out, const Initializer& init) {
  DenseParams<T> p;
  p.weight = &set.add(prefix + ".weight", {in, out});
  p.bias = &set.add(prefix + ".bias", {out});
  fill_uniform(p.weight->value, init);
  return p;
}

template <typename T>
LstmParams<T> make_lstm(ParameterSet<T>& set, const std::string& prefix, std::size_t in,
                        std::size_t hidden, const Initializer& init) {
  LstmParams<T> p;
  p.input_size = in;
  p.hidden_size = hidden;
  p.input_weight = &set.add(prefix + ".input_weight", {in, 4 * hidden});
  p.hidden_weight = &set.add(prefix + ".hidden_weight", {hidden, 4 * hidden});
  p.bias = &set.add(prefix + ".bias", {4 * hidden});
  fill_uniform(p.input_weight->value, init);
  fill_uniform(p.hidden_weight->value, init);
  if (init.rng != nullptr) {
    for (std::size_t i = hidden; i < 2 * hidden; ++i) p.bias->value[i] = T(1);
  }
  return p;
}

template <typename T>
AttentionParams<T> make_attention(ParameterSet<T>& set, const std::string& prefix,
                                  std::size_t hidden, std::size_t width, const Initializer& init) {
  AttentionParams<T> p;
  p.query = &set.add(prefix + ".query", {hidden, width});
  p.key = &set.add(prefix + ".key", {hidden, width});
  p.score = &set.add(prefix + ".score", {width, 1});
  fill_uniform(p.query->value, init);
  fill_uniform(p.key->value, init);
  fill_uniform(p.score->value, init);
  return p;
}

template <typename T>
Var<T> dense(Var<T> x, const DenseParams<T>& p, Activation activation) {
  Tape<T>& tape = *x.tape;
  Var<T> y = add_bias(matmul(x, tape.param(*p.weight)), tape.param(*p.bias));
  switch (activation) {
    case Activation::kTanh:
      return tanh(y);
    case Activation::kSigmoid:
      return sigmoid(y);
    case Activation::kIdentity:
      break;
  }
  return y;
}

template <typename T>
LstmState<T> lstm_step(Var<T> x, const LstmState<T>& prev, const LstmParams<T>& p,
                       const std::type_identity_t<NumArray<T>>* input_mask,
                       const std::type_identity_t<NumArray<T>>* recurrent_mask) {
  Tape<T>& tape = *x.tape;
  const std::size_t hidden = p.hidden_size;
  if (x.cols() != p.input_size) {
    throw ShapeError("lstm_step: input shape " + shape_string(x.shape()) + " vs input size " +
                     std::to_string(p.input_size));
  }
  if (prev.h.cols() != hidden || prev.c.shape() != prev.h.shape() || prev.h.rows() != x.rows()) {
    throw ShapeError("lstm_step: state shape " + shape_string(prev.h.shape()) + " vs input " +
                     shape_string(x.shape()));
  }
  Var<T> xin = input_mask ? mask_mul(x, *input_mask) : x;
  Var<T> hin = recurrent_mask ? mask_mul(prev.h, *recurrent_mask) : prev.h;
  Var<T> gates = add_bias(add(matmul(xin, tape.param(*p.input_weight)),
                              matmul(hin, tape.param(*p.hidden_weight))),
                          tape.param(*p.bias));
  Var<T> in_gate = sigmoid(slice_cols(gates, 0, hidden));
  Var<T> forget_gate = sigmoid(slice_cols(gates, hidden, hidden));
  Var<T> candidate = tanh(slice_cols(gates, 2 * hidden, hidden));
  Var<T> out_gate = sigmoid(slice_cols(gates, 3 * hidden, hidden));
  Var<T> c = add(mul(forget_gate, prev.c), mul(in_gate, candidate));
  Var<T> h = mul(out_gate, tanh(c));
  return {h, c};
}

template <typename T>
AttentionMemory<T> prepare_attention(const std::vector<Var<T>>& states,
                                     const AttentionParams<T>& p,
                                     std::optional<std::type_identity_t<NumArray<T>>> mask) {
  if (states.empty()) throw std::invalid_argument("attend: empty encoder sequence");
  Tape<T>& tape = *states.front().tape;
  AttentionMemory<T> memory;
  memory.states = states;
  Var<T> key = tape.param(*p.key);
  for (const Var<T>& s : states) memory.keys.push_back(matmul(s, key));
  if (mask && (mask->rows() != states.front().rows() || mask->cols() != states.size())) {
    throw ShapeError("attend: mask shape " + shape_string(mask->shape()) + " vs " +
                     std::to_string(states.size()) + " states");
  }
  memory.mask = std::move(mask);
  return memory;
}

template <typename T>
AttentionResult<T> attend(Var<T> query_state, const AttentionMemory<T>& memory,
                          const AttentionParams<T>& p) {
  if (memory.states.empty()) throw std::invalid_argument("attend: empty encoder sequence");
  Tape<T>& tape = *query_state.tape;
  Var<T> query = matmul(query_state, tape.param(*p.query));
  Var<T> score = tape.param(*p.score);
  std::vector<Var<T>> energies;
  energies.reserve(memory.keys.size());
  for (const Var<T>& key : memory.keys) {
    energies.push_back(matmul(tanh(add(query, key)), score));
  }
  Var<T> weights = softmax(concat_cols(energies), memory.mask ? &*memory.mask : nullptr);
  Var<T> context = mul_col(memory.states[0], slice_cols(weights, 0, 1));
  for (std::size_t i = 1; i < memory.states.size(); ++i) {
    context = add(context, mul_col(memory.states[i], slice_cols(weights, i, 1)));
  }
  return {context, weights};
}

template <typename T>
DropoutMaskSet<T> sample_masks(std::span<const MaskWidth> widths, std::size_t sequences,
                               double keep_prob, Rng& rng) {
  if (!(keep_prob > 0.0 && keep_prob <= 1.0)) {
    throw std::invalid_argument("sample_masks: keep probability must be in (0, 1], got " +
                                std::to_string(keep_prob));
  }
  DropoutMaskSet<T> set;
  const T kept = static_cast<T>(1.0 / keep_prob);
  std::bernoulli_distribution keep(keep_prob);
  for (const MaskWidth& w : widths) {
    NumArray<T> mask = NumArray<T>::matrix(sequences, w.width);
    for (T& v : mask.values()) v = keep(rng) ? kept : T(0);
    set.set(w.site, std::move(mask));
  }
  return set;
}

#define MORPHINF_INSTANTIATE_LAYERS(T)                                                         \
  template class ParameterSet<T>;                                                              \
  template DenseParams<T> make_dense(ParameterSet<T>&, const std::string&, std::size_t,        \
                                     std::size_t, const Initializer&);                         \
  template LstmParams<T> make_lstm(ParameterSet<T>&, const std::string&, std::size_t,          \
                                   std::size_t, const Initializer&);                           \
  template AttentionParams<T> make_attention(ParameterSet<T>&, const std::string&,             \
                                             std::size_t, std::size_t, const Initializer&);    \
  template Var<T> dense(Var<T>, const DenseParams<T>&, Activation);                            \
  template LstmState<T> lstm_step(Var<T>, const LstmState<T>&, const LstmParams<T>&,           \
                                  const NumArray<T>*, const NumArray<T>*);                     \
  template AttentionMemory<T> prepare_attention(const std::vector<Var<T>>&,                    \
                                                const AttentionParams<T>&,                     \
                                                std::optional<NumArray<T>>);                   \
  template AttentionResult<T> attend(Var<T>, const AttentionMemory<T>&,                        \
                                     const AttentionParams<T>&);                               \
  template DropoutMaskSet<T> sample_masks(std::span<const MaskWidth>, std::size_t, double, Rng&);

MORPHINF_INSTANTIATE_LAYERS(float)
MORPHINF_INSTANTIATE_LAYERS(double)

}  // namespace morphinf
