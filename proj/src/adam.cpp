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

#include "morphinf/adam.hpp"

#include <cmath>

namespace morphinf {

template <typename T>
std::vector<Gradient<T>> collect_gradients(const Tape<T>& tape, ParameterSet<T>& params) {
  std::vector<Gradient<T>> out;
  for (Parameter<T>* p : params.all()) {
    if (const NumArray<T>* g = tape.gradient_of(*p)) out.push_back({p, *g});
  }
  return out;
}

template <typename T>
double global_norm(const std::vector<Gradient<T>>& grads) {
  double total = 0;
  for (const Gradient<T>& g : grads) {
    for (const T v : g.value.values()) total += static_cast<double>(v) * static_cast<double>(v);
  }
  return std::sqrt(total);
}

template <typename T>
double clip_global_norm(std::vector<Gradient<T>>& grads, double max_norm) {
  const double norm = global_norm(grads);
  if (norm > max_norm && std::isfinite(norm)) {
    const T factor = static_cast<T>(max_norm / norm);
    for (Gradient<T>& g : grads) g.value.arr() *= factor;
  }
  return norm;
}

template <typename T>
bool Adam<T>::update(const std::vector<Gradient<T>>& grads) {
  for (const Gradient<T>& g : grads) {
    if (!g.value.all_finite()) return false;
    if (g.value.shape() != g.param->value.shape()) {
      throw ShapeError("adam: gradient shape " + shape_string(g.value.shape()) + " for " +
                       g.param->name + " " + shape_string(g.param->value.shape()));
    }
  }
  const T b1 = static_cast<T>(config_.beta1);
  const T b2 = static_cast<T>(config_.beta2);
  for (const Gradient<T>& g : grads) {
    Slot& slot = slots_[g.param];
    if (slot.first.empty()) {
      slot.first = NumArray<T>(g.param->value.shape(), T(0));
      slot.second = NumArray<T>(g.param->value.shape(), T(0));
    }
    ++slot.step;
    const double t = static_cast<double>(slot.step);
    const T correction1 = static_cast<T>(1.0 - std::pow(config_.beta1, t));
    const T correction2 = static_cast<T>(1.0 - std::pow(config_.beta2, t));
    const T lr = static_cast<T>(config_.learning_rate);
    const T eps = static_cast<T>(config_.epsilon);
    auto m = slot.first.arr();
    auto v = slot.second.arr();
    const auto grad = g.value.arr();
    m = b1 * m + (T(1) - b1) * grad;
    v = b2 * v + (T(1) - b2) * grad.square();
    g.param->value.arr() -= lr * (m / correction1) / ((v / correction2).sqrt() + eps);
  }
  return true;
}

template <typename T>
std::size_t Adam<T>::steps(const Parameter<T>& p) const {
  auto it = slots_.find(&p);
  return it == slots_.end() ? 0 : it->second.step;
}

#define MORPHINF_INSTANTIATE_ADAM(T)                                                       \
  template std::vector<Gradient<T>> collect_gradients(const Tape<T>&, ParameterSet<T>&);   \
  template double global_norm(const std::vector<Gradient<T>>&);                            \
  template double clip_global_norm(std::vector<Gradient<T>>&, double);                     \
  template class Adam<T>;

MORPHINF_INSTANTIATE_ADAM(float)
MORPHINF_INSTANTIATE_ADAM(double)

}  // namespace morphinf
