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

#pragma once

#include <cstddef>
#include <unordered_map>
#include <utility>
#include <vector>

#include "morphinf/layers.hpp"
#include "morphinf/tape.hpp"

namespace morphinf {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename T>
struct Gradient {
  Parameter<T>* param = nullptr;
  NumArray<T> value;
};

/// Copies the gradients a tape holds for members of `params`.
template <typename T>
std::vector<Gradient<T>> collect_gradients(const Tape<T>& tape, ParameterSet<T>& params);

template <typename T>
double global_norm(const std::vector<Gradient<T>>& grads);

/// Rescales all gradients so their joint L2 norm is at most max_norm.
/// Returns the norm before clipping.
template <typename T>
double clip_global_norm(std::vector<Gradient<T>>& grads, double max_norm);

/// Bias-corrected Adam. Moment estimates and the step count are kept per
/// parameter, so a parameter absent from an update is left untouched.
template <typename T>
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  /// Applies one step to each listed parameter. If any gradient is
  /// non-finite nothing changes and false is returned.
  bool update(const std::vector<Gradient<T>>& grads);

  std::size_t steps(const Parameter<T>& p) const;
  const AdamConfig& config() const { return config_; }

 private:
  struct Slot {
    NumArray<T> first;
    NumArray<T> second;
    std::size_t step = 0;
  };

  AdamConfig config_;
  std::unordered_map<const Parameter<T>*, Slot> slots_;
};

}  // namespace morphinf
