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

// Neural building blocks on top of the tape: dense layers, LSTM cells,
// additive attention and variational dropout masks.
//
// Weight matrices are stored input-major (in x out), so a batch of row
// vectors X (batch x in) maps to X * W + b. Packed LSTM gate columns are
// ordered (input, forget, candidate, output), H columns each.

#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <type_traits>
#include <vector>

#include "morphinf/tape.hpp"

namespace morphinf {

using Rng = std::mt19937_64;

/// Ordered owner of named parameters. References stay valid for the
/// lifetime of the set.
template <typename T>
class ParameterSet {
 public:
  ParameterSet() = default;
  ParameterSet(const ParameterSet&) = delete;
  ParameterSet& operator=(const ParameterSet&) = delete;
  ParameterSet(ParameterSet&&) noexcept = default;
  ParameterSet& operator=(ParameterSet&&) noexcept = default;

  Parameter<T>& add(std::string name, Shape shape);
  Parameter<T>* find(const std::string& name);
  const Parameter<T>* find(const std::string& name) const;

  std::size_t size() const { return params_.size(); }
  Parameter<T>& operator[](std::size_t i) { return *params_[i]; }
  const Parameter<T>& operator[](std::size_t i) const { return *params_[i]; }
  std::vector<Parameter<T>*> all();
  std::size_t element_count() const;

 private:
  std::vector<std::unique_ptr<Parameter<T>>> params_;
};

/// Uniform weights in [-range, range]; biases zero except the LSTM forget
/// gate, which starts at 1.
struct Initializer {
  Rng* rng = nullptr;  // null leaves every parameter at zero
  double range = 0.1;
};

enum class Activation { kIdentity, kTanh, kSigmoid };

template <typename T>
struct DenseParams {
  Parameter<T>* weight = nullptr;  // in x out
  Parameter<T>* bias = nullptr;    // out
};

template <typename T>
struct LstmParams {
  Parameter<T>* input_weight = nullptr;   // in x 4H
  Parameter<T>* hidden_weight = nullptr;  // H x 4H
  Parameter<T>* bias = nullptr;           // 4H
  std::size_t input_size = 0;
  std::size_t hidden_size = 0;
};

template <typename T>
struct AttentionParams {
  Parameter<T>* query = nullptr;  // H x A, applied to the decoder state
  Parameter<T>* key = nullptr;    // H x A, applied to encoder states
  Parameter<T>* score = nullptr;  // A x 1
};

template <typename T>
DenseParams<T> make_dense(ParameterSet<T>& set, const std::string& prefix, std::size_t in,
                          std::size_t out, const Initializer& init);
template <typename T>
LstmParams<T> make_lstm(ParameterSet<T>& set, const std::string& prefix, std::size_t in,
                        std::size_t hidden, const Initializer& init);
template <typename T>
AttentionParams<T> make_attention(ParameterSet<T>& set, const std::string& prefix,
                                  std::size_t hidden, std::size_t width, const Initializer& init);

/// y = activation(x W + b).
template <typename T>
Var<T> dense(Var<T> x, const DenseParams<T>& p, Activation activation);

template <typename T>
struct LstmState {
  Var<T> h;
  Var<T> c;
};

/// One LSTM update. Masks (nullptr = identity) multiply x and h_prev before
/// the gate projections.
template <typename T>
LstmState<T> lstm_step(Var<T> x, const LstmState<T>& prev, const LstmParams<T>& p,
                       const std::type_identity_t<NumArray<T>>* input_mask,
                       const std::type_identity_t<NumArray<T>>* recurrent_mask);

/// Encoder states with their key projections computed once per sequence.
template <typename T>
struct AttentionMemory {
  std::vector<Var<T>> states;  // n entries, each batch x H
  std::vector<Var<T>> keys;    // n entries, each batch x A
  std::optional<NumArray<T>> mask;  // batch x n; 0 marks padding
};

template <typename T>
AttentionMemory<T> prepare_attention(const std::vector<Var<T>>& states,
                                     const AttentionParams<T>& p,
                                     std::optional<std::type_identity_t<NumArray<T>>> mask = std::nullopt);

template <typename T>
struct AttentionResult {
  Var<T> context;  // batch x H
  Var<T> weights;  // batch x n
};

/// Additive attention: e_i = v . tanh(s W + h_i U), weights = softmax(e),
/// context = sum_i weights_i h_i.
template <typename T>
AttentionResult<T> attend(Var<T> query_state, const AttentionMemory<T>& memory,
                          const AttentionParams<T>& p);

// ---------------------------------------------------------------------------
// Dropout

enum class DropoutSite : std::size_t {
  kEncoderInput,
  kEncoderRecurrent,
  kDecoderInput,
  kDecoderRecurrent,
  kDecoderOutput,
  kFeatureOutput,
};
inline constexpr std::size_t kDropoutSiteCount = 6;

/// One mask row per sequence, reused at every timestep of that sequence.
/// A missing mask means identity (inference).
template <typename T>
class DropoutMaskSet {
 public:
  const NumArray<T>* get(DropoutSite site) const {
    const auto& m = masks_[static_cast<std::size_t>(site)];
    return m ? &*m : nullptr;
  }
  void set(DropoutSite site, NumArray<T> mask) {
    masks_[static_cast<std::size_t>(site)] = std::move(mask);
  }

 private:
  std::array<std::optional<NumArray<T>>, kDropoutSiteCount> masks_;
};

struct MaskWidth {
  DropoutSite site;
  std::size_t width;
};

/// Entries are 1/keep_prob with probability keep_prob, else 0.
template <typename T>
DropoutMaskSet<T> sample_masks(std::span<const MaskWidth> widths, std::size_t sequences,
                               double keep_prob, Rng& rng);

}  // namespace morphinf
