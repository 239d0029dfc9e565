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

// Joint inflection / analysis model.
//
// Two attentional encoder-decoders share one character embedding table:
//
//  * forward  (lemma, features) -> form. The feature bundle is encoded by a
//    tanh dense layer and concatenated to the decoder input at every step.
//  * backward form -> lemma. No feature input; instead a sigmoid dense layer
//    on the final encoder state predicts the feature bundle.
//
// Both decoders start from the final encoder (h, c), attend with the state
// before the update, and project only the new hidden state to logits. The
// sequence loss is the mean cross-entropy over target positions, per
// example. Everything else (LSTMs, attention, dense layers) is per
// direction.

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "morphinf/data.hpp"
#include "morphinf/layers.hpp"

namespace morphinf {

struct ModelConfig {
  std::size_t hidden_size = 128;  // LSTMs, embeddings, attention, feature layers
  std::size_t char_vocab_size = 0;
  std::size_t feature_vocab_size = 0;  // forward feature input adds one column for unseen tokens
};

enum class Direction { kForward, kBackward };

template <typename T>
struct DirectionParams {
  LstmParams<T> encoder;
  LstmParams<T> decoder;
  AttentionParams<T> attention;
  DenseParams<T> features;  // forward: encoding; backward: prediction head
  DenseParams<T> output;
};

template <typename T>
class InflectionModel {
 public:
  InflectionModel(const ModelConfig& config, const Initializer& init);

  const ModelConfig& config() const { return config_; }
  ParameterSet<T>& parameters() { return params_; }
  const ParameterSet<T>& parameters() const { return params_; }
  const Parameter<T>& embedding() const { return *embedding_; }
  Parameter<T>& embedding() { return *embedding_; }
  const DirectionParams<T>& direction(Direction d) const {
    return d == Direction::kForward ? forward_ : backward_;
  }
  /// Parameters owned by one direction; the shared embedding is excluded.
  std::vector<Parameter<T>*> direction_parameters(Direction d);

  template <typename U>
  InflectionModel<U> cast() const {
    InflectionModel<U> out(config_, Initializer{});
    for (std::size_t i = 0; i < params_.size(); ++i) {
      out.parameters()[i].value = params_[i].value.template cast<U>();
    }
    return out;
  }

 private:
  ModelConfig config_;
  ParameterSet<T> params_;
  Parameter<T>* embedding_ = nullptr;
  DirectionParams<T> forward_;
  DirectionParams<T> backward_;
};

/// Dropout sites and widths used by one direction of `model`.
template <typename T>
std::vector<MaskWidth> dropout_widths(const InflectionModel<T>& model, Direction d);

/// Multi-hot (rows x width) with set semantics.
template <typename T>
NumArray<T> multi_hot(std::span<const std::vector<int>* const> bundles, std::size_t width);

template <typename T>
struct EncoderOutput {
  std::vector<Var<T>> states;  // one per input symbol, each batch x H
  LstmState<T> final;
  std::optional<NumArray<T>> mask;  // batch x n when rows are padded
};

/// Left-to-right LSTM over embedded characters. Rows must end with EOS.
template <typename T>
EncoderOutput<T> encode(Tape<T>& tape, const InflectionModel<T>& model, Direction d,
                        const PaddedSequences& source, const DropoutMaskSet<T>& masks);

/// tanh(W multi_hot + b) with the forward feature layer.
template <typename T>
Var<T> encode_features(Tape<T>& tape, const InflectionModel<T>& model,
                       std::span<const std::vector<int>* const> bundles);

/// Per-example forward losses (batch x 1) under teacher forcing.
template <typename T>
Var<T> forward_loss(Tape<T>& tape, const InflectionModel<T>& model,
                    std::span<const EncodedExample* const> batch, const DropoutMaskSet<T>& masks);

template <typename T>
struct BackwardLoss {
  Var<T> lemma;     // batch x 1 mean cross-entropy of the lemma
  Var<T> features;  // batch x 1 summed binary cross-entropy of the bundle
  Var<T> total;     // lemma + features
};

template <typename T>
BackwardLoss<T> backward_loss(Tape<T>& tape, const InflectionModel<T>& model,
                              std::span<const EncodedExample* const> batch,
                              const DropoutMaskSet<T>& masks);

/// Sigmoid feature probabilities from the backward encoder, no dropout.
template <typename T>
std::vector<double> feature_probabilities(const InflectionModel<T>& model,
                                          const std::vector<int>& form);

/// Feature ids whose probability is strictly above 0.5; may be empty.
template <typename T>
std::vector<int> predict_features(const InflectionModel<T>& model, const std::vector<int>& form);

// ---------------------------------------------------------------------------
// Step-wise inference for one input sequence.

template <typename T>
struct PreparedSource {
  Direction direction = Direction::kForward;
  std::vector<NumArray<T>> states;
  std::vector<NumArray<T>> keys;
  NumArray<T> final_h;
  NumArray<T> final_c;
  std::optional<NumArray<T>> features;  // forward only
};

template <typename T>
struct DecoderState {
  NumArray<T> h;
  NumArray<T> c;
};

template <typename T>
PreparedSource<T> prepare_source(const InflectionModel<T>& model, Direction d,
                                 const std::vector<int>& source, const std::vector<int>& features);

template <typename T>
DecoderState<T> initial_state(const PreparedSource<T>& source) {
  return {source.final_h, source.final_c};
}

/// Log-probabilities over the character vocabulary for the token after
/// `previous`, and the decoder state after consuming it.
template <typename T>
std::vector<double> next_log_probs(const InflectionModel<T>& model, const PreparedSource<T>& source,
                                   const DecoderState<T>& state, int previous, DecoderState<T>* next);

}  // namespace morphinf
