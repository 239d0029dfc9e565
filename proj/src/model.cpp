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

#include "morphinf/model.hpp"

#include <stdexcept>

namespace morphinf {

namespace {

constexpr const char* kForwardPrefix = "fwd.";
constexpr const char* kBackwardPrefix = "bwd.";

template <typename T>
DirectionParams<T> make_direction(ParameterSet<T>& set, const std::string& prefix,
                                  const ModelConfig& c, bool forward, const Initializer& init) {
  const std::size_t h = c.hidden_size;
  DirectionParams<T> p;
  p.encoder = make_lstm(set, prefix + "encoder", h, h, init);
  p.decoder = make_lstm(set, prefix + "decoder", forward ? 3 * h : 2 * h, h, init);
  p.attention = make_attention(set, prefix + "attention", h, h, init);
  p.features = forward ? make_dense(set, prefix + "features", c.feature_vocab_size + 1, h, init)
                       : make_dense(set, prefix + "features", h, c.feature_vocab_size, init);
  p.output = make_dense(set, prefix + "output", h, c.char_vocab_size, init);
  return p;
}

void check_terminated(const PaddedSequences& seqs, const char* op) {
  for (std::size_t b = 0; b < seqs.batch; ++b) {
    if (seqs.lengths[b] == 0 || seqs.at(b, seqs.lengths[b] - 1) != CharVocabulary::kEos) {
      throw std::invalid_argument(std::string(op) + ": sequence must end with EOS");
    }
  }
}

template <typename T>
NumArray<T> row_mask(const PaddedSequences& seqs, std::size_t step, std::size_t width, T on) {
  NumArray<T> m = NumArray<T>::matrix(seqs.batch, width);
  for (std::size_t b = 0; b < seqs.batch; ++b) {
    const T v = seqs.valid(b, step) ? on : T(1) - on;
    for (std::size_t j = 0; j < width; ++j) m(b, j) = v;
  }
  return m;
}

std::vector<int> column(const PaddedSequences& seqs, std::size_t step) {
  std::vector<int> ids(seqs.batch);
  for (std::size_t b = 0; b < seqs.batch; ++b) ids[b] = seqs.at(b, step);
  return ids;
}

template <typename T>
LstmState<T> decoder_step(const DirectionParams<T>& dp, const LstmState<T>& state, Var<T> prev_embedding,
                          const AttentionMemory<T>& memory, const std::optional<Var<T>>& features,
                          const DropoutMaskSet<T>& masks, Var<T>* logits) {
  const AttentionResult<T> att = attend(state.h, memory, dp.attention);
  std::vector<Var<T>> parts{prev_embedding, att.context};
  if (features) parts.push_back(*features);
  LstmState<T> next = lstm_step(concat_cols(parts), state, dp.decoder,
                                masks.get(DropoutSite::kDecoderInput),
                                masks.get(DropoutSite::kDecoderRecurrent));
  const NumArray<T>* out_mask = masks.get(DropoutSite::kDecoderOutput);
  Var<T> out = out_mask ? mask_mul(next.h, *out_mask) : next.h;
  *logits = dense(out, dp.output, Activation::kIdentity);
  return next;
}

// Per-example mean cross-entropy over target positions, teacher forced.
template <typename T>
Var<T> sequence_losses(Tape<T>& tape, const InflectionModel<T>& model, Direction d,
                       const EncoderOutput<T>& encoded, const PaddedSequences& target,
                       const std::optional<Var<T>>& features, const DropoutMaskSet<T>& masks) {
  const DirectionParams<T>& dp = model.direction(d);
  const AttentionMemory<T> memory = prepare_attention(encoded.states, dp.attention, encoded.mask);
  Var<T> table = tape.param(model.embedding());
  LstmState<T> state = encoded.final;
  Var<T> total{};
  for (std::size_t t = 0; t < target.length; ++t) {
    std::vector<int> previous = t == 0 ? std::vector<int>(target.batch, CharVocabulary::kBos)
                                       : column(target, t - 1);
    Var<T> logits;
    state = decoder_step(dp, state, gather_rows(table, previous), memory, features, masks,
                         &logits);
    std::vector<int> gold(target.batch, CharVocabulary::kPad);
    std::vector<T> weights(target.batch, T(0));
    for (std::size_t b = 0; b < target.batch; ++b) {
      if (!target.valid(b, t)) continue;
      gold[b] = target.at(b, t);
      weights[b] = T(1) / static_cast<T>(target.lengths[b]);
    }
    Var<T> step = softmax_cross_entropy(logits, gold, weights);
    total = t == 0 ? step : add(total, step);
  }
  return total;
}

std::vector<const std::vector<int>*> pick(std::span<const EncodedExample* const> batch,
                                          std::vector<int> EncodedExample::*field) {
  std::vector<const std::vector<int>*> out;
  out.reserve(batch.size());
  for (const EncodedExample* ex : batch) out.push_back(&(ex->*field));
  return out;
}

}  // namespace

template <typename T>
InflectionModel<T>::InflectionModel(const ModelConfig& config, const Initializer& init)
    : config_(config) {
  if (config.hidden_size == 0) throw std::invalid_argument("model: hidden size must be positive");
  if (config.char_vocab_size <= static_cast<std::size_t>(CharVocabulary::kReserved)) {
    throw std::invalid_argument("model: character vocabulary holds no characters");
  }
  if (config.feature_vocab_size == 0) throw std::invalid_argument("model: empty feature vocabulary");
  embedding_ = &params_.add("embedding", {config.char_vocab_size, config.hidden_size});
  if (init.rng != nullptr) {
    std::uniform_real_distribution<double> dist(-init.range, init.range);
    for (T& v : embedding_->value.values()) v = static_cast<T>(dist(*init.rng));
  }
  forward_ = make_direction(params_, kForwardPrefix, config, true, init);
  backward_ = make_direction(params_, kBackwardPrefix, config, false, init);
}

template <typename T>
std::vector<Parameter<T>*> InflectionModel<T>::direction_parameters(Direction d) {
  const std::string prefix = d == Direction::kForward ? kForwardPrefix : kBackwardPrefix;
  std::vector<Parameter<T>*> out;
  for (Parameter<T>* p : params_.all()) {
    if (p->name.starts_with(prefix)) out.push_back(p);
  }
  return out;
}

template <typename T>
std::vector<MaskWidth> dropout_widths(const InflectionModel<T>& model, Direction d) {
  const std::size_t h = model.config().hidden_size;
  std::vector<MaskWidth> widths{
      {DropoutSite::kEncoderInput, h},
      {DropoutSite::kEncoderRecurrent, h},
      {DropoutSite::kDecoderInput, d == Direction::kForward ? 3 * h : 2 * h},
      {DropoutSite::kDecoderRecurrent, h},
      {DropoutSite::kDecoderOutput, h},
  };
  if (d == Direction::kBackward) widths.push_back({DropoutSite::kFeatureOutput, h});
  return widths;
}

template <typename T>
NumArray<T> multi_hot(std::span<const std::vector<int>* const> bundles, std::size_t width) {
  NumArray<T> out = NumArray<T>::matrix(bundles.size(), width);
  for (std::size_t b = 0; b < bundles.size(); ++b) {
    for (const int id : *bundles[b]) {
      if (id < 0 || static_cast<std::size_t>(id) >= width) {
        throw std::out_of_range("multi_hot: feature id " + std::to_string(id) + " outside width " +
                                std::to_string(width));
      }
      out(b, static_cast<std::size_t>(id)) = T(1);
    }
  }
  return out;
}

template <typename T>
EncoderOutput<T> encode(Tape<T>& tape, const InflectionModel<T>& model, Direction d,
                        const PaddedSequences& source, const DropoutMaskSet<T>& masks) {
  check_terminated(source, "encode");
  const DirectionParams<T>& dp = model.direction(d);
  const std::size_t batch = source.batch, hidden = model.config().hidden_size;
  Var<T> table = tape.param(model.embedding());
  LstmState<T> state{tape.constant(NumArray<T>::matrix(batch, hidden)),
                     tape.constant(NumArray<T>::matrix(batch, hidden))};
  EncoderOutput<T> out;
  bool padded = false;
  for (std::size_t t = 0; t < source.length; ++t) {
    LstmState<T> next = lstm_step(gather_rows(table, column(source, t)), state, dp.encoder,
                                  masks.get(DropoutSite::kEncoderInput),
                                  masks.get(DropoutSite::kEncoderRecurrent));
    bool all_valid = true;
    for (std::size_t b = 0; b < batch; ++b) all_valid = all_valid && source.valid(b, t);
    if (all_valid) {
      state = next;
    } else {
      // Finished rows carry their last state forward unchanged.
      padded = true;
      const NumArray<T> keep = row_mask<T>(source, t, hidden, T(1));
      const NumArray<T> carry = row_mask<T>(source, t, hidden, T(0));
      state.h = add(mask_mul(next.h, keep), mask_mul(state.h, carry));
      state.c = add(mask_mul(next.c, keep), mask_mul(state.c, carry));
    }
    out.states.push_back(state.h);
  }
  out.final = state;
  if (padded) {
    NumArray<T> mask = NumArray<T>::matrix(batch, source.length);
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t t = 0; t < source.length; ++t) mask(b, t) = source.valid(b, t) ? T(1) : T(0);
    }
    out.mask = std::move(mask);
  }
  return out;
}

template <typename T>
Var<T> encode_features(Tape<T>& tape, const InflectionModel<T>& model,
                       std::span<const std::vector<int>* const> bundles) {
  const std::size_t width = model.config().feature_vocab_size + 1;
  if (model.config().feature_vocab_size == 0) {
    throw std::invalid_argument("encode_features: empty feature vocabulary");
  }
  Var<T> hot = tape.constant(multi_hot<T>(bundles, width));
  return dense(hot, model.direction(Direction::kForward).features, Activation::kTanh);
}

template <typename T>
Var<T> forward_loss(Tape<T>& tape, const InflectionModel<T>& model,
                    std::span<const EncodedExample* const> batch, const DropoutMaskSet<T>& masks) {
  if (batch.empty()) throw std::invalid_argument("forward_loss: empty batch");
  for (const EncodedExample* ex : batch) {
    if (ex->form.empty()) throw std::invalid_argument("forward_loss: empty target");
  }
  const auto lemmas = pick(batch, &EncodedExample::lemma);
  const auto forms = pick(batch, &EncodedExample::form);
  const auto bundles = pick(batch, &EncodedExample::features);
  const PaddedSequences source = pad_sequences(lemmas);
  const PaddedSequences target = pad_sequences(forms);
  check_terminated(target, "forward_loss");
  const EncoderOutput<T> encoded = encode(tape, model, Direction::kForward, source, masks);
  const Var<T> features = encode_features(tape, model, bundles);
  return sequence_losses(tape, model, Direction::kForward, encoded, target, std::optional(features),
                         masks);
}

template <typename T>
BackwardLoss<T> backward_loss(Tape<T>& tape, const InflectionModel<T>& model,
                              std::span<const EncodedExample* const> batch,
                              const DropoutMaskSet<T>& masks) {
  if (batch.empty()) throw std::invalid_argument("backward_loss: empty batch");
  for (const EncodedExample* ex : batch) {
    if (ex->lemma.empty()) throw std::invalid_argument("backward_loss: empty lemma");
  }
  const auto lemmas = pick(batch, &EncodedExample::lemma);
  const auto forms = pick(batch, &EncodedExample::form);
  const PaddedSequences source = pad_sequences(forms);
  const PaddedSequences target = pad_sequences(lemmas);
  check_terminated(target, "backward_loss");
  const EncoderOutput<T> encoded = encode(tape, model, Direction::kBackward, source, masks);

  BackwardLoss<T> out;
  out.lemma = sequence_losses(tape, model, Direction::kBackward, encoded, target, std::optional<Var<T>>{},
                              masks);

  // Unseen feature tokens have no output unit.
  const std::size_t width = model.config().feature_vocab_size;
  std::vector<std::vector<int>> known(batch.size());
  std::vector<const std::vector<int>*> known_ptrs;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    for (const int id : batch[b]->features) {
      if (id >= 0 && static_cast<std::size_t>(id) < width) known[b].push_back(id);
    }
    known_ptrs.push_back(&known[b]);
  }
  const NumArray<T>* head_mask = masks.get(DropoutSite::kFeatureOutput);
  Var<T> head_in = head_mask ? mask_mul(encoded.final.h, *head_mask) : encoded.final.h;
  Var<T> logits = dense(head_in, model.direction(Direction::kBackward).features, Activation::kIdentity);
  out.features = sigmoid_binary_cross_entropy(logits, multi_hot<T>(known_ptrs, width));
  out.total = add(out.lemma, out.features);
  return out;
}

template <typename T>
std::vector<double> feature_probabilities(const InflectionModel<T>& model,
                                          const std::vector<int>& form) {
  Tape<T> tape(false);
  const std::vector<const std::vector<int>*> rows{&form};
  const EncoderOutput<T> encoded =
      encode(tape, model, Direction::kBackward, pad_sequences(rows), DropoutMaskSet<T>{});
  Var<T> probs = dense(encoded.final.h, model.direction(Direction::kBackward).features,
                       Activation::kSigmoid);
  std::vector<double> out(probs.value().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<double>(probs.value()[i]);
  return out;
}

template <typename T>
std::vector<int> predict_features(const InflectionModel<T>& model, const std::vector<int>& form) {
  const std::vector<double> probs = feature_probabilities(model, form);
  std::vector<int> out;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] > 0.5) out.push_back(static_cast<int>(i));
  }
  return out;
}

template <typename T>
PreparedSource<T> prepare_source(const InflectionModel<T>& model, Direction d,
                                 const std::vector<int>& source, const std::vector<int>& features) {
  Tape<T> tape(false);
  const std::vector<const std::vector<int>*> rows{&source};
  const EncoderOutput<T> encoded = encode(tape, model, d, pad_sequences(rows), DropoutMaskSet<T>{});
  const AttentionMemory<T> memory =
      prepare_attention(encoded.states, model.direction(d).attention);
  PreparedSource<T> out;
  out.direction = d;
  for (std::size_t i = 0; i < encoded.states.size(); ++i) {
    out.states.push_back(encoded.states[i].value());
    out.keys.push_back(memory.keys[i].value());
  }
  out.final_h = encoded.final.h.value();
  out.final_c = encoded.final.c.value();
  if (d == Direction::kForward) {
    const std::vector<const std::vector<int>*> bundles{&features};
    out.features = encode_features(tape, model, bundles).value();
  }
  return out;
}

template <typename T>
std::vector<double> next_log_probs(const InflectionModel<T>& model, const PreparedSource<T>& source,
                                   const DecoderState<T>& state, int previous,
                                   DecoderState<T>* next) {
  Tape<T> tape(false);
  AttentionMemory<T> memory;
  for (std::size_t i = 0; i < source.states.size(); ++i) {
    memory.states.push_back(tape.constant(source.states[i]));
    memory.keys.push_back(tape.constant(source.keys[i]));
  }
  std::optional<Var<T>> features;
  if (source.features) features = tape.constant(*source.features);
  const LstmState<T> current{tape.constant(state.h), tape.constant(state.c)};
  Var<T> embedded = gather_rows(tape.param(model.embedding()), std::vector<int>{previous});
  Var<T> logits;
  const LstmState<T> after =
      decoder_step(model.direction(source.direction), current, embedded, memory, features,
                   DropoutMaskSet<T>{}, &logits);
  if (next != nullptr) *next = DecoderState<T>{after.h.value(), after.c.value()};
  return log_softmax_row(logits.value(), 0);
}

#define MORPHINF_INSTANTIATE_MODEL(T)                                                          \
  template class InflectionModel<T>;                                                           \
  template std::vector<MaskWidth> dropout_widths(const InflectionModel<T>&, Direction);        \
  template NumArray<T> multi_hot(std::span<const std::vector<int>* const>, std::size_t);       \
  template EncoderOutput<T> encode(Tape<T>&, const InflectionModel<T>&, Direction,             \
                                   const PaddedSequences&, const DropoutMaskSet<T>&);          \
  template Var<T> encode_features(Tape<T>&, const InflectionModel<T>&,                         \
                                  std::span<const std::vector<int>* const>);                   \
  template Var<T> forward_loss(Tape<T>&, const InflectionModel<T>&,                            \
                               std::span<const EncodedExample* const>,                         \
                               const DropoutMaskSet<T>&);                                      \
  template BackwardLoss<T> backward_loss(Tape<T>&, const InflectionModel<T>&,                  \
                                         std::span<const EncodedExample* const>,               \
                                         const DropoutMaskSet<T>&);                            \
  template std::vector<double> feature_probabilities(const InflectionModel<T>&,                \
                                                     const std::vector<int>&);                 \
  template std::vector<int> predict_features(const InflectionModel<T>&, const std::vector<int>&); \
  template PreparedSource<T> prepare_source(const InflectionModel<T>&, Direction,              \
                                            const std::vector<int>&, const std::vector<int>&); \
  template std::vector<double> next_log_probs(const InflectionModel<T>&,                       \
                                              const PreparedSource<T>&,                        \
                                              const DecoderState<T>&, int, DecoderState<T>*);

MORPHINF_INSTANTIATE_MODEL(float)
MORPHINF_INSTANTIATE_MODEL(double)

}  // namespace morphinf
