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

#include "morphinf/training.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>

#include "morphinf/checkpoint.hpp"
#include "morphinf/decoding.hpp"

namespace morphinf {

void TrainConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  if (!(keep_prob > 0.0 && keep_prob <= 1.0)) throw std::invalid_argument("keep probability must lie in (0, 1]");
  if (hidden_size < 1) throw std::invalid_argument("hidden size must be >= 1");
  if (eval_interval < 1) throw std::invalid_argument("eval interval must be >= 1");
  if (max_updates == 0 && !(max_hours > 0)) throw std::invalid_argument("no training budget: set max updates or hours");
  if (max_hours < 0) throw std::invalid_argument("max hours must be >= 0");
  if (mode == TrainMode::kSemi && semi_ratio < 1) throw std::invalid_argument("semi ratio must be >= 1");
  if (!(adam.learning_rate > 0)) throw std::invalid_argument("learning rate must be positive");
}

bool CheckpointHistory::offer(const CheckpointRecord& record) {
  if (best_ && !(record.dev_distance < best_->dev_distance)) return false;
  best_ = record;
  persisted_.push_back(record);
  return true;
}

template <typename T>
LanguageScore evaluate_greedy(const InflectionModel<T>& model, const Vocabularies& vocabs,
                              std::span<const InflectionExample> examples) {
  std::vector<std::u32string> gold, predicted;
  for (const InflectionExample& ex : examples) {
    const std::vector<int> lemma = vocabs.chars.encode(ex.lemma);
    const DecodeResult r = greedy_decode(model, Direction::kForward, lemma, vocabs.features.encode(ex.features),
                                         default_max_len(lemma));
    gold.push_back(ex.form);
    predicted.push_back(vocabs.chars.decode(r.tokens));
  }
  return score_pairs("dev", gold, predicted);
}

template <typename T>
Analysis analyze_form(const InflectionModel<T>& model, const std::vector<int>& form) {
  Analysis out;
  out.lemma = greedy_decode(model, Direction::kBackward, form, {}, default_max_len(form)).tokens;
  if (out.lemma.empty()) {
    out.lemma.assign(form.begin(), form.end() - (form.back() == CharVocabulary::kEos ? 1 : 0));
  }
  out.lemma.push_back(CharVocabulary::kEos);
  out.features = predict_features(model, form);
  if (out.features.empty()) {
    const std::vector<double> p = feature_probabilities(model, form);
    out.features.push_back(static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin()));
  }
  return out;
}

template <typename T>
Var<T> reconstruction_loss(Tape<T>& tape, const InflectionModel<T>& model,
                           std::span<const std::vector<int>* const> forms, const Analyzer& analyzer,
                           const DropoutMaskSet<T>& masks) {
  if (forms.empty()) throw std::invalid_argument("reconstruction_loss: empty batch");
  std::vector<EncodedExample> pseudo;
  pseudo.reserve(forms.size());
  for (const auto* form : forms) {
    Analysis a = analyzer(*form);
    pseudo.push_back({std::move(a.lemma), *form, std::move(a.features)});
  }
  std::vector<const EncodedExample*> batch;
  for (const auto& ex : pseudo) batch.push_back(&ex);
  return forward_loss(tape, model, std::span<const EncodedExample* const>(batch), masks);
}

// ---------------------------------------------------------------------------

Trainer::Trainer(const TrainConfig& config, InflectionModel<float>& model, Vocabularies vocabs,
                 std::vector<EncodedExample> train, std::vector<InflectionExample> dev,
                 std::vector<std::vector<int>> unlabeled, TrainerOutput output)
    : config_(config),
      model_(model),
      vocabs_(std::move(vocabs)),
      train_(std::move(train)),
      dev_(std::move(dev)),
      unlabeled_(std::move(unlabeled)),
      output_(std::move(output)),
      rng_(config.seed),
      adam_(config.adam),
      start_(std::chrono::steady_clock::now()) {
  config_.validate();
  if (config_.mode == TrainMode::kSemi && unlabeled_.empty()) {
    throw std::invalid_argument("semi mode needs unlabeled forms");
  }
}

void Trainer::warn(const std::string& message) const {
  if (output_.diagnostics != nullptr) *output_.diagnostics << message << '\n';
}

DropoutMaskSet<float> Trainer::masks_for(Direction d, std::size_t rows) {
  if (config_.keep_prob >= 1.0) return {};
  const std::vector<MaskWidth> widths = dropout_widths(model_, d);
  return sample_masks<float>(widths, rows, config_.keep_prob, rng_);
}

bool Trainer::apply(const Tape<float>& tape) {
  std::vector<Gradient<float>> grads = collect_gradients(tape, model_.parameters());
  if (config_.clip_norm > 0) clip_global_norm(grads, config_.clip_norm);
  if (!adam_.update(grads)) {
    warn("update " + std::to_string(updates_ + 1) + ": non-finite gradient, update skipped");
    return false;
  }
  return true;
}

StepResult Trainer::joint_step(std::span<const EncodedExample* const> batch) {
  if (batch.empty()) throw std::invalid_argument("joint_step: empty batch");
  StepResult result;
  const DropoutMaskSet<float> fwd_masks = masks_for(Direction::kForward, batch.size());
  const DropoutMaskSet<float> bwd_masks = masks_for(Direction::kBackward, batch.size());
  try {
    Tape<float> tape;
    const Var<float> fwd = mean(forward_loss(tape, model_, batch, fwd_masks));
    const Var<float> bwd = mean(backward_loss(tape, model_, batch, bwd_masks).total);
    tape.backward(add(fwd, bwd));
    result.forward = fwd.value().values()[0];
    result.backward = bwd.value().values()[0];
    result.applied = apply(tape);
  } catch (const NumericError& e) {
    warn("update " + std::to_string(updates_ + 1) + ": " + e.what() + ", update skipped");
  }
  after_update(result);
  return result;
}

StepResult Trainer::semi_step(std::span<const std::vector<int>* const> forms, const Analyzer& analyzer) {
  if (forms.empty()) throw std::invalid_argument("semi_step: empty batch");
  StepResult result;
  const DropoutMaskSet<float> masks = masks_for(Direction::kForward, forms.size());
  try {
    Tape<float> tape;
    const Var<float> loss = mean(reconstruction_loss(tape, model_, forms, analyzer, masks));
    tape.backward(loss);
    result.forward = loss.value().values()[0];
    result.applied = apply(tape);
  } catch (const NumericError& e) {
    warn("update " + std::to_string(updates_ + 1) + ": " + e.what() + ", update skipped");
  }
  after_update(result);
  return result;
}

StepResult Trainer::semi_step(std::span<const std::vector<int>* const> forms) {
  return semi_step(forms, [this](const std::vector<int>& form) { return analyze_form(model_, form); });
}

void Trainer::after_update(const StepResult& step) {
  ++updates_;
  const double total = step.forward + step.backward;
  losses_.push_back(total);
  loss_sum_ += total;
  ++loss_count_;
}

bool Trainer::budget_spent() const {
  if (config_.max_updates > 0 && updates_ >= config_.max_updates) return true;
  if (config_.max_hours > 0) {
    const std::chrono::duration<double, std::ratio<3600>> elapsed = std::chrono::steady_clock::now() - start_;
    if (elapsed.count() >= config_.max_hours) return true;
  }
  return false;
}

CheckpointRecord Trainer::evaluate_and_checkpoint() {
  const LanguageScore score = evaluate_greedy(model_, vocabs_, dev_);
  CheckpointRecord record{updates_, score.mean_distance, score.accuracy, output_.checkpoint_path};
  if (history_.offer(record)) {
    best_values_.clear();
    for (const Parameter<float>* p : model_.parameters().all()) best_values_.push_back(p->value);
    if (!output_.checkpoint_path.empty()) {
      try {
        save_checkpoint(output_.checkpoint_path, model_, vocabs_, config_.seed);
      } catch (const std::exception& e) {
        throw std::runtime_error(std::string("training aborted: cannot persist checkpoint: ") + e.what());
      }
    }
  }
  const double train_loss = loss_count_ > 0 ? loss_sum_ / static_cast<double>(loss_count_) : 0.0;
  for (std::ostream* log : output_.log) {
    *log << updates_ << '\t' << format_fixed(train_loss, 6) << '\t' << format_fixed(score.accuracy, 2) << '\t'
         << format_fixed(score.mean_distance, 4) << std::endl;
  }
  loss_sum_ = 0;
  loss_count_ = 0;
  last_eval_ = updates_;
  evaluated_ = true;
  return record;
}

void Trainer::restore_best() {
  if (best_values_.empty()) return;
  auto params = model_.parameters().all();
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = best_values_[i];
}

CheckpointRecord Trainer::train() {
  if (train_.empty()) throw std::invalid_argument("empty training set");
  start_ = std::chrono::steady_clock::now();
  std::vector<std::vector<std::size_t>> unlabeled_batches;
  std::size_t unlabeled_cursor = 0;
  auto next_unlabeled = [&]() {
    if (unlabeled_cursor == unlabeled_batches.size()) {
      unlabeled_batches = make_batches(unlabeled_.size(), config_.batch_size, rng_());
      unlabeled_cursor = 0;
    }
    std::vector<const std::vector<int>*> forms;
    for (const std::size_t i : unlabeled_batches[unlabeled_cursor]) forms.push_back(&unlabeled_[i]);
    ++unlabeled_cursor;
    return forms;
  };
  auto maybe_evaluate = [&]() {
    if (updates_ % config_.eval_interval == 0) evaluate_and_checkpoint();
  };

  while (!budget_spent()) {
    for (const auto& indices : make_batches(train_.size(), config_.batch_size, rng_())) {
      std::vector<const EncodedExample*> batch;
      for (const std::size_t i : indices) batch.push_back(&train_[i]);
      joint_step(batch);
      maybe_evaluate();
      if (budget_spent()) break;
      if (config_.mode == TrainMode::kSemi) {
        for (std::size_t r = 0; r < config_.semi_ratio && !budget_spent(); ++r) {
          semi_step(next_unlabeled());
          maybe_evaluate();
        }
        if (budget_spent()) break;
      }
    }
  }
  if (!evaluated_ || last_eval_ != updates_) evaluate_and_checkpoint();
  return *history_.best();
}

#define MORPHINF_INSTANTIATE_TRAINING(T)                                                                  \
  template LanguageScore evaluate_greedy(const InflectionModel<T>&, const Vocabularies&,                  \
                                         std::span<const InflectionExample>);                             \
  template Analysis analyze_form(const InflectionModel<T>&, const std::vector<int>&);                     \
  template Var<T> reconstruction_loss(Tape<T>&, const InflectionModel<T>&,                                \
                                      std::span<const std::vector<int>* const>, const Analyzer&,          \
                                      const DropoutMaskSet<T>&);

MORPHINF_INSTANTIATE_TRAINING(float)
MORPHINF_INSTANTIATE_TRAINING(double)

}  // namespace morphinf
