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

// Joint supervised training of both directions, round-trip training on
// unlabeled forms, and best-checkpoint retention by dev mean Levenshtein
// distance.

#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "morphinf/adam.hpp"
#include "morphinf/data.hpp"
#include "morphinf/evaluation.hpp"
#include "morphinf/model.hpp"

namespace morphinf {

enum class TrainMode { kFull, kSemi };

struct TrainConfig {
  std::size_t batch_size = 64;
  double keep_prob = 0.5;
  std::size_t hidden_size = 128;
  AdamConfig adam;
  std::size_t max_updates = 20000;  // 0: no update budget
  double max_hours = 0;             // 0: no wall-clock budget
  std::size_t eval_interval = 500;
  std::uint64_t seed = 1;
  TrainMode mode = TrainMode::kFull;
  std::size_t semi_ratio = 1;  // unlabeled batches after each supervised batch
  double clip_norm = 5.0;      // <= 0 disables clipping

  /// Throws std::invalid_argument on violated invariants.
  void validate() const;
};

struct CheckpointRecord {
  std::size_t update = 0;
  double dev_distance = 0;
  double dev_accuracy = 0;
  std::filesystem::path path;  // empty when kept in memory only
};

/// Keeps the record with the lowest dev distance; ties keep the earlier one.
class CheckpointHistory {
 public:
  /// True when `record` is a strict improvement and became the best.
  bool offer(const CheckpointRecord& record);
  const std::optional<CheckpointRecord>& best() const { return best_; }
  const std::vector<CheckpointRecord>& persisted() const { return persisted_; }

 private:
  std::optional<CheckpointRecord> best_;
  std::vector<CheckpointRecord> persisted_;
};

/// Greedy forward decoding of every example, scored against its form.
template <typename T>
LanguageScore evaluate_greedy(const InflectionModel<T>& model, const Vocabularies& vocabs,
                              std::span<const InflectionExample> examples);

struct Analysis {
  std::vector<int> lemma;  // ends with EOS
  std::vector<int> features;
};

using Analyzer = std::function<Analysis(const std::vector<int>& form)>;

/// Greedy lemma and thresholded features from the backward model. An empty
/// lemma becomes the form itself; an empty bundle becomes the single most
/// probable feature.
template <typename T>
Analysis analyze_form(const InflectionModel<T>& model, const std::vector<int>& form);

/// Per-form forward losses (batch x 1) for reconstructing each form from its
/// analysis. The analysis enters as constants, so no backward-model
/// parameter is bound on the tape.
template <typename T>
Var<T> reconstruction_loss(Tape<T>& tape, const InflectionModel<T>& model,
                           std::span<const std::vector<int>* const> forms, const Analyzer& analyzer,
                           const DropoutMaskSet<T>& masks);

struct StepResult {
  double forward = 0;   // batch mean
  double backward = 0;  // batch mean; 0 for round-trip steps
  bool applied = false; // false when the update was skipped
};

struct TrainerOutput {
  std::vector<std::ostream*> log;         // one line per evaluation
  std::ostream* diagnostics = nullptr;    // skipped updates and warnings
  std::filesystem::path checkpoint_path;  // empty: keep the best in memory
};

class Trainer {
 public:
  Trainer(const TrainConfig& config, InflectionModel<float>& model, Vocabularies vocabs,
          std::vector<EncodedExample> train, std::vector<InflectionExample> dev,
          std::vector<std::vector<int>> unlabeled = {}, TrainerOutput output = {});

  /// L_fwd + L_bwd on one tape, then one optimizer step.
  StepResult joint_step(std::span<const EncodedExample* const> batch);
  /// Round-trip loss on unlabeled forms, then one optimizer step touching the
  /// forward direction and the embedding only.
  StepResult semi_step(std::span<const std::vector<int>* const> forms, const Analyzer& analyzer);
  StepResult semi_step(std::span<const std::vector<int>* const> forms);

  CheckpointRecord evaluate_and_checkpoint();
  /// Runs until the budget is spent and returns the best record.
  CheckpointRecord train();
  /// Copies the best evaluated parameters back into the model.
  void restore_best();

  std::size_t updates() const { return updates_; }
  const std::vector<double>& loss_history() const { return losses_; }
  const CheckpointHistory& history() const { return history_; }
  const Adam<float>& optimizer() const { return adam_; }

 private:
  DropoutMaskSet<float> masks_for(Direction d, std::size_t rows);
  bool apply(const Tape<float>& tape);
  void after_update(const StepResult& step);
  bool budget_spent() const;
  void warn(const std::string& message) const;

  TrainConfig config_;
  InflectionModel<float>& model_;
  Vocabularies vocabs_;
  std::vector<EncodedExample> train_;
  std::vector<InflectionExample> dev_;
  std::vector<std::vector<int>> unlabeled_;
  TrainerOutput output_;
  Rng rng_;
  Adam<float> adam_;
  CheckpointHistory history_;
  std::vector<NumArray<float>> best_values_;
  std::size_t updates_ = 0;
  std::size_t last_eval_ = 0;
  bool evaluated_ = false;
  double loss_sum_ = 0;
  std::size_t loss_count_ = 0;
  std::vector<double> losses_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace morphinf
