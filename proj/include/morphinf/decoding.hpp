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

// Greedy and beam-search decoding, with ensembling by averaging member
// log-probabilities at every step.
//
// Only EOS and real characters are emitted. Scores are summed
// log-probabilities without length normalization. Ties between equal
// scores go to the lexicographically smaller token sequence (so greedy picks
// the lowest id).

#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "morphinf/data.hpp"
#include "morphinf/model.hpp"

namespace morphinf {

struct DecodeResult {
  std::vector<int> tokens;  // emitted characters, EOS excluded
  double log_prob = 0;      // includes the EOS step when finished
  bool finished = false;    // false: stopped at max_len without EOS
};

/// Input length + 50, counting the trailing EOS of `source` out.
std::size_t default_max_len(const std::vector<int>& source);

/// True for ids a decoder may emit: EOS and character ids.
inline bool emittable(int id) { return id == CharVocabulary::kEos || id >= CharVocabulary::kReserved; }

template <typename T>
struct EnsembleSpec {
  std::vector<const InflectionModel<T>*> members;
};

/// Throws std::invalid_argument unless every vocabulary equals the first
/// index for index.
void check_same_vocabularies(std::span<const Vocabularies* const> vocabs);

template <typename T>
DecodeResult greedy_decode(const InflectionModel<T>& model, Direction d, const std::vector<int>& source,
                           const std::vector<int>& features, std::size_t max_len);

template <typename T>
DecodeResult beam_decode(const EnsembleSpec<T>& ensemble, Direction d, const std::vector<int>& source,
                         const std::vector<int>& features, std::size_t width, std::size_t max_len);

struct Prediction {
  std::u32string form;
  DecodeResult result;
};

/// Forward decoding of each example's (lemma, features).
template <typename T>
std::vector<Prediction> predict_examples(const EnsembleSpec<T>& ensemble, const Vocabularies& vocabs,
                                         std::span<const InflectionExample> examples, std::size_t width);

/// Reads a covered task-1 file, decodes every line and writes the same rows
/// with the form column filled. Returns the predictions in input order.
template <typename T>
std::vector<Prediction> predict_file(const EnsembleSpec<T>& ensemble, const Vocabularies& vocabs,
                                     const std::filesystem::path& input, const std::filesystem::path& output,
                                     std::size_t width);

}  // namespace morphinf
