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

#include "morphinf/decoding.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

namespace morphinf {

namespace {

template <typename T>
struct Hypothesis {
  std::vector<int> tokens;
  double score = 0;
  int last = CharVocabulary::kBos;
  std::vector<DecoderState<T>> states;  // one per member
};

struct Candidate {
  std::size_t parent;
  int token;
  double score;
};

bool better(double score_a, const std::vector<int>& a, double score_b, const std::vector<int>& b) {
  if (score_a != score_b) return score_a > score_b;
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

}  // namespace

std::size_t default_max_len(const std::vector<int>& source) {
  const std::size_t chars = (!source.empty() && source.back() == CharVocabulary::kEos) ? source.size() - 1 : source.size();
  return chars + 50;
}

void check_same_vocabularies(std::span<const Vocabularies* const> vocabs) {
  for (std::size_t i = 1; i < vocabs.size(); ++i) {
    if (vocabs[i]->chars.symbols() != vocabs[0]->chars.symbols()) {
      throw std::invalid_argument("ensemble member " + std::to_string(i + 1) + " has a different character vocabulary");
    }
    if (vocabs[i]->features.tokens() != vocabs[0]->features.tokens()) {
      throw std::invalid_argument("ensemble member " + std::to_string(i + 1) + " has a different feature vocabulary");
    }
  }
}

template <typename T>
DecodeResult greedy_decode(const InflectionModel<T>& model, Direction d, const std::vector<int>& source,
                           const std::vector<int>& features, std::size_t max_len) {
  if (max_len == 0) throw std::invalid_argument("greedy_decode: max_len must be >= 1");
  const PreparedSource<T> prepared = prepare_source(model, d, source, features);
  DecoderState<T> state = initial_state(prepared);
  DecodeResult out;
  int previous = CharVocabulary::kBos;
  for (std::size_t step = 0; step < max_len; ++step) {
    DecoderState<T> next;
    const std::vector<double> lp = next_log_probs(model, prepared, state, previous, &next);
    int best = -1;
    double best_score = 0;
    for (int id = 0; id < static_cast<int>(lp.size()); ++id) {
      const double score = out.log_prob + lp[static_cast<std::size_t>(id)];
      if (emittable(id) && (best < 0 || score > best_score)) {
        best = id;
        best_score = score;
      }
    }
    out.log_prob = best_score;
    if (best == CharVocabulary::kEos) {
      out.finished = true;
      return out;
    }
    out.tokens.push_back(best);
    previous = best;
    state = std::move(next);
  }
  return out;
}

template <typename T>
DecodeResult beam_decode(const EnsembleSpec<T>& ensemble, Direction d, const std::vector<int>& source,
                         const std::vector<int>& features, std::size_t width, std::size_t max_len) {
  if (width == 0) throw std::invalid_argument("beam_decode: width must be >= 1");
  if (max_len == 0) throw std::invalid_argument("beam_decode: max_len must be >= 1");
  if (ensemble.members.empty()) throw std::invalid_argument("beam_decode: empty ensemble");
  const std::size_t members = ensemble.members.size();
  const std::size_t vocab = ensemble.members[0]->config().char_vocab_size;
  for (const auto* m : ensemble.members) {
    if (m->config().char_vocab_size != vocab) throw std::invalid_argument("beam_decode: vocabulary size mismatch");
  }

  std::vector<PreparedSource<T>> prepared;
  Hypothesis<T> root;
  for (const auto* m : ensemble.members) {
    prepared.push_back(prepare_source(*m, d, source, features));
    root.states.push_back(initial_state(prepared.back()));
  }
  std::vector<Hypothesis<T>> live{std::move(root)};
  std::vector<Hypothesis<T>> pool;

  for (std::size_t step = 0; step < max_len && !live.empty(); ++step) {
    std::vector<std::vector<DecoderState<T>>> next_states(live.size(), std::vector<DecoderState<T>>(members));
    std::vector<Candidate> candidates;
    for (std::size_t h = 0; h < live.size(); ++h) {
      std::vector<double> mean(vocab, 0.0);
      for (std::size_t m = 0; m < members; ++m) {
        const std::vector<double> lp =
            next_log_probs(*ensemble.members[m], prepared[m], live[h].states[m], live[h].last, &next_states[h][m]);
        for (std::size_t k = 0; k < vocab; ++k) mean[k] += lp[k];
      }
      for (std::size_t k = 0; k < vocab; ++k) {
        if (emittable(static_cast<int>(k))) {
          candidates.push_back({h, static_cast<int>(k), live[h].score + mean[k] / static_cast<double>(members)});
        }
      }
    }
    auto sequence = [&](const Candidate& c) {
      std::vector<int> s = live[c.parent].tokens;
      s.push_back(c.token);
      return s;
    };
    std::sort(candidates.begin(), candidates.end(), [&](const Candidate& a, const Candidate& b) {
      if (a.score != b.score) return a.score > b.score;
      return better(a.score, sequence(a), b.score, sequence(b));
    });
    if (candidates.size() > width) candidates.resize(width);

    std::vector<Hypothesis<T>> next_live;
    for (const Candidate& c : candidates) {
      Hypothesis<T> hyp;
      hyp.tokens = live[c.parent].tokens;
      hyp.score = c.score;
      if (c.token == CharVocabulary::kEos) {
        pool.push_back(std::move(hyp));
        continue;
      }
      hyp.tokens.push_back(c.token);
      hyp.last = c.token;
      hyp.states = next_states[c.parent];
      next_live.push_back(std::move(hyp));
    }
    live = std::move(next_live);

    // Extensions only lower a score, so a finished hypothesis that beats
    // every live one is final.
    if (!pool.empty() && !live.empty()) {
      double best_finished = pool[0].score;
      for (const auto& p : pool) best_finished = std::max(best_finished, p.score);
      double best_live = live[0].score;
      for (const auto& l : live) best_live = std::max(best_live, l.score);
      if (best_finished > best_live) break;
    }
  }

  const std::vector<Hypothesis<T>>& source_set = pool.empty() ? live : pool;
  const Hypothesis<T>* best = &source_set.front();
  for (const auto& h : source_set) {
    if (better(h.score, h.tokens, best->score, best->tokens)) best = &h;
  }
  return {best->tokens, best->score, !pool.empty()};
}

template <typename T>
std::vector<Prediction> predict_examples(const EnsembleSpec<T>& ensemble, const Vocabularies& vocabs,
                                         std::span<const InflectionExample> examples, std::size_t width) {
  std::vector<Prediction> out;
  out.reserve(examples.size());
  for (const InflectionExample& ex : examples) {
    const std::vector<int> lemma = vocabs.chars.encode(ex.lemma);
    const std::vector<int> features = vocabs.features.encode(ex.features);
    Prediction p;
    p.result = beam_decode(ensemble, Direction::kForward, lemma, features, width, default_max_len(lemma));
    p.form = vocabs.chars.decode(p.result.tokens);
    out.push_back(std::move(p));
  }
  return out;
}

template <typename T>
std::vector<Prediction> predict_file(const EnsembleSpec<T>& ensemble, const Vocabularies& vocabs,
                                     const std::filesystem::path& input, const std::filesystem::path& output,
                                     std::size_t width) {
  std::vector<InflectionExample> rows = read_covered_file(input);
  std::vector<Prediction> predictions = predict_examples(ensemble, vocabs, rows, width);
  std::ofstream out(output, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + output.string());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].form = predictions[i].form;
    out << format_task1_line(rows[i]) << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + output.string());
  return predictions;
}

#define MORPHINF_INSTANTIATE_DECODING(T)                                                                     \
  template DecodeResult greedy_decode(const InflectionModel<T>&, Direction, const std::vector<int>&,         \
                                      const std::vector<int>&, std::size_t);                                 \
  template DecodeResult beam_decode(const EnsembleSpec<T>&, Direction, const std::vector<int>&,              \
                                    const std::vector<int>&, std::size_t, std::size_t);                      \
  template std::vector<Prediction> predict_examples(const EnsembleSpec<T>&, const Vocabularies&,             \
                                                    std::span<const InflectionExample>, std::size_t);        \
  template std::vector<Prediction> predict_file(const EnsembleSpec<T>&, const Vocabularies&,                 \
                                                const std::filesystem::path&, const std::filesystem::path&, \
                                                std::size_t);

MORPHINF_INSTANTIATE_DECODING(float)
MORPHINF_INSTANTIATE_DECODING(double)

}  // namespace morphinf
