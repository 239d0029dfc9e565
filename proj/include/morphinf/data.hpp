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

// Task-1 inflection data: TSV parsing, vocabularies and batching.
//
// A task-1 line is "lemma<TAB>form<TAB>tags" in UTF-8, with tags joined by
// ';'. Text is decoded into NFC-normalized codepoints once, at parse time,
// so every later comparison and vocabulary lookup works on codepoints.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace morphinf {

struct InflectionExample {
  std::u32string lemma;
  std::u32string form;  // empty for covered (unlabelled) input
  std::vector<std::string> features;

  friend bool operator==(const InflectionExample&, const InflectionExample&) = default;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Strict three-column parse.
InflectionExample parse_task1_line(std::string_view line, std::size_t line_number = 1);
/// Accepts "lemma<TAB>tags", or three columns whose form is "_" or empty.
InflectionExample parse_covered_line(std::string_view line, std::size_t line_number = 1);
/// Inverse of parse_task1_line for NFC input.
std::string format_task1_line(const InflectionExample& example);

std::vector<InflectionExample> read_task1_file(const std::filesystem::path& path);
std::vector<InflectionExample> read_covered_file(const std::filesystem::path& path);
/// One word per line; blank lines are skipped.
std::vector<std::u32string> read_word_list(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Vocabularies

class CharVocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;
  static constexpr int kReserved = 4;

  int add(char32_t c);
  std::optional<int> find(char32_t c) const;
  /// Characters outside the vocabulary map to kUnk and bump *unknown.
  int id(char32_t c, std::size_t* unknown = nullptr) const;
  char32_t symbol(int id) const;
  std::size_t size() const { return kReserved + symbols_.size(); }
  /// Non-reserved characters in id order (id = index + kReserved).
  const std::vector<char32_t>& symbols() const { return symbols_; }

  /// Ids for `text` followed by EOS.
  std::vector<int> encode(std::u32string_view text, std::size_t* unknown = nullptr) const;
  /// Text up to the first EOS; reserved ids are dropped.
  std::u32string decode(std::span<const int> ids) const;

  friend bool operator==(const CharVocabulary& a, const CharVocabulary& b) {
    return a.symbols_ == b.symbols_;
  }

 private:
  std::vector<char32_t> symbols_;
  std::unordered_map<char32_t, int> index_;
};

/// Feature tokens in first-seen order. Tokens never seen in training map to
/// unknown_id(), one past the last real token.
class FeatureVocabulary {
 public:
  int add(const std::string& token);
  std::optional<int> find(const std::string& token) const;
  const std::string& token(int id) const;
  std::size_t size() const { return tokens_.size(); }
  int unknown_id() const { return static_cast<int>(tokens_.size()); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::vector<int> encode(std::span<const std::string> bundle, std::size_t* unknown = nullptr) const;

  friend bool operator==(const FeatureVocabulary& a, const FeatureVocabulary& b) {
    return a.tokens_ == b.tokens_;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

struct Vocabularies {
  CharVocabulary chars;
  FeatureVocabulary features;
};

/// Characters from lemmas and forms (one shared alphabet), feature tokens
/// from every bundle, both in first-seen order.
Vocabularies build_vocabs(std::span<const InflectionExample> examples);

// ---------------------------------------------------------------------------
// Encoded examples and batches

struct EncodedExample {
  std::vector<int> lemma;     // ends with EOS
  std::vector<int> form;      // ends with EOS; just EOS when unknown
  std::vector<int> features;  // feature ids, possibly unknown_id()
};

struct EncodeStats {
  std::size_t unknown_chars = 0;
  std::size_t unknown_features = 0;
};

EncodedExample encode_example(const InflectionExample& example, const Vocabularies& vocabs,
                              EncodeStats* stats = nullptr);
std::vector<EncodedExample> encode_examples(std::span<const InflectionExample> examples,
                                            const Vocabularies& vocabs,
                                            EncodeStats* stats = nullptr);

/// Shuffles 0..count-1 with `seed` and cuts consecutive batches; the last
/// batch holds the remainder.
std::vector<std::vector<std::size_t>> make_batches(std::size_t count, std::size_t batch_size,
                                                   std::uint64_t seed);

/// Row-major (batch x length) id matrix padded with PAD.
struct PaddedSequences {
  std::size_t batch = 0;
  std::size_t length = 0;
  std::vector<int> ids;
  std::vector<std::size_t> lengths;

  int at(std::size_t row, std::size_t step) const { return ids[row * length + step]; }
  bool valid(std::size_t row, std::size_t step) const { return step < lengths[row]; }
};

PaddedSequences pad_sequences(std::span<const std::vector<int>* const> sequences);

}  // namespace morphinf
