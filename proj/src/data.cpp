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

#include "morphinf/data.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>

#include "morphinf/unicode.hpp"

namespace morphinf {

namespace {

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(text.substr(start));
      return out;
    }
    out.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view chomp(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

std::u32string decode_field(std::string_view field, std::size_t line_number, const char* name) {
  if (field.empty()) throw ParseError(line_number, std::string("empty ") + name + " field");
  try {
    return nfc_codepoints(field);
  } catch (const std::invalid_argument& e) {
    throw ParseError(line_number, std::string(name) + ": " + e.what());
  }
}

std::vector<std::string> split_tags(std::string_view field, std::size_t line_number) {
  if (field.empty()) throw ParseError(line_number, "empty tags field");
  std::vector<std::string> out;
  for (const std::string_view token : split(field, ';')) {
    if (token.empty()) throw ParseError(line_number, "empty feature token in '" + std::string(field) + "'");
    out.emplace_back(token);
  }
  return out;
}

template <typename Parse>
auto read_lines(const std::filesystem::path& path, Parse parse) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<decltype(parse(std::string_view{}, std::size_t{0}))> out;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (chomp(line).empty()) continue;
    out.push_back(parse(line, line_number));
  }
  return out;
}

}  // namespace

InflectionExample parse_task1_line(std::string_view line, std::size_t line_number) {
  const auto fields = split(chomp(line), '\t');
  if (fields.size() != 3) {
    throw ParseError(line_number, "expected 3 tab-separated fields, found " + std::to_string(fields.size()));
  }
  InflectionExample ex;
  ex.lemma = decode_field(fields[0], line_number, "lemma");
  ex.form = decode_field(fields[1], line_number, "form");
  ex.features = split_tags(fields[2], line_number);
  return ex;
}

InflectionExample parse_covered_line(std::string_view line, std::size_t line_number) {
  const auto fields = split(chomp(line), '\t');
  if (fields.size() != 2 && fields.size() != 3) {
    throw ParseError(line_number, "expected 2 or 3 tab-separated fields, found " + std::to_string(fields.size()));
  }
  InflectionExample ex;
  ex.lemma = decode_field(fields[0], line_number, "lemma");
  ex.features = split_tags(fields.back(), line_number);
  if (fields.size() == 3 && !fields[1].empty() && fields[1] != "_") {
    ex.form = decode_field(fields[1], line_number, "form");
  }
  return ex;
}

std::string format_task1_line(const InflectionExample& example) {
  std::string out = to_utf8(example.lemma);
  out += '\t';
  out += to_utf8(example.form);
  out += '\t';
  for (std::size_t i = 0; i < example.features.size(); ++i) {
    if (i > 0) out += ';';
    out += example.features[i];
  }
  return out;
}

std::vector<InflectionExample> read_task1_file(const std::filesystem::path& path) {
  return read_lines(path, [](std::string_view l, std::size_t n) { return parse_task1_line(l, n); });
}

std::vector<InflectionExample> read_covered_file(const std::filesystem::path& path) {
  return read_lines(path, [](std::string_view l, std::size_t n) { return parse_covered_line(l, n); });
}

std::vector<std::u32string> read_word_list(const std::filesystem::path& path) {
  return read_lines(path, [](std::string_view l, std::size_t n) {
    return decode_field(chomp(l), n, "word");
  });
}

// ---------------------------------------------------------------------------

int CharVocabulary::add(char32_t c) {
  if (auto existing = find(c)) return *existing;
  const int id = static_cast<int>(size());
  symbols_.push_back(c);
  index_.emplace(c, id);
  return id;
}

std::optional<int> CharVocabulary::find(char32_t c) const {
  auto it = index_.find(c);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

int CharVocabulary::id(char32_t c, std::size_t* unknown) const {
  if (auto found = find(c)) return *found;
  if (unknown != nullptr) ++*unknown;
  return kUnk;
}

char32_t CharVocabulary::symbol(int id) const {
  if (id < kReserved || static_cast<std::size_t>(id) >= size()) {
    throw std::out_of_range("CharVocabulary: id " + std::to_string(id) + " is not a character");
  }
  return symbols_[static_cast<std::size_t>(id - kReserved)];
}

std::vector<int> CharVocabulary::encode(std::u32string_view text, std::size_t* unknown) const {
  std::vector<int> out;
  out.reserve(text.size() + 1);
  for (const char32_t c : text) out.push_back(id(c, unknown));
  out.push_back(kEos);
  return out;
}

std::u32string CharVocabulary::decode(std::span<const int> ids) const {
  std::u32string out;
  for (const int id : ids) {
    if (id == kEos) break;
    if (id >= kReserved && static_cast<std::size_t>(id) < size()) out.push_back(symbol(id));
  }
  return out;
}

int FeatureVocabulary::add(const std::string& token) {
  if (auto existing = find(token)) return *existing;
  const int id = static_cast<int>(tokens_.size());
  tokens_.push_back(token);
  index_.emplace(token, id);
  return id;
}

std::optional<int> FeatureVocabulary::find(const std::string& token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const std::string& FeatureVocabulary::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw std::out_of_range("FeatureVocabulary: id " + std::to_string(id));
  }
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<int> FeatureVocabulary::encode(std::span<const std::string> bundle,
                                           std::size_t* unknown) const {
  std::vector<int> out;
  for (const std::string& token : bundle) {
    if (auto id = find(token)) {
      out.push_back(*id);
    } else {
      if (unknown != nullptr) ++*unknown;
      out.push_back(unknown_id());
    }
  }
  return out;
}

Vocabularies build_vocabs(std::span<const InflectionExample> examples) {
  if (examples.empty()) throw std::invalid_argument("build_vocabs: no examples");
  Vocabularies v;
  for (const InflectionExample& ex : examples) {
    for (const char32_t c : ex.lemma) v.chars.add(c);
    for (const char32_t c : ex.form) v.chars.add(c);
    for (const std::string& f : ex.features) v.features.add(f);
  }
  return v;
}

EncodedExample encode_example(const InflectionExample& example, const Vocabularies& vocabs,
                              EncodeStats* stats) {
  std::size_t unknown_chars = 0, unknown_features = 0;
  EncodedExample out;
  out.lemma = vocabs.chars.encode(example.lemma, &unknown_chars);
  out.form = vocabs.chars.encode(example.form, &unknown_chars);
  out.features = vocabs.features.encode(example.features, &unknown_features);
  if (stats != nullptr) {
    stats->unknown_chars += unknown_chars;
    stats->unknown_features += unknown_features;
  }
  return out;
}

std::vector<EncodedExample> encode_examples(std::span<const InflectionExample> examples,
                                            const Vocabularies& vocabs, EncodeStats* stats) {
  std::vector<EncodedExample> out;
  out.reserve(examples.size());
  for (const InflectionExample& ex : examples) out.push_back(encode_example(ex, vocabs, stats));
  return out;
}

std::vector<std::vector<std::size_t>> make_batches(std::size_t count, std::size_t batch_size,
                                                   std::uint64_t seed) {
  if (batch_size == 0) throw std::invalid_argument("make_batches: batch size must be >= 1");
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < count; start += batch_size) {
    const std::size_t end = std::min(count, start + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

PaddedSequences pad_sequences(std::span<const std::vector<int>* const> sequences) {
  if (sequences.empty()) throw std::invalid_argument("pad_sequences: empty batch");
  PaddedSequences out;
  out.batch = sequences.size();
  for (const auto* s : sequences) {
    if (s->empty()) throw std::invalid_argument("pad_sequences: empty sequence");
    out.lengths.push_back(s->size());
    out.length = std::max(out.length, s->size());
  }
  out.ids.assign(out.batch * out.length, CharVocabulary::kPad);
  for (std::size_t b = 0; b < out.batch; ++b) {
    std::copy(sequences[b]->begin(), sequences[b]->end(),
              out.ids.begin() + static_cast<std::ptrdiff_t>(b * out.length));
  }
  return out;
}

}  // namespace morphinf
