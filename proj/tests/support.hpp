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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "morphinf/data.hpp"
#include "morphinf/model.hpp"

namespace morphinf::testing {

/// Fresh directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("morphinf-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

/// Character vocabulary with `chars` letters starting at 'a' and a feature
/// vocabulary F0..F{features-1}.
inline Vocabularies toy_vocabs(std::size_t chars, std::size_t features) {
  Vocabularies v;
  for (std::size_t i = 0; i < chars; ++i) v.chars.add(static_cast<char32_t>(U'a' + i));
  for (std::size_t i = 0; i < features; ++i) v.features.add("F" + std::to_string(i));
  return v;
}

template <typename T>
InflectionModel<T> toy_model(const Vocabularies& v, std::size_t hidden, std::uint64_t seed, double range = 0.1) {
  Rng rng(seed);
  return InflectionModel<T>({hidden, v.chars.size(), v.features.size()}, Initializer{&rng, range});
}

/// Random id sequence of real characters, length in [min_len, max_len],
/// followed by EOS.
inline std::vector<int> random_sequence(const Vocabularies& v, std::size_t min_len, std::size_t max_len, Rng& rng) {
  std::uniform_int_distribution<std::size_t> length(min_len, max_len);
  std::uniform_int_distribution<int> id(CharVocabulary::kReserved, static_cast<int>(v.chars.size()) - 1);
  std::vector<int> out(length(rng));
  for (int& x : out) x = id(rng);
  out.push_back(CharVocabulary::kEos);
  return out;
}

inline std::vector<int> random_bundle(const Vocabularies& v, Rng& rng) {
  std::vector<int> out;
  for (int f = 0; f < static_cast<int>(v.features.size()); ++f) {
    if (rng() % 2 == 0) out.push_back(f);
  }
  if (out.empty()) out.push_back(0);
  return out;
}

inline EncodedExample random_example(const Vocabularies& v, Rng& rng, std::size_t max_len = 4) {
  return {random_sequence(v, 1, max_len, rng), random_sequence(v, 1, max_len, rng), random_bundle(v, rng)};
}

template <typename T>
double max_abs_diff(const NumArray<T>& a, const NumArray<T>& b) {
  double out = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    out = std::max(out, std::abs(static_cast<double>(a.values()[i]) - static_cast<double>(b.values()[i])));
  }
  return out;
}

}  // namespace morphinf::testing
