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

// Shared-task metrics: exact-match accuracy and mean Levenshtein distance
// over codepoints, per language and macro-averaged.

#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace morphinf {

std::size_t levenshtein(std::u32string_view a, std::u32string_view b);

/// Maps macron vowels (precomposed, either case) to the plain vowel and drops
/// a combining macron that follows a vowel.
std::u32string strip_vowel_length(std::u32string_view s);

struct LanguageScore {
  std::string language;
  std::size_t items = 0;
  double accuracy = 0;       // percent
  double mean_distance = 0;
};

struct EvalReport {
  std::vector<LanguageScore> languages;

  double macro_accuracy() const;
  double macro_distance() const;
};

/// Throws std::invalid_argument when the counts differ.
LanguageScore score_pairs(std::string language, std::span<const std::u32string> gold,
                          std::span<const std::u32string> predicted, bool strip_macrons = false);

/// Gold is a full task-1 file; predictions may leave the form column empty.
/// Misaligned files (count or lemma mismatch) raise std::invalid_argument.
LanguageScore score_files(const std::filesystem::path& gold, const std::filesystem::path& predicted,
                          bool strip_macrons = false);

/// "latin-dev" -> "latin".
std::string language_from_path(const std::filesystem::path& path);

void write_report_table(std::ostream& out, const EvalReport& report);
/// Columns language,accuracy,edit_distance plus a closing macro-average row.
void write_report_csv(std::ostream& out, const EvalReport& report);
/// Reads per-language rows back; the macro-average row is skipped.
EvalReport read_report_csv(std::istream& in);

struct LanguageDelta {
  std::string language;
  double accuracy_a = 0;
  double accuracy_b = 0;
  double delta = 0;  // b - a
};

struct DeltaTable {
  std::vector<LanguageDelta> rows;  // in the order of report a
  double macro_a = 0;
  double macro_b = 0;
  double macro_delta = 0;
};

/// Throws std::invalid_argument when the language sets differ.
DeltaTable compare_runs(const EvalReport& a, const EvalReport& b);

void write_delta_table(std::ostream& out, const DeltaTable& table);

/// Fixed-point text with `decimals` places.
std::string format_fixed(double value, int decimals);

}  // namespace morphinf
