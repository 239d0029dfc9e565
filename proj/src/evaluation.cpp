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

#include "morphinf/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <stdexcept>

#include "morphinf/data.hpp"

namespace morphinf {

namespace {

constexpr const char* kMacroRow = "macro-average";

char32_t short_vowel(char32_t c) {
  switch (c) {
    case U'ā': return U'a';
    case U'Ā': return U'A';
    case U'ē': return U'e';
    case U'Ē': return U'E';
    case U'ī': return U'i';
    case U'Ī': return U'I';
    case U'ō': return U'o';
    case U'Ō': return U'O';
    case U'ū': return U'u';
    case U'Ū': return U'U';
    case U'ȳ': return U'y';
    case U'Ȳ': return U'Y';
    default: return c;
  }
}

bool is_plain_vowel(char32_t c) {
  return std::u32string_view(U"aeiouyAEIOUY").find(c) != std::u32string_view::npos;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
    if (pos == std::string::npos) return out;
    start = pos + 1;
  }
}

}  // namespace

std::size_t levenshtein(std::u32string_view a, std::u32string_view b) {
  std::vector<std::size_t> row(b.size() + 1);
  std::iota(row.begin(), row.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diagonal = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t above = row[j];
      row[j] = std::min({above + 1, row[j - 1] + 1, diagonal + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diagonal = above;
    }
  }
  return row[b.size()];
}

std::u32string strip_vowel_length(std::u32string_view s) {
  std::u32string out;
  out.reserve(s.size());
  for (const char32_t c : s) {
    if (c == U'̄' && !out.empty() && is_plain_vowel(out.back())) continue;
    out.push_back(short_vowel(c));
  }
  return out;
}

double EvalReport::macro_accuracy() const {
  if (languages.empty()) return 0;
  double total = 0;
  for (const LanguageScore& l : languages) total += l.accuracy;
  return total / static_cast<double>(languages.size());
}

double EvalReport::macro_distance() const {
  if (languages.empty()) return 0;
  double total = 0;
  for (const LanguageScore& l : languages) total += l.mean_distance;
  return total / static_cast<double>(languages.size());
}

LanguageScore score_pairs(std::string language, std::span<const std::u32string> gold,
                          std::span<const std::u32string> predicted, bool strip_macrons) {
  if (gold.size() != predicted.size()) {
    throw std::invalid_argument("gold has " + std::to_string(gold.size()) + " items, predictions " +
                                std::to_string(predicted.size()));
  }
  LanguageScore score;
  score.language = std::move(language);
  score.items = gold.size();
  if (gold.empty()) return score;
  std::size_t exact = 0, distance = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const std::u32string g = strip_macrons ? strip_vowel_length(gold[i]) : gold[i];
    const std::u32string p = strip_macrons ? strip_vowel_length(predicted[i]) : predicted[i];
    if (g == p) ++exact;
    distance += levenshtein(g, p);
  }
  const double n = static_cast<double>(gold.size());
  score.accuracy = 100.0 * static_cast<double>(exact) / n;
  score.mean_distance = static_cast<double>(distance) / n;
  return score;
}

LanguageScore score_files(const std::filesystem::path& gold, const std::filesystem::path& predicted,
                          bool strip_macrons) {
  const auto gold_rows = read_task1_file(gold);
  const auto pred_rows = read_covered_file(predicted);
  if (gold_rows.size() != pred_rows.size()) {
    throw std::invalid_argument(gold.string() + " has " + std::to_string(gold_rows.size()) + " lines but " +
                                predicted.string() + " has " + std::to_string(pred_rows.size()));
  }
  std::vector<std::u32string> g, p;
  for (std::size_t i = 0; i < gold_rows.size(); ++i) {
    if (gold_rows[i].lemma != pred_rows[i].lemma) {
      throw std::invalid_argument("lemma mismatch at item " + std::to_string(i + 1));
    }
    g.push_back(gold_rows[i].form);
    p.push_back(pred_rows[i].form);
  }
  return score_pairs(language_from_path(gold), g, p, strip_macrons);
}

std::string language_from_path(const std::filesystem::path& path) {
  const std::string name = path.filename().string();
  return name.substr(0, name.find('-'));
}

std::string format_fixed(double value, int decimals) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.*f", decimals, value);
  return buffer;
}

void write_report_table(std::ostream& out, const EvalReport& report) {
  std::size_t width = std::string(kMacroRow).size();
  for (const LanguageScore& l : report.languages) width = std::max(width, l.language.size());
  auto row = [&](const std::string& name, const std::string& acc, const std::string& dist) {
    out << name << std::string(width - name.size() + 2, ' ') << std::string(8 - std::min<std::size_t>(8, acc.size()), ' ')
        << acc << std::string(10 - std::min<std::size_t>(10, dist.size()), ' ') << dist << '\n';
  };
  row("language", "accuracy", "distance");
  for (const LanguageScore& l : report.languages) {
    row(l.language, format_fixed(l.accuracy, 1), format_fixed(l.mean_distance, 2));
  }
  if (report.languages.size() > 1) {
    row(kMacroRow, format_fixed(report.macro_accuracy(), 1), format_fixed(report.macro_distance(), 2));
  }
}

void write_report_csv(std::ostream& out, const EvalReport& report) {
  out << "language,accuracy,edit_distance\n";
  for (const LanguageScore& l : report.languages) {
    out << l.language << ',' << format_fixed(l.accuracy, 1) << ',' << format_fixed(l.mean_distance, 2) << '\n';
  }
  out << kMacroRow << ',' << format_fixed(report.macro_accuracy(), 1) << ','
      << format_fixed(report.macro_distance(), 2) << '\n';
}

EvalReport read_report_csv(std::istream& in) {
  EvalReport report;
  std::string line;
  if (!std::getline(in, line) || line.rfind("language,accuracy,edit_distance", 0) != 0) {
    throw std::invalid_argument("report CSV: missing header");
  }
  std::size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != 3) throw ParseError(line_number, "expected 3 CSV fields");
    if (fields[0] == kMacroRow) continue;
    LanguageScore s;
    s.language = fields[0];
    try {
      s.accuracy = std::stod(fields[1]);
      s.mean_distance = std::stod(fields[2]);
    } catch (const std::exception&) {
      throw ParseError(line_number, "non-numeric score");
    }
    report.languages.push_back(s);
  }
  return report;
}

DeltaTable compare_runs(const EvalReport& a, const EvalReport& b) {
  std::map<std::string, double> b_accuracy;
  for (const LanguageScore& l : b.languages) b_accuracy[l.language] = l.accuracy;
  std::set<std::string> a_names;
  for (const LanguageScore& l : a.languages) a_names.insert(l.language);
  std::set<std::string> b_names;
  for (const auto& [name, acc] : b_accuracy) b_names.insert(name);
  if (a_names != b_names || a_names.size() != a.languages.size() || b_names.size() != b.languages.size()) {
    throw std::invalid_argument("compare: reports cover different language sets");
  }
  DeltaTable table;
  for (const LanguageScore& l : a.languages) {
    const double other = b_accuracy.at(l.language);
    table.rows.push_back({l.language, l.accuracy, other, other - l.accuracy});
  }
  table.macro_a = a.macro_accuracy();
  table.macro_b = b.macro_accuracy();
  table.macro_delta = table.macro_b - table.macro_a;
  return table;
}

void write_delta_table(std::ostream& out, const DeltaTable& table) {
  std::size_t width = std::string(kMacroRow).size();
  for (const LanguageDelta& d : table.rows) width = std::max(width, d.language.size());
  auto pad = [](const std::string& s, std::size_t w) {
    return std::string(w > s.size() ? w - s.size() : 0, ' ') + s;
  };
  auto signed_fixed = [](double v) {
    const std::string s = format_fixed(v, 1);
    return (v >= 0 && s != "-0.0") ? "+" + s : (s == "-0.0" ? std::string("+0.0") : s);
  };
  out << "language" << std::string(width - 8 + 2, ' ') << pad("a", 7) << pad("b", 8) << pad("delta", 8) << '\n';
  for (const LanguageDelta& d : table.rows) {
    out << d.language << std::string(width - d.language.size() + 2, ' ') << pad(format_fixed(d.accuracy_a, 1), 7)
        << pad(format_fixed(d.accuracy_b, 1), 8) << pad(signed_fixed(d.delta), 8) << '\n';
  }
  out << kMacroRow << std::string(width - std::string(kMacroRow).size() + 2, ' ')
      << pad(format_fixed(table.macro_a, 1), 7) << pad(format_fixed(table.macro_b, 1), 8)
      << pad(signed_fixed(table.macro_delta), 8) << '\n';
}

}  // namespace morphinf
