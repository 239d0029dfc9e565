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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <functional>
#include <random>
#include <sstream>

#include "morphinf/evaluation.hpp"
#include "support.hpp"

using namespace morphinf;

namespace {

// Plain recursive definition, exponential; for short strings only.
std::size_t recursive_distance(std::u32string_view a, std::u32string_view b) {
  if (a.empty()) return b.size();
  if (b.empty()) return a.size();
  const std::size_t sub = recursive_distance(a.substr(1), b.substr(1)) + (a[0] == b[0] ? 0 : 1);
  return std::min({sub, recursive_distance(a.substr(1), b) + 1, recursive_distance(a, b.substr(1)) + 1});
}

std::u32string random_string(std::mt19937_64& rng, std::size_t max_len, const std::u32string& alphabet) {
  std::u32string s(rng() % (max_len + 1), U'a');
  for (char32_t& c : s) c = alphabet[rng() % alphabet.size()];
  return s;
}

}  // namespace

TEST_CASE("levenshtein examples") {
  CHECK(levenshtein(U"", U"abc") == 3);
  CHECK(levenshtein(U"abc", U"") == 3);
  CHECK(levenshtein(U"kitten", U"sitting") == 3);
  CHECK(levenshtein(U"ab", U"ba") == 2);
  CHECK(levenshtein(U"amō", U"amo") == 1);
  for (const auto* s : {U"", U"a", U"torments"}) CHECK(levenshtein(s, s) == 0);
}

TEST_CASE("levenshtein agrees with the recursive definition on short strings") {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 3000; ++i) {
    const auto a = random_string(rng, 7, U"abc");
    const auto b = random_string(rng, 7, U"abc");
    REQUIRE(levenshtein(a, b) == recursive_distance(a, b));
  }
  CHECK(levenshtein(U"kitten", U"sitting") == recursive_distance(U"kitten", U"sitting"));
}

TEST_CASE("levenshtein is a metric with the expected bounds") {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 2000; ++i) {
    const auto a = random_string(rng, 8, U"abcd");
    const auto b = random_string(rng, 8, U"abcd");
    const auto c = random_string(rng, 8, U"abcd");
    CHECK(levenshtein(a, b) == levenshtein(b, a));
    CHECK((levenshtein(a, b) == 0) == (a == b));
    CHECK(levenshtein(a, c) <= levenshtein(a, b) + levenshtein(b, c));
    CHECK(levenshtein(a, b) <= std::max(a.size(), b.size()));
    const auto d = random_string(rng, 8, U"xyz");
    CHECK(levenshtein(a, d) == std::max(a.size(), d.size()));
  }
}

TEST_CASE("vowel length stripping") {
  CHECK(strip_vowel_length(U"amō") == U"amo");
  CHECK(strip_vowel_length(U"ĀĒĪŌŪȲāēīōūȳ") == U"AEIOUYaeiouy");
  CHECK(strip_vowel_length(U"amo\u0304") == U"amo");
  CHECK(strip_vowel_length(U"\u0304a") == U"\u0304a");
  CHECK(strip_vowel_length(U"m\u0304") == U"m\u0304");
  CHECK(strip_vowel_length(U"torment") == U"torment");
  for (const auto* s : {U"amō", U"rosa\u0304\u0304", U"ȳō"}) {
    const auto once = strip_vowel_length(s);
    CHECK(strip_vowel_length(once) == once);
  }
}

TEST_CASE("scores: accuracy and mean distance") {
  const std::vector<std::u32string> gold{U"abc", U"ab", U"x"};
  const std::vector<std::u32string> pred{U"abc", U"ba", U"y"};
  const auto s = score_pairs("toy", gold, pred);
  CHECK(s.items == 3);
  CHECK(s.accuracy == doctest::Approx(100.0 / 3.0));
  CHECK(s.mean_distance == doctest::Approx(1.0));
  CHECK(format_fixed(s.accuracy, 1) == "33.3");
  CHECK(format_fixed(s.mean_distance, 2) == "1.00");

  const auto perfect = score_pairs("basque", gold, gold);
  CHECK(perfect.accuracy == 100.0);
  CHECK(perfect.mean_distance == 0.0);
  const std::vector<std::u32string> g1{U"ab"}, p1{U"ba"};
  CHECK(score_pairs("x", g1, p1).accuracy == 0.0);
  CHECK(score_pairs("x", g1, p1).mean_distance == 2.0);
  CHECK_THROWS_AS(score_pairs("x", gold, p1), std::invalid_argument);
}

TEST_CASE("scores are invariant under consistent reordering") {
  std::vector<std::u32string> gold{U"abc", U"ab", U"x", U"amō"};
  std::vector<std::u32string> pred{U"abd", U"ab", U"yy", U"amo"};
  const auto base = score_pairs("x", gold, pred);
  std::vector<std::size_t> order{3, 1, 0, 2};
  std::vector<std::u32string> g2, p2;
  for (std::size_t i : order) {
    g2.push_back(gold[i]);
    p2.push_back(pred[i]);
  }
  const auto shuffled = score_pairs("x", g2, p2);
  CHECK(shuffled.accuracy == base.accuracy);
  CHECK(shuffled.mean_distance == base.mean_distance);
}

TEST_CASE("macron-only errors disappear when stripping") {
  const std::vector<std::u32string> gold{U"amō", U"amās", U"amat"};
  const std::vector<std::u32string> pred{U"amo", U"amas", U"amat"};
  const auto plain = score_pairs("latin", gold, pred, false);
  const auto stripped = score_pairs("latin", gold, pred, true);
  CHECK(stripped.accuracy == 100.0);
  CHECK(stripped.accuracy > plain.accuracy);
}

TEST_CASE("reports: macro averages, table, CSV round trip") {
  EvalReport r;
  r.languages = {{"basque", 10, 90.0, 0.25}, {"quechua", 10, 100.0, 0.0}};
  CHECK(r.macro_accuracy() == 95.0);
  CHECK(r.macro_distance() == 0.125);

  std::ostringstream table;
  write_report_table(table, r);
  CHECK(table.str().find("basque") != std::string::npos);
  CHECK(table.str().find("95.0") != std::string::npos);

  std::stringstream csv;
  write_report_csv(csv, r);
  CHECK(csv.str().rfind("language,accuracy,edit_distance\n", 0) == 0);
  const EvalReport back = read_report_csv(csv);
  REQUIRE(back.languages.size() == 2);
  CHECK(back.languages[0].language == "basque");
  CHECK(back.languages[0].accuracy == 90.0);
  CHECK(back.languages[0].mean_distance == 0.25);
  CHECK(back.macro_accuracy() == r.macro_accuracy());

  std::istringstream bad("nope\n");
  CHECK_THROWS(read_report_csv(bad));
}

TEST_CASE("run comparison") {
  EvalReport full, semi;
  full.languages = {{"a", 1, 93.9, 0}};
  semi.languages = {{"a", 1, 93.8, 0}};
  const auto one = compare_runs(full, semi);
  REQUIRE(one.rows.size() == 1);
  CHECK(one.macro_delta == doctest::Approx(-0.1).epsilon(1e-9));

  const auto same = compare_runs(full, full);
  CHECK(same.macro_delta == 0.0);
  CHECK(same.rows[0].delta == 0.0);

  EvalReport two;
  two.languages = {{"a", 1, 90, 0}, {"b", 1, 100, 0}};
  EvalReport two_b;
  two_b.languages = {{"b", 1, 99, 0}, {"a", 1, 91, 0}};
  const auto t = compare_runs(two, two_b);
  CHECK(t.rows[0].delta == doctest::Approx(1.0));
  CHECK(t.rows[1].delta == doctest::Approx(-1.0));
  CHECK(t.macro_delta == doctest::Approx(0.0));
  CHECK_THROWS_AS(compare_runs(full, two), std::invalid_argument);

  std::ostringstream out;
  write_delta_table(out, one);
  CHECK(out.str().find("-0.1") != std::string::npos);
}

TEST_CASE("file scoring aligns gold and predictions") {
  testing::TempDir dir;
  testing::write_text(dir / "latin-dev", "amo\tamō\tV;1;SG\namo\tamās\tV;2;SG\n");
  testing::write_text(dir / "pred.tsv", "amo\tamo\tV;1;SG\namo\tamās\tV;2;SG\n");
  const auto s = score_files(dir / "latin-dev", dir / "pred.tsv");
  CHECK(s.language == "latin");
  CHECK(s.accuracy == 50.0);
  CHECK(score_files(dir / "latin-dev", dir / "pred.tsv", true).accuracy == 100.0);
  testing::write_text(dir / "short.tsv", "amo\tamo\tV;1;SG\n");
  CHECK_THROWS_AS(score_files(dir / "latin-dev", dir / "short.tsv"), std::invalid_argument);
  testing::write_text(dir / "other.tsv", "amo\tamo\tV;1;SG\nsum\tes\tV;2;SG\n");
  CHECK_THROWS_AS(score_files(dir / "latin-dev", dir / "other.tsv"), std::invalid_argument);
  CHECK(language_from_path("data/turkish-train-high") == "turkish");
}
