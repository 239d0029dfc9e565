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
#include <set>

#include "morphinf/data.hpp"
#include "morphinf/unicode.hpp"
#include "support.hpp"

using namespace morphinf;

TEST_CASE("task-1 lines parse into lemma, form and feature tokens") {
  const auto ex = parse_task1_line("torment\ttorments\tV;3;SG;PRS");
  CHECK(ex.lemma == U"torment");
  CHECK(ex.form == U"torments");
  CHECK(ex.features == std::vector<std::string>{"V", "3", "SG", "PRS"});
  CHECK(format_task1_line(ex) == "torment\ttorments\tV;3;SG;PRS");
  CHECK(parse_task1_line("a\tb\tN\r").features == std::vector<std::string>{"N"});
}

TEST_CASE("malformed lines name their line number") {
  CHECK_THROWS_AS(parse_task1_line("a\tb", 4), ParseError);
  CHECK_THROWS_AS(parse_task1_line("a\t\tN", 4), ParseError);
  CHECK_THROWS_AS(parse_task1_line("a\tb\tN;;V", 4), ParseError);
  CHECK_THROWS_AS(parse_task1_line("a\tb\tN\tX", 4), ParseError);
  CHECK_THROWS_AS(parse_task1_line("a\t\xff\tN", 4), ParseError);
  try {
    parse_task1_line("only-one-field", 17);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 17);
    CHECK(std::string(e.what()).rfind("line 17:", 0) == 0);
  }
}

TEST_CASE("covered lines accept a missing or placeholder form") {
  CHECK(parse_covered_line("amo\tV;1;SG").form.empty());
  CHECK(parse_covered_line("amo\t_\tV;1;SG").form.empty());
  CHECK(parse_covered_line("amo\t\tV;1;SG").form.empty());
  CHECK(parse_covered_line("amo\tamas\tV;2;SG").form == U"amas");
  CHECK_THROWS_AS(parse_covered_line("amo"), ParseError);
}

TEST_CASE("text is NFC-normalised at parse time") {
  const auto composed = parse_task1_line("am\xC5\x8D\tam\xC5\x8D\tV");       // U+014D
  const auto decomposed = parse_task1_line("amo\xCC\x84\tamo\xCC\x84\tV");  // o + U+0304
  CHECK(composed.lemma == decomposed.lemma);
  CHECK(decomposed.lemma == std::u32string{U'a', U'm', U'ō'});
  CHECK(to_utf8(decomposed.lemma) == "am\xC5\x8D");
}

TEST_CASE("files skip blank lines and report the failing line") {
  testing::TempDir dir;
  testing::write_text(dir / "ok.tsv", "a\tab\tX\n\nb\tbb\tY;Z\n");
  CHECK(read_task1_file(dir / "ok.tsv").size() == 2);
  testing::write_text(dir / "bad.tsv", "a\tab\tX\nb\tbb\n");
  try {
    read_task1_file(dir / "bad.tsv");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  testing::write_text(dir / "empty.tsv", "");
  CHECK(read_task1_file(dir / "empty.tsv").empty());
  testing::write_text(dir / "words.txt", "amo\namas\n");
  CHECK(read_word_list(dir / "words.txt") == std::vector<std::u32string>{U"amo", U"amas"});
  CHECK_THROWS(read_task1_file(dir / "missing.tsv"));
}

TEST_CASE("vocabularies reserve special ids and keep first-seen order") {
  const std::vector<InflectionExample> rows{parse_task1_line("ab\tba\tX;Y"), parse_task1_line("c\tca\tY;Z")};
  const Vocabularies v = build_vocabs(rows);
  CHECK(v.chars.size() == CharVocabulary::kReserved + 3);
  CHECK(*v.chars.find(U'a') == 4);
  CHECK(*v.chars.find(U'b') == 5);
  CHECK(*v.chars.find(U'c') == 6);
  CHECK(v.features.tokens() == std::vector<std::string>{"X", "Y", "Z"});
  CHECK(v.features.unknown_id() == 3);
  CHECK_THROWS(build_vocabs(std::vector<InflectionExample>{}));

  std::size_t unknown = 0;
  const auto ids = v.chars.encode(U"aqb", &unknown);
  CHECK(ids == std::vector<int>{4, CharVocabulary::kUnk, 5, CharVocabulary::kEos});
  CHECK(unknown == 1);
  CHECK(v.chars.decode(ids) == U"ab");
  CHECK_THROWS_AS(v.chars.symbol(CharVocabulary::kEos), std::out_of_range);

  std::size_t unknown_features = 0;
  const std::vector<std::string> bundle{"Z", "NEW"};
  CHECK(v.features.encode(bundle, &unknown_features) == std::vector<int>{2, 3});
  CHECK(unknown_features == 1);
}

TEST_CASE("batches are a seeded partition of all indices") {
  const auto a = make_batches(10, 3, 42);
  const auto b = make_batches(10, 3, 42);
  CHECK(a == b);
  CHECK(a.size() == 4);
  CHECK(a.back().size() == 1);
  std::set<std::size_t> all;
  for (const auto& batch : a) all.insert(batch.begin(), batch.end());
  CHECK(all.size() == 10);
  CHECK(make_batches(10, 3, 43) != a);
  CHECK_THROWS(make_batches(10, 0, 1));
}

TEST_CASE("padding records lengths and fills with PAD") {
  const std::vector<int> s1{4, 5, 2}, s2{6, 2};
  const std::vector<const std::vector<int>*> seqs{&s1, &s2};
  const PaddedSequences p = pad_sequences(seqs);
  CHECK(p.length == 3);
  CHECK(p.at(1, 2) == CharVocabulary::kPad);
  CHECK(p.valid(1, 1));
  CHECK_FALSE(p.valid(1, 2));
}
