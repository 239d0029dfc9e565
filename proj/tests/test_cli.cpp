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

#include <sys/wait.h>

#include <cstdlib>
#include <sstream>

#include "morphinf/checkpoint.hpp"
#include "morphinf/decoding.hpp"
#include "morphinf/manifest.hpp"
#include "support.hpp"
#include "synthetic.hpp"

using namespace morphinf;
namespace fs = std::filesystem;

namespace {

struct Run {
  int status = -1;
  std::string out, err;
};

Run run(const testing::TempDir& dir, const std::string& args) {
  const fs::path out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string command = std::string("'") + MORPHINF_CLI + "' " + args + " >'" + out.string() + "' 2>'" +
                              err.string() + "'";
  const int raw = std::system(command.c_str());
  Run r;
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = testing::read_text(out);
  r.err = testing::read_text(err);
  return r;
}

void write_examples(const fs::path& path, const std::vector<InflectionExample>& rows, bool cover = false) {
  std::ostringstream text;
  for (InflectionExample ex : rows) {
    if (cover) ex.form.clear();
    text << format_task1_line(ex) << '\n';
  }
  testing::write_text(path, text.str());
}

// Toy corpus shared by the tests below: train, dev, covered dev.
struct Corpus {
  testing::TempDir dir;
  Corpus() {
    const auto all = testing::synthetic_examples(80, 31);
    write_examples(dir / "toy-train", {all.begin(), all.begin() + 60});
    write_examples(dir / "toy-dev", {all.begin() + 60, all.end()});
    write_examples(dir / "toy-covered", {all.begin() + 60, all.end()}, true);
  }
  std::string path(const std::string& name) const { return "'" + (dir / name).string() + "'"; }
  std::string train_args(const std::string& out, const std::string& extra = "",
                         const std::string& budget = "--max-updates 30 --eval-interval 15") const {
    return "train --train " + path("toy-train") + " --dev " + path("toy-dev") + " --out " + path(out) +
           " --hidden 16 --batch 16 --seed 7 " + budget + " " + extra;
  }
};

Corpus& corpus() {
  static Corpus c;
  static bool trained = false;
  if (!trained) {
    trained = true;
    const Run r = run(c.dir, c.train_args("run1"));
    REQUIRE_MESSAGE(r.status == 0, r.err);
  }
  return c;
}

}  // namespace

TEST_CASE("usage errors exit with status 2") {
  testing::TempDir dir;
  CHECK(run(dir, "").status == 2);
  CHECK(run(dir, "--help").status == 0);
  CHECK(run(dir, "frobnicate").status == 2);
  Corpus& c = corpus();
  CHECK(run(dir, "train --train " + c.path("toy-train") + " --out " + c.path("x")).status == 2);
  CHECK(run(dir, "train --train " + c.path("nope") + " --dev " + c.path("toy-dev") + " --out " + c.path("x"))
            .status == 2);
  CHECK(run(dir, c.train_args("x", "--dropout 1.5")).status == 2);
  CHECK(run(dir, c.train_args("x", "--mode half")).status == 2);

  testing::write_text(dir / "broken.tsv", "a\tb\tX\nbroken line\n");
  const Run r = run(dir, "train --train '" + (dir / "broken.tsv").string() + "' --dev " + c.path("toy-dev") +
                             " --out '" + (dir / "o").string() + "'");
  CHECK(r.status == 2);
  CHECK(r.err.find("line 2") != std::string::npos);
}

TEST_CASE("training writes a checkpoint, log and manifest, reproducibly") {
  Corpus& c = corpus();
  CHECK(fs::exists(c.dir / "run1" / "model.ckpt"));
  CHECK(fs::exists(c.dir / "run1" / "train.log"));
  const RunManifest m = RunManifest::read(c.dir / "run1" / "manifest.txt");
  CHECK(m.get("seed") == "7");
  CHECK(m.get("mode") == "full");
  CHECK(m.get("input.train.sha256") == sha256_file(c.dir / "toy-train"));
  CHECK(m.get("input.dev.sha256") == sha256_file(c.dir / "toy-dev"));
  CHECK(m.has("started"));
  CHECK(m.has("finished"));

  const Run again = run(c.dir, c.train_args("run2"));
  REQUIRE(again.status == 0);
  const std::string log = testing::read_text(c.dir / "run1" / "train.log");
  CHECK(log == testing::read_text(c.dir / "run2" / "train.log"));
  CHECK(log.rfind("update\ttrain_loss\tdev_accuracy\tdev_distance\n", 0) == 0);
  CHECK(std::count(log.begin(), log.end(), '\n') == 3);
}

TEST_CASE("semi mode falls back to the training forms with a warning") {
  Corpus& c = corpus();
  const Run r = run(c.dir, c.train_args("semi", "--mode semi", "--max-updates 6 --eval-interval 3"));
  CHECK(r.status == 0);
  CHECK(r.err.find("warning") != std::string::npos);
  testing::write_text(c.dir / "forms.txt", "kamo\nsapit\n");
  const Run with_list =
      run(c.dir, c.train_args("semi2", "--mode semi --unlabeled " + c.path("forms.txt"), "--max-updates 4"));
  CHECK(with_list.status == 0);
  CHECK(RunManifest::read(c.dir / "semi2" / "manifest.txt").has("input.unlabeled.sha256"));
}

TEST_CASE("prediction: greedy equivalence, ensembling and scores") {
  Corpus& c = corpus();
  const std::string model = c.path("run1/model.ckpt");
  REQUIRE(run(c.dir, "predict --model " + model + " --input " + c.path("toy-covered") + " --output " +
                         c.path("beam1.tsv") + " --beam 1 --scores " + c.path("beam1.scores"))
              .status == 0);
  CHECK(fs::exists(c.dir / "beam1.tsv.manifest"));

  const Checkpoint ckpt = load_checkpoint(c.dir / "run1" / "model.ckpt");
  std::ostringstream expected;
  for (InflectionExample ex : read_covered_file(c.dir / "toy-covered")) {
    const auto lemma = ckpt.vocabs.chars.encode(ex.lemma);
    const auto r = greedy_decode(ckpt.model, Direction::kForward, lemma, ckpt.vocabs.features.encode(ex.features),
                                 default_max_len(lemma));
    ex.form = ckpt.vocabs.chars.decode(r.tokens);
    expected << format_task1_line(ex) << '\n';
  }
  CHECK(testing::read_text(c.dir / "beam1.tsv") == expected.str());

  REQUIRE(run(c.dir, "predict --model " + model + " --input " + c.path("toy-covered") + " --output " +
                         c.path("beam10.tsv") + " --scores " + c.path("beam10.scores"))
              .status == 0);
  REQUIRE(run(c.dir, "predict --model " + model + " --model " + model + " --input " + c.path("toy-covered") +
                         " --output " + c.path("pair.tsv") + " --scores " + c.path("pair.scores"))
              .status == 0);
  CHECK(testing::read_text(c.dir / "pair.tsv") == testing::read_text(c.dir / "beam10.tsv"));
  CHECK(testing::read_text(c.dir / "pair.scores") == testing::read_text(c.dir / "beam10.scores"));

  std::istringstream s1(testing::read_text(c.dir / "beam1.scores"));
  std::istringstream s10(testing::read_text(c.dir / "beam10.scores"));
  double a = 0, b = 0;
  int fa = 0, fb = 0, lines = 0;
  while (s1 >> a >> fa && s10 >> b >> fb) {
    CHECK(b >= a);
    ++lines;
  }
  CHECK(lines == 20);
}

TEST_CASE("ensembles with different vocabularies are rejected") {
  Corpus& c = corpus();
  auto other = testing::synthetic_examples(20, 99);
  for (auto& ex : other) ex.lemma += U'z';
  write_examples(c.dir / "other-train", other);
  REQUIRE(run(c.dir, "train --train " + c.path("other-train") + " --dev " + c.path("toy-dev") + " --out " +
                         c.path("other") + " --hidden 16 --max-updates 2 --eval-interval 2")
              .status == 0);
  const Run r = run(c.dir, "predict --model " + c.path("run1/model.ckpt") + " --model " +
                               c.path("other/model.ckpt") + " --input " + c.path("toy-covered") + " --output " +
                               c.path("x.tsv"));
  CHECK(r.status == 2);
  CHECK(r.err.find("vocabulary") != std::string::npos);
}

TEST_CASE("evaluate and compare") {
  testing::TempDir dir;
  testing::write_text(dir / "latin-dev", "amo\tamō\tV;1;SG\namo\tamās\tV;2;SG\namo\tamat\tV;3;SG\n");
  testing::write_text(dir / "latin-pred", "amo\tamo\tV;1;SG\namo\tamas\tV;2;SG\namo\tamat\tV;3;SG\n");
  const std::string gold = "'" + (dir / "latin-dev").string() + "'";
  const std::string pred = "'" + (dir / "latin-pred").string() + "'";

  const Run self = run(dir, "evaluate --gold " + gold + " --pred " + gold);
  CHECK(self.status == 0);
  CHECK(self.out.find("100.0") != std::string::npos);
  CHECK(self.out.find("0.00") != std::string::npos);

  const Run plain = run(dir, "evaluate --gold " + gold + " --pred " + pred + " --csv '" + (dir / "a.csv").string() + "'");
  CHECK(plain.status == 0);
  CHECK(plain.out.find("33.3") != std::string::npos);
  const Run stripped = run(dir, "evaluate --gold " + gold + " --pred " + pred + " --strip-macrons --csv '" +
                                    (dir / "b.csv").string() + "'");
  CHECK(stripped.out.find("100.0") != std::string::npos);
  CHECK(testing::read_text(dir / "a.csv").find("latin,33.3,0.67") != std::string::npos);

  const Run cmp = run(dir, "compare --a '" + (dir / "a.csv").string() + "' --b '" + (dir / "b.csv").string() + "'");
  CHECK(cmp.status == 0);
  CHECK(cmp.out.find("+66.7") != std::string::npos);

  testing::write_text(dir / "short", "amo\tamo\tV;1;SG\n");
  CHECK(run(dir, "evaluate --gold " + gold + " --pred '" + (dir / "short").string() + "'").status == 2);
  testing::write_text(dir / "c.csv", "language,accuracy,edit_distance\ngreek,90.0,0.10\n");
  CHECK(run(dir, "compare --a '" + (dir / "a.csv").string() + "' --b '" + (dir / "c.csv").string() + "'").status == 2);
}
