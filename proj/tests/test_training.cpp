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

#include <cmath>
#include <sstream>

#include "morphinf/checkpoint.hpp"
#include "morphinf/decoding.hpp"
#include "morphinf/training.hpp"
#include "support.hpp"
#include "synthetic.hpp"

using namespace morphinf;
using morphinf::testing::toy_model;
using morphinf::testing::toy_vocabs;

namespace {

std::vector<const EncodedExample*> pointers(const std::vector<EncodedExample>& v) {
  std::vector<const EncodedExample*> out;
  for (const auto& e : v) out.push_back(&e);
  return out;
}

struct ToyData {
  std::vector<InflectionExample> train, dev;
  Vocabularies vocabs;
};

ToyData toy_data(std::size_t train, std::size_t dev, std::uint64_t seed) {
  auto all = testing::synthetic_examples(train + dev, seed);
  ToyData d;
  d.train.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(train));
  d.dev.assign(all.begin() + static_cast<std::ptrdiff_t>(train), all.end());
  d.vocabs = build_vocabs(d.train);
  return d;
}

TrainConfig small_config() {
  TrainConfig c;
  c.hidden_size = 16;
  c.batch_size = 8;
  c.max_updates = 20;
  c.eval_interval = 10;
  c.seed = 5;
  return c;
}

}  // namespace

TEST_CASE("adam: zero gradient leaves parameters unchanged but advances the step") {
  Parameter<double> p{"x", NumArray<double>::vector({0.5, -2})};
  Adam<double> adam;
  CHECK(adam.update({{&p, NumArray<double>::vector({0, 0})}}));
  CHECK(p.value == NumArray<double>::vector({0.5, -2}));
  CHECK(adam.steps(p) == 1);
}

TEST_CASE("adam: the first bias-corrected step has magnitude close to the step size") {
  for (const double g : {3.0, -0.2, 1e-3}) {
    Parameter<double> p{"x", NumArray<double>::scalar(1.0)};
    Adam<double> adam;
    adam.update({{&p, NumArray<double>::scalar(g)}});
    CHECK(p.value[0] - 1.0 == doctest::Approx(-1e-3 * (g > 0 ? 1 : -1)).epsilon(1e-4));
  }
}

TEST_CASE("adam: quadratic bowl converges and matches a scalar oracle") {
  AdamConfig config;
  config.learning_rate = 1e-2;
  Parameter<double> p{"x", NumArray<double>::scalar(1.0)};
  Adam<double> adam(config);
  double x = 1.0, m = 0, v = 0;
  for (int t = 1; t <= 500; ++t) {
    adam.update({{&p, NumArray<double>::scalar(2.0 * p.value[0])}});
    const double g = 2.0 * x;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    x -= 1e-2 * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
    REQUIRE(p.value[0] == doctest::Approx(x).epsilon(1e-12));
  }
  CHECK(std::abs(p.value[0]) < 1e-2);
}

TEST_CASE("adam: non-finite gradients skip the whole update") {
  Parameter<double> a{"a", NumArray<double>::scalar(1.0)}, b{"b", NumArray<double>::scalar(2.0)};
  Adam<double> adam;
  CHECK_FALSE(adam.update({{&a, NumArray<double>::scalar(1.0)}, {&b, NumArray<double>::scalar(std::nan(""))}}));
  CHECK(a.value[0] == 1.0);
  CHECK(adam.steps(a) == 0);
}

TEST_CASE("global-norm clipping rescales jointly") {
  Parameter<double> a{"a", NumArray<double>::vector({0, 0})}, b{"b", NumArray<double>::scalar(0)};
  std::vector<Gradient<double>> g{{&a, NumArray<double>::vector({3, 0})}, {&b, NumArray<double>::scalar(4)}};
  CHECK(clip_global_norm(g, 1.0) == doctest::Approx(5.0));
  CHECK(g[0].value[0] == doctest::Approx(0.6));
  CHECK(g[1].value[0] == doctest::Approx(0.8));
  CHECK(clip_global_norm(g, 10.0) == doctest::Approx(1.0));
  CHECK(g[0].value[0] == doctest::Approx(0.6));
}

TEST_CASE("checkpoint history keeps strict improvements only") {
  CheckpointHistory h;
  std::vector<bool> persisted;
  std::size_t update = 0;
  for (const double d : {0.5, 0.4, 0.4, 0.6}) persisted.push_back(h.offer({++update, d, 0, {}}));
  CHECK(persisted == std::vector<bool>{true, true, false, false});
  CHECK(h.best()->update == 2);
  REQUIRE(h.persisted().size() == 2);
  CHECK(h.persisted()[0].dev_distance > h.persisted()[1].dev_distance);
}

TEST_CASE("training configuration invariants") {
  TrainConfig c;
  CHECK_NOTHROW(c.validate());
  c.batch_size = 0;
  CHECK_THROWS(c.validate());
  c = {};
  c.keep_prob = 0;
  CHECK_THROWS(c.validate());
  c.keep_prob = 1.0;
  CHECK_NOTHROW(c.validate());
  c.eval_interval = 0;
  CHECK_THROWS(c.validate());
}

TEST_CASE("joint step on one example gives finite positive losses") {
  const ToyData d = toy_data(10, 5, 1);
  auto model = toy_model<float>(d.vocabs, 16, 2);
  const auto train = encode_examples(d.train, d.vocabs);
  Trainer trainer(small_config(), model, d.vocabs, train, d.dev);
  const std::vector<const EncodedExample*> one{&train[0]};
  const StepResult r = trainer.joint_step(one);
  CHECK(r.applied);
  CHECK(std::isfinite(r.forward));
  CHECK(r.forward > 0);
  CHECK(r.backward > 0);
  CHECK(trainer.optimizer().steps(model.embedding()) == 1);
  CHECK(trainer.optimizer().steps(*model.direction(Direction::kBackward).output.weight) == 1);
  CHECK_THROWS(trainer.joint_step(std::vector<const EncodedExample*>{}));
}

TEST_CASE("freezing the backward model matters only through the shared embedding") {
  const ToyData d = toy_data(12, 1, 3);
  const auto train = encode_examples(d.train, d.vocabs);
  const auto batch = pointers(train);

  // Trajectory of L_fwd when `trainable` parameters are updated under either
  // the forward loss alone or the joint loss.
  auto trajectory = [&](bool joint, bool embedding_trainable) {
    auto model = toy_model<double>(d.vocabs, 6, 4, 0.2);
    std::vector<Parameter<double>*> trainable = model.direction_parameters(Direction::kForward);
    if (embedding_trainable) trainable.push_back(&model.embedding());
    Adam<double> adam(AdamConfig{1e-2});
    std::vector<double> losses;
    for (int step = 0; step < 8; ++step) {
      Tape<double> t;
      const auto fwd = mean(forward_loss(t, model, batch, {}));
      losses.push_back(fwd.value()[0]);
      t.backward(joint ? add(fwd, mean(backward_loss(t, model, batch, {}).total)) : fwd);
      std::vector<Gradient<double>> g;
      for (Parameter<double>* p : trainable) g.push_back({p, *t.gradient_of(*p)});
      adam.update(g);
    }
    return losses;
  };
  CHECK(trajectory(true, false) == trajectory(false, false));
  CHECK(trajectory(true, true) != trajectory(false, true));
}

TEST_CASE("reconstruction loss never reaches the backward model") {
  const Vocabularies v = toy_vocabs(4, 3);
  auto model = toy_model<double>(v, 4, 6, 0.3);
  Rng rng(7);
  std::vector<std::vector<int>> forms;
  for (int i = 0; i < 4; ++i) forms.push_back(testing::random_sequence(v, 1, 4, rng));
  std::vector<const std::vector<int>*> ptrs;
  for (const auto& f : forms) ptrs.push_back(&f);

  Tape<double> t;
  const Analyzer analyzer = [&](const std::vector<int>& f) { return analyze_form(model, f); };
  t.backward(mean(reconstruction_loss(t, model, ptrs, analyzer, {})));
  for (Parameter<double>* p : model.direction_parameters(Direction::kBackward)) {
    const NumArray<double>* g = t.gradient_of(*p);
    if (g != nullptr) {
      for (double x : g->values()) CHECK(x == 0.0);
    }
  }
  CHECK(t.gradient_of(model.embedding()) != nullptr);
}

TEST_CASE("identity analysis with gold features reproduces the supervised loss") {
  const Vocabularies v = toy_vocabs(4, 3);
  auto model = toy_model<double>(v, 5, 8, 0.3);
  Rng rng(9);
  for (int i = 0; i < 5; ++i) {
    const auto form = testing::random_sequence(v, 1, 5, rng);
    const auto gold = testing::random_bundle(v, rng);
    const Analyzer identity = [&](const std::vector<int>& f) { return Analysis{f, gold}; };
    const std::vector<const std::vector<int>*> forms{&form};
    Tape<double> t(false);
    const double recon = reconstruction_loss(t, model, forms, identity, {}).value()[0];
    const EncodedExample ex{form, form, gold};
    const std::vector<const EncodedExample*> batch{&ex};
    CHECK(recon == doctest::Approx(forward_loss(t, model, batch, {}).value()[0]).epsilon(1e-6));
  }
}

TEST_CASE("round-trip steps update the forward model and the embedding only") {
  const ToyData d = toy_data(10, 5, 10);
  auto model = toy_model<float>(d.vocabs, 16, 11);
  std::vector<NumArray<float>> before;
  for (Parameter<float>* p : model.direction_parameters(Direction::kBackward)) before.push_back(p->value);
  const NumArray<float> embedding_before = model.embedding().value;

  std::vector<std::vector<int>> forms;
  for (const auto& ex : d.train) forms.push_back(d.vocabs.chars.encode(ex.form));
  std::vector<const std::vector<int>*> ptrs;
  for (const auto& f : forms) ptrs.push_back(&f);
  TrainConfig c = small_config();
  c.mode = TrainMode::kSemi;
  Trainer trainer(c, model, d.vocabs, encode_examples(d.train, d.vocabs), d.dev, forms);
  CHECK(trainer.semi_step(ptrs).applied);

  const auto bwd = model.direction_parameters(Direction::kBackward);
  for (std::size_t i = 0; i < bwd.size(); ++i) {
    CHECK(bwd[i]->value == before[i]);
    CHECK(trainer.optimizer().steps(*bwd[i]) == 0);
  }
  CHECK_FALSE(model.embedding().value == embedding_before);
  CHECK(trainer.optimizer().steps(*model.direction(Direction::kForward).decoder.bias) == 1);
}

TEST_CASE("empty analyses fall back to the form and the most probable feature") {
  const Vocabularies v = toy_vocabs(3, 3);
  auto model = toy_model<double>(v, 4, 12, 0.3);
  auto& dp = model.direction(Direction::kBackward);
  dp.output.bias->value[CharVocabulary::kEos] = 80;
  dp.features.bias->value[0] = -20;
  dp.features.bias->value[1] = -10;
  dp.features.bias->value[2] = -30;
  const std::vector<int> form{4, 6, 5, CharVocabulary::kEos};
  const Analysis a = analyze_form(model, form);
  CHECK(a.lemma == form);
  CHECK(a.features == std::vector<int>{1});
}

TEST_CASE("mixed supervised and round-trip training runs to completion") {
  const ToyData d = toy_data(200, 20, 13);
  auto model = toy_model<float>(d.vocabs, 16, 14);
  std::vector<std::vector<int>> forms;
  for (const auto& ex : d.train) forms.push_back(d.vocabs.chars.encode(ex.form));
  TrainConfig c = small_config();
  c.mode = TrainMode::kSemi;
  c.batch_size = 16;
  c.max_updates = 60;
  c.eval_interval = 20;
  Trainer trainer(c, model, d.vocabs, encode_examples(d.train, d.vocabs), d.dev, forms);
  const CheckpointRecord best = trainer.train();
  CHECK(trainer.updates() == 60);
  for (double l : trainer.loss_history()) CHECK(std::isfinite(l));
  CHECK(trainer.loss_history().back() < trainer.loss_history().front());
  CHECK(std::isfinite(best.dev_distance));
}

TEST_CASE("a fixed seed gives an identical loss trajectory") {
  const ToyData d = toy_data(40, 10, 15);
  auto run = [&](std::uint64_t seed, double keep) {
    auto model = toy_model<float>(d.vocabs, 16, 16);
    TrainConfig c = small_config();
    c.seed = seed;
    c.keep_prob = keep;
    Trainer trainer(c, model, d.vocabs, encode_examples(d.train, d.vocabs), d.dev);
    trainer.train();
    return trainer.loss_history();
  };
  CHECK(run(3, 0.5) == run(3, 0.5));
  CHECK(run(3, 1.0) == run(3, 1.0));
  CHECK(run(3, 0.5) != run(4, 0.5));
}

TEST_CASE("evaluation persists the first checkpoint and it reloads to identical decodes") {
  const ToyData d = toy_data(40, 15, 17);
  auto model = toy_model<float>(d.vocabs, 16, 18);
  testing::TempDir dir;
  TrainerOutput out;
  std::ostringstream log;
  out.log = {&log};
  out.checkpoint_path = dir / "best.ckpt";
  TrainConfig c = small_config();
  Trainer trainer(c, model, d.vocabs, encode_examples(d.train, d.vocabs), d.dev, {}, out);
  const CheckpointRecord first = trainer.evaluate_and_checkpoint();
  CHECK(std::filesystem::exists(dir / "best.ckpt"));
  CHECK(trainer.history().persisted().size() == 1);
  CHECK(log.str().rfind("0\t", 0) == 0);

  const CheckpointRecord best = trainer.train();
  CHECK(best.dev_distance <= first.dev_distance);
  trainer.restore_best();
  const Checkpoint loaded = load_checkpoint(dir / "best.ckpt");
  const LanguageScore a = evaluate_greedy(model, d.vocabs, d.dev);
  const LanguageScore b = evaluate_greedy(loaded.model, loaded.vocabs, d.dev);
  CHECK(a.accuracy == b.accuracy);
  CHECK(a.mean_distance == b.mean_distance);
  CHECK(b.mean_distance == best.dev_distance);

  // Re-scoring written predictions reproduces the logged dev metrics.
  std::ofstream covered(dir / "dev-covered.tsv");
  std::ofstream gold(dir / "toy-dev.tsv");
  for (const auto& ex : d.dev) {
    InflectionExample hidden = ex;
    hidden.form.clear();
    covered << format_task1_line(hidden) << '\n';
    gold << format_task1_line(ex) << '\n';
  }
  covered.close();
  gold.close();
  predict_file(EnsembleSpec<float>{{&loaded.model}}, loaded.vocabs, dir / "dev-covered.tsv", dir / "pred.tsv", 1);
  const LanguageScore rescored = score_files(dir / "toy-dev.tsv", dir / "pred.tsv");
  CHECK(rescored.accuracy == best.dev_accuracy);
  CHECK(rescored.mean_distance == best.dev_distance);
}

TEST_CASE("persist failures abort training with a clear message") {
  const ToyData d = toy_data(20, 5, 19);
  auto model = toy_model<float>(d.vocabs, 8, 20);
  testing::TempDir dir;
  TrainerOutput out;
  out.checkpoint_path = dir / "missing-dir" / "best.ckpt";
  Trainer trainer(small_config(), model, d.vocabs, encode_examples(d.train, d.vocabs), d.dev, {}, out);
  try {
    trainer.train();
    FAIL("expected failure");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("cannot persist checkpoint") != std::string::npos);
  }
}

TEST_CASE("training needs examples and, in semi mode, unlabeled forms") {
  const ToyData d = toy_data(5, 2, 21);
  auto model = toy_model<float>(d.vocabs, 8, 22);
  Trainer empty(small_config(), model, d.vocabs, {}, d.dev);
  CHECK_THROWS_AS(empty.train(), std::invalid_argument);
  TrainConfig c = small_config();
  c.mode = TrainMode::kSemi;
  CHECK_THROWS(Trainer(c, model, d.vocabs, encode_examples(d.train, d.vocabs), d.dev));
}
