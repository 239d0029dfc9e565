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

#include "morphinf/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "morphinf/checkpoint.hpp"
#include "morphinf/data.hpp"
#include "morphinf/decoding.hpp"
#include "morphinf/evaluation.hpp"
#include "morphinf/manifest.hpp"
#include "morphinf/training.hpp"

namespace morphinf {

namespace {

namespace fs = std::filesystem;

/// Bad flags, unreadable or malformed inputs.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename F>
auto reading(const fs::path& path, F read) {
  try {
    return read(path);
  } catch (const ParseError& e) {
    throw UsageError(path.string() + ": " + e.what());
  } catch (const std::exception& e) {
    throw UsageError(path.string() + ": " + e.what());
  }
}

std::string join_args(int argc, const char* const* argv) {
  std::string out;
  for (int i = 0; i < argc; ++i) {
    if (i > 0) out += ' ';
    out += argv[i];
  }
  return out;
}

std::string number(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

struct TrainFlags {
  std::string train, dev, out, mode = "full", unlabeled;
  std::size_t hidden = 128, batch = 64, max_updates = 20000, eval_interval = 500, semi_ratio = 1;
  double dropout = 0.5, max_hours = 0, learning_rate = 1e-3;
  std::uint64_t seed = 1;
  bool no_clip = false;
};

struct PredictFlags {
  std::vector<std::string> models;
  std::string input, output, scores;
  std::size_t beam = 10;
};

struct EvaluateFlags {
  std::vector<std::string> gold, pred;
  bool strip_macrons = false;
  std::string csv;
};

struct CompareFlags {
  std::string a, b;
};

int cmd_train(const TrainFlags& f, const std::string& command, std::ostream& out, std::ostream& err) {
  const std::string started = utc_timestamp();
  if (f.dropout < 0 || f.dropout >= 1) throw UsageError("--dropout must lie in [0, 1)");
  TrainConfig config;
  config.batch_size = f.batch;
  config.keep_prob = 1.0 - f.dropout;
  config.hidden_size = f.hidden;
  config.adam.learning_rate = f.learning_rate;
  config.max_updates = f.max_updates;
  config.max_hours = f.max_hours;
  config.eval_interval = f.eval_interval;
  config.seed = f.seed;
  config.mode = f.mode == "semi" ? TrainMode::kSemi : TrainMode::kFull;
  config.semi_ratio = f.semi_ratio;
  config.clip_norm = f.no_clip ? 0.0 : 5.0;
  try {
    config.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  const auto train_rows = reading(f.train, read_task1_file);
  const auto dev_rows = reading(f.dev, read_task1_file);
  if (train_rows.empty()) throw UsageError(f.train + ": no training examples");
  Vocabularies vocabs = build_vocabs(train_rows);
  EncodeStats stats;
  std::vector<EncodedExample> train = encode_examples(train_rows, vocabs, &stats);

  std::vector<std::vector<int>> unlabeled;
  if (config.mode == TrainMode::kSemi) {
    if (!f.unlabeled.empty()) {
      for (const std::u32string& w : reading(f.unlabeled, read_word_list)) unlabeled.push_back(vocabs.chars.encode(w));
    } else {
      err << "warning: --mode semi without --unlabeled; using the form column of " << f.train << '\n';
      for (const auto& row : train_rows) unlabeled.push_back(vocabs.chars.encode(row.form));
    }
    if (unlabeled.empty()) throw UsageError("no unlabeled forms");
  }

  const fs::path dir(f.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw UsageError("cannot create " + f.out + ": " + ec.message());
  std::ofstream log(dir / "train.log", std::ios::trunc);
  if (!log) throw UsageError("cannot write " + (dir / "train.log").string());

  RunManifest manifest;
  manifest.set("tool", "morphinf");
  manifest.set("version", kToolVersion);
  manifest.set("command", command);
  manifest.set("subcommand", "train");
  manifest.set("mode", f.mode);
  manifest.set("hidden", std::to_string(config.hidden_size));
  manifest.set("batch", std::to_string(config.batch_size));
  manifest.set("dropout", number(f.dropout));
  manifest.set("learning_rate", number(config.adam.learning_rate));
  manifest.set("adam_beta1", number(config.adam.beta1));
  manifest.set("adam_beta2", number(config.adam.beta2));
  manifest.set("adam_epsilon", number(config.adam.epsilon));
  manifest.set("max_updates", std::to_string(config.max_updates));
  manifest.set("max_hours", number(config.max_hours));
  manifest.set("eval_interval", std::to_string(config.eval_interval));
  manifest.set("semi_ratio", std::to_string(config.semi_ratio));
  manifest.set("clip_norm", number(config.clip_norm));
  manifest.set("seed", std::to_string(config.seed));
  manifest.add_input("train", f.train);
  manifest.add_input("dev", f.dev);
  if (!f.unlabeled.empty()) manifest.add_input("unlabeled", f.unlabeled);
  manifest.set("started", started);

  if (stats.unknown_chars > 0 || stats.unknown_features > 0) {
    err << "warning: " << stats.unknown_chars << " unknown characters in training data\n";
  }

  std::seed_seq init_seed{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32), 1u};
  Rng init_rng(init_seed);
  ModelConfig model_config{config.hidden_size, vocabs.chars.size(), vocabs.features.size()};
  InflectionModel<float> model(model_config, Initializer{&init_rng, 0.1});

  TrainerOutput output;
  output.log = {&out, &log};
  output.diagnostics = &err;
  output.checkpoint_path = dir / "model.ckpt";
  for (std::ostream* s : output.log) *s << "update\ttrain_loss\tdev_accuracy\tdev_distance" << std::endl;
  Trainer trainer(config, model, vocabs, std::move(train), dev_rows, std::move(unlabeled), output);
  const CheckpointRecord best = trainer.train();

  manifest.set("updates", std::to_string(trainer.updates()));
  manifest.set("best_update", std::to_string(best.update));
  manifest.set("best_dev_accuracy", format_fixed(best.dev_accuracy, 2));
  manifest.set("best_dev_distance", format_fixed(best.dev_distance, 4));
  manifest.set("checkpoint", best.path.string());
  manifest.set("finished", utc_timestamp());
  manifest.write(dir / "manifest.txt");
  out << "best checkpoint: update " << best.update << ", dev accuracy " << format_fixed(best.dev_accuracy, 1)
      << ", dev distance " << format_fixed(best.dev_distance, 2) << " -> " << best.path.string() << '\n';
  return kExitOk;
}

int cmd_predict(const PredictFlags& f, const std::string& command, std::ostream& out, std::ostream& err) {
  const std::string started = utc_timestamp();
  if (f.models.empty() || f.models.size() > 2) throw UsageError("--model must be given once or twice");
  if (f.beam < 1) throw UsageError("--beam must be >= 1");
  std::vector<Checkpoint> checkpoints;
  for (const std::string& path : f.models) checkpoints.push_back(reading(path, load_checkpoint));
  std::vector<const Vocabularies*> vocabs;
  EnsembleSpec<float> ensemble;
  for (const Checkpoint& c : checkpoints) {
    vocabs.push_back(&c.vocabs);
    ensemble.members.push_back(&c.model);
  }
  try {
    check_same_vocabularies(vocabs);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  std::vector<Prediction> predictions;
  try {
    predictions = predict_file(ensemble, checkpoints[0].vocabs, f.input, f.output, f.beam);
  } catch (const ParseError& e) {
    throw UsageError(f.input + ": " + e.what());
  }
  std::size_t truncated = 0;
  for (const Prediction& p : predictions) truncated += p.result.finished ? 0 : 1;
  if (truncated > 0) err << "warning: " << truncated << " predictions reached the length limit without EOS\n";
  if (!f.scores.empty()) {
    std::ofstream scores(f.scores, std::ios::trunc);
    if (!scores) throw UsageError("cannot write " + f.scores);
    scores.precision(17);
    for (const Prediction& p : predictions) scores << p.result.log_prob << '\t' << (p.result.finished ? 1 : 0) << '\n';
  }

  RunManifest manifest;
  manifest.set("tool", "morphinf");
  manifest.set("version", kToolVersion);
  manifest.set("command", command);
  manifest.set("subcommand", "predict");
  manifest.set("beam", std::to_string(f.beam));
  manifest.set("seed", std::to_string(checkpoints[0].seed));
  for (std::size_t i = 0; i < f.models.size(); ++i) manifest.add_input("model" + std::to_string(i + 1), f.models[i]);
  manifest.add_input("input", f.input);
  manifest.set("output", f.output);
  manifest.set("lines", std::to_string(predictions.size()));
  manifest.set("truncated", std::to_string(truncated));
  manifest.set("started", started);
  manifest.set("finished", utc_timestamp());
  manifest.write(f.output + ".manifest");
  out << "wrote " << predictions.size() << " predictions to " << f.output << '\n';
  return kExitOk;
}

int cmd_evaluate(const EvaluateFlags& f, std::ostream& out) {
  if (f.gold.size() != f.pred.size()) throw UsageError("--gold and --pred must be given the same number of times");
  EvalReport report;
  for (std::size_t i = 0; i < f.gold.size(); ++i) {
    try {
      report.languages.push_back(score_files(f.gold[i], f.pred[i], f.strip_macrons));
    } catch (const std::exception& e) {
      throw UsageError(e.what());
    }
  }
  write_report_table(out, report);
  if (!f.csv.empty()) {
    std::ofstream csv(f.csv, std::ios::trunc);
    if (!csv) throw UsageError("cannot write " + f.csv);
    write_report_csv(csv, report);
  }
  return kExitOk;
}

int cmd_compare(const CompareFlags& f, std::ostream& out) {
  auto load = [](const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open " + path);
    try {
      return read_report_csv(in);
    } catch (const std::exception& e) {
      throw UsageError(path + ": " + e.what());
    }
  };
  const EvalReport a = load(f.a);
  const EvalReport b = load(f.b);
  DeltaTable table;
  try {
    table = compare_runs(a, b);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  write_delta_table(out, table);
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Neural morphological inflection and analysis"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  TrainFlags tf;
  CLI::App* train = app.add_subcommand("train", "Train joint forward/backward models");
  train->add_option("--train", tf.train, "Task-1 training file")->required()->check(CLI::ExistingFile);
  train->add_option("--dev", tf.dev, "Task-1 development file")->required()->check(CLI::ExistingFile);
  train->add_option("--out", tf.out, "Output directory")->required();
  train->add_option("--mode", tf.mode, "full or semi")->check(CLI::IsMember({"full", "semi"}))->capture_default_str();
  train->add_option("--unlabeled", tf.unlabeled, "Plain list of unlabeled forms")->check(CLI::ExistingFile);
  train->add_option("--hidden", tf.hidden, "Hidden size")->capture_default_str();
  train->add_option("--batch", tf.batch, "Batch size")->capture_default_str();
  train->add_option("--dropout", tf.dropout, "Dropout probability")->capture_default_str();
  train->add_option("--learning-rate", tf.learning_rate, "Adam step size")->capture_default_str();
  train->add_option("--max-updates", tf.max_updates, "Update budget, 0 for none")->capture_default_str();
  train->add_option("--max-hours", tf.max_hours, "Wall-clock budget, 0 for none")->capture_default_str();
  train->add_option("--eval-interval", tf.eval_interval, "Updates between dev evaluations")->capture_default_str();
  train->add_option("--semi-ratio", tf.semi_ratio, "Unlabeled batches per supervised batch")->capture_default_str();
  train->add_option("--seed", tf.seed, "Random seed")->capture_default_str();
  train->add_flag("--no-clip", tf.no_clip, "Disable gradient-norm clipping");

  PredictFlags pf;
  CLI::App* predict = app.add_subcommand("predict", "Inflect a covered task-1 file");
  predict->add_option("--model", pf.models, "Checkpoint; give twice to ensemble")->required()->check(CLI::ExistingFile);
  predict->add_option("--input", pf.input, "Covered task-1 file")->required()->check(CLI::ExistingFile);
  predict->add_option("--output", pf.output, "Predictions file")->required();
  predict->add_option("--beam", pf.beam, "Beam width")->capture_default_str();
  predict->add_option("--scores", pf.scores, "Per-line log-probability file");

  EvaluateFlags ef;
  CLI::App* evaluate = app.add_subcommand("evaluate", "Score predictions against gold");
  evaluate->add_option("--gold", ef.gold, "Gold task-1 file, one per language")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--pred", ef.pred, "Prediction file, paired with --gold")->required()->check(CLI::ExistingFile);
  evaluate->add_flag("--strip-macrons", ef.strip_macrons, "Ignore vowel length marks");
  evaluate->add_option("--csv", ef.csv, "Also write the report as CSV");

  CompareFlags cf;
  CLI::App* compare = app.add_subcommand("compare", "Per-language accuracy deltas of two CSV reports");
  compare->add_option("--a", cf.a, "Baseline report CSV")->required()->check(CLI::ExistingFile);
  compare->add_option("--b", cf.b, "Other report CSV")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const std::string command = join_args(argc, argv);
  try {
    if (*train) return cmd_train(tf, command, out, err);
    if (*predict) return cmd_predict(pf, command, out, err);
    if (*evaluate) return cmd_evaluate(ef, out);
    if (*compare) return cmd_compare(cf, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitUsage;
}

}  // namespace morphinf
