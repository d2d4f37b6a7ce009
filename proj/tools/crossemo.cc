// tools/crossemo.cc

// Copyright 2026  The crossemo Authors
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

// crossemo: synth, prepare, augment, train, eval and report subcommands.
// Exit codes: 0 ok, 2 validation failure, 3 runtime failure.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "crossemo/augment/augment.h"
#include "crossemo/base/error.h"
#include "crossemo/cli/experiment.h"
#include "crossemo/synth/synth.h"

namespace fs = std::filesystem;
using namespace crossemo;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

fs::path OrDefault(const std::string &flag, const fs::path &fallback) {
  return flag.empty() ? fallback : fs::path(flag);
}

std::vector<std::string> SplitList(const std::string &csv) {
  std::vector<std::string> out;
  size_t start = 0;
  while (start <= csv.size() && !csv.empty()) {
    const size_t end = csv.find(',', start);
    const std::string item = csv.substr(start, end == std::string::npos ? end : end - start);
    if (!item.empty()) out.push_back(item);
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return out;
}

struct SynthArgs {
  std::string spec;
  std::string out;
  std::optional<double> shift;
  double room = 0.0;
};

int CmdSynth(const SynthArgs &a) {
  SynthCorpusSpec spec = a.spec.empty() ? SynthCorpusSpec::Reference()
                                        : SynthCorpusSpec::FromJson(LoadJsonFile(a.spec));
  if (a.shift) spec = DeriveShiftedCorpus(spec, *a.shift, a.room);
  spec.Validate();
  const fs::path out = OrDefault(a.out, DefaultOutputRoot() / "corpora" / spec.name);
  GenerateCorpus(spec, out);
  std::cout << (out / "manifest.jsonl").string() << "\n";
  return 0;
}

struct PrepareArgs {
  std::string manifest;
  std::string label_map = "none";
  std::string strategy;
  uint64_t seed = 0;
  FoldOptions folds;
  std::string audio_root;
  std::string out;
};

int CmdPrepare(const PrepareArgs &a) {
  CorpusSource source;
  source.manifest = fs::absolute(a.manifest);
  source.label_map = a.label_map;
  if (!a.audio_root.empty()) source.audio_root = fs::absolute(a.audio_root);
  const auto mapped = LoadCorpusSource(source);
  const FoldPlan plan = MakeFoldPlan(mapped.manifest, a.strategy, a.seed, a.folds);
  ValidateFoldPlan(plan, mapped.manifest);
  const fs::path out = OrDefault(a.out, DefaultOutputRoot() / "prepared" / mapped.manifest.name());
  fs::create_directories(out);
  SaveManifest(mapped.manifest, out / "manifest.jsonl");
  WriteFileAtomic(out / "discards.csv", mapped.discards.ToCsv());
  WriteFileAtomic(out / "folds.json", plan.ToJson().dump(2) + "\n");
  std::cout << (out / "folds.json").string() << "\n";
  return 0;
}

struct AugmentArgs {
  std::string manifest;
  std::string recipe;
  uint64_t seed = 0;
  std::string audio_root;
  std::string out;
};

int CmdAugment(const AugmentArgs &a) {
  const AugmentRecipe recipe = GetRecipe(a.recipe);
  CorpusSource source;
  source.manifest = fs::absolute(a.manifest);
  if (!a.audio_root.empty()) source.audio_root = fs::absolute(a.audio_root);
  const auto loaded = LoadCorpusSource(source);
  const fs::path out =
      OrDefault(a.out, DefaultOutputRoot() / "augmented" / (loaded.manifest.name() + "_" + a.recipe));
  const AugmentPlan plan = PlanAugmentation(loaded.manifest, recipe, a.seed);
  const ApplyResult applied = ApplyPlan(plan, loaded.manifest, fs::path(), out);
  WriteFileAtomic(out / "plan.json", plan.ToJson().dump(2) + "\n");
  WriteFileAtomic(out / "summary.csv", applied.SummaryCsv());
  if (applied.failures() > 0) {
    std::cerr << "crossemo: " << applied.failures() << " entries failed to render; see "
              << (out / "summary.csv").string() << "\n";
    return kExitRuntime;
  }
  SaveManifest(applied.manifest, out / "manifest.jsonl");
  std::cout << (out / "manifest.jsonl").string() << "\n";
  return 0;
}

struct TrainArgs {
  std::string config;
  bool resume = false;
  std::string tag;
  std::string output_dir;
  std::optional<int> epochs;
  std::optional<uint64_t> seed;
  std::string selection;
};

int CmdTrain(const TrainArgs &a) {
  Json j = LoadJsonFile(a.config);
  if (!a.tag.empty()) j["tag"] = a.tag;
  if (!a.output_dir.empty()) j["output_dir"] = a.output_dir;
  if (!a.selection.empty()) j["selection"] = a.selection;
  if (a.epochs || a.seed) {
    if (!j.contains("train")) j["train"] = Json::object();
    if (a.epochs) j["train"]["epochs"] = *a.epochs;
    if (a.seed) j["train"]["seed"] = *a.seed;
  }
  const ExperimentConfig config = ExperimentConfig::FromJson(j);
  const auto result = RunExperiment(config, a.resume);
  std::cerr << "crossemo: trained epochs " << result.outcome.start_epoch << ".."
            << (result.outcome.history.empty() ? 0 : result.outcome.history.back().epoch)
            << ", best validation ua " << result.outcome.best_val_ua << " at epoch "
            << result.outcome.best_epoch << "\n";
  std::cout << result.run_dir.string() << "\n";
  return 0;
}

struct EvalArgs {
  std::string checkpoint;
  std::vector<std::string> tests;
  std::vector<std::string> tags;
  std::string label_map = "none";
  bool restrict_classes = false;
  std::string train_tag;
  std::optional<int> fold;
  std::string feature_cache;
  std::string out;
};

int CmdEval(const EvalArgs &a) {
  if (!a.tags.empty() && a.tags.size() != a.tests.size())
    throw Error(ErrorCode::kBadConfig, "--tag must be given once per --test or not at all");
  std::vector<EvalTarget> targets;
  for (size_t i = 0; i < a.tests.size(); ++i) {
    EvalTarget t;
    t.source.manifest = fs::absolute(a.tests[i]);
    t.source.label_map = a.label_map;
    if (!a.tags.empty()) t.source.tag = a.tags[i];
    targets.push_back(t);
  }
  const fs::path out =
      OrDefault(a.out, fs::path(a.checkpoint).parent_path() / "eval");
  std::optional<fs::path> cache;
  if (!a.feature_cache.empty()) cache = fs::absolute(a.feature_cache);
  std::optional<std::string> train_tag;
  if (!a.train_tag.empty()) train_tag = a.train_tag;
  const auto files =
      EvaluateCheckpoint(a.checkpoint, targets, out, a.restrict_classes, train_tag, a.fold, cache);
  for (const auto &f : files) std::cout << f.metrics.string() << "\n";
  return 0;
}

struct ReportArgs {
  std::vector<std::string> runs;
  std::string columns;
  std::string rows;
  int expected_folds = 0;
  std::string title = "Cross-corpus results";
  std::string selection;
  std::string metric = "ua";
  std::string out;
};

int CmdReport(const ReportArgs &a) {
  ReportOptions options;
  options.column_order = SplitList(a.columns);
  options.row_order = SplitList(a.rows);
  options.expected_folds = a.expected_folds;
  options.title = a.title;
  options.model_selection = a.selection;
  const auto names = MetricNames();
  if (std::find(names.begin(), names.end(), a.metric) == names.end())
    throw Error(ErrorCode::kBadConfig, "--metric must be one of ua, wa, mean_class_recall, overall_accuracy");
  const auto files = CollectMetricFiles(a.runs);
  const fs::path out = OrDefault(a.out, DefaultOutputRoot() / "report");
  const ReportFiles written = WriteReport(files, options, out);
  std::cout << ReadFile(out / ("report_" + a.metric + ".txt"));
  std::cerr << "crossemo: wrote " << written.json.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Cross-corpus speech emotion recognition experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  std::function<int()> run;

  SynthArgs synth;
  auto *s = app.add_subcommand("synth", "Generate a labelled synthetic corpus");
  s->add_option("--spec", synth.spec, "Corpus spec JSON (default: the reference spec)");
  s->add_option("--shift", synth.shift, "Derive the timbre-shifted sibling with this formant shift");
  s->add_option("--room", synth.room, "Reverb decay in seconds for the sibling");
  s->add_option("--out", synth.out, "Output directory");
  s->callback([&] { run = [&] { return CmdSynth(synth); }; });

  PrepareArgs prep;
  auto *p = app.add_subcommand("prepare", "Map labels and build a fold plan");
  p->add_option("--manifest", prep.manifest, "Corpus manifest")->required();
  p->add_option("--label-map", prep.label_map, "none, iemocap, mosei, categorical or enterface");
  p->add_option("--strategy", prep.strategy,
                "speaker-rotation, session-holdout, proportional or split-80-20")
      ->required();
  p->add_option("--seed", prep.seed, "Fold seed");
  p->add_option("--folds", prep.folds.n_folds, "Number of folds");
  p->add_option("--test-speakers", prep.folds.test_speakers, "Test speakers per rotation fold");
  p->add_option("--test-fraction", prep.folds.test_fraction, "Per-class test fraction");
  p->add_flag("--reverse", prep.folds.reverse, "Session holdout starts from the last session");
  p->add_option("--audio-root", prep.audio_root, "Directory relative audio paths resolve against");
  p->add_option("--out", prep.out, "Output directory");
  p->callback([&] { run = [&] { return CmdPrepare(prep); }; });

  AugmentArgs aug;
  auto *a = app.add_subcommand("augment", "Render an augmentation recipe");
  a->add_option("--manifest", aug.manifest, "Training-side manifest")->required();
  a->add_option("--recipe", aug.recipe, "speed, volume, 2sp-2vol or 7vars")->required();
  a->add_option("--seed", aug.seed, "Factor seed");
  a->add_option("--audio-root", aug.audio_root, "Directory relative audio paths resolve against");
  a->add_option("--out", aug.out, "Output directory");
  a->callback([&] { run = [&] { return CmdAugment(aug); }; });

  TrainArgs train;
  auto *t = app.add_subcommand("train", "Train one model from an experiment config");
  t->add_option("config", train.config, "Experiment config JSON")->required();
  t->add_flag("--resume", train.resume, "Continue from the last completed epoch");
  t->add_option("--tag", train.tag, "Overrides tag");
  t->add_option("--output-dir", train.output_dir, "Overrides output_dir");
  t->add_option("--epochs", train.epochs, "Overrides train.epochs");
  t->add_option("--seed", train.seed, "Overrides train.seed");
  t->add_option("--selection", train.selection, "best-validation or last-epoch");
  t->callback([&] { run = [&] { return CmdTrain(train); }; });

  EvalArgs ev;
  auto *e = app.add_subcommand("eval", "Evaluate a checkpoint on test manifests");
  e->add_option("--checkpoint", ev.checkpoint, "Checkpoint file")->required();
  e->add_option("--test", ev.tests, "Test manifest (repeatable)")->required();
  e->add_option("--tag", ev.tags, "Row tag per --test");
  e->add_option("--label-map", ev.label_map, "Label map applied to every test manifest");
  e->add_flag("--restrict-classes", ev.restrict_classes,
              "Restrict predictions to the classes present in each test set");
  e->add_option("--train-tag", ev.train_tag, "Column tag (default: from the checkpoint)");
  e->add_option("--fold", ev.fold, "Fold index (default: from the checkpoint)");
  e->add_option("--feature-cache", ev.feature_cache, "Feature cache directory");
  e->add_option("--out", ev.out, "Output directory (default: eval/ next to the checkpoint)");
  e->callback([&] { run = [&] { return CmdEval(ev); }; });

  ReportArgs rep;
  auto *r = app.add_subcommand("report", "Assemble the cross-corpus report");
  r->add_option("runs", rep.runs, "Metric files, run directories or globs")->required();
  r->add_option("--columns", rep.columns, "Comma-separated model order");
  r->add_option("--rows", rep.rows, "Comma-separated test-set order");
  r->add_option("--expected-folds", rep.expected_folds, "Folds every cell must have");
  r->add_option("--title", rep.title, "Table title");
  r->add_option("--selection", rep.selection, "Model selection label");
  r->add_option("--metric", rep.metric, "Metric printed to stdout");
  r->add_option("--out", rep.out, "Output directory");
  r->callback([&] { run = [&] { return CmdReport(rep); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kExitValidation;
  }
  try {
    return run();
  } catch (const Error &err) {
    std::cerr << "crossemo: " << err.what() << "\n";
    return err.IsValidation() ? kExitValidation : kExitRuntime;
  } catch (const Json::exception &err) {
    std::cerr << "crossemo: malformed JSON: " << err.what() << "\n";
    return kExitValidation;
  } catch (const std::exception &err) {
    std::cerr << "crossemo: " << err.what() << "\n";
    return kExitRuntime;
  }
}
