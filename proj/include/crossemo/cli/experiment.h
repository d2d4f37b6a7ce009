// include/crossemo/cli/experiment.h

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

// Experiment configuration and the run/eval/report steps behind the
// command-line tool. A run directory holds the resolved config, run.json
// (versions, seeds, mode), the training outputs and eval/ metric files.

#ifndef CROSSEMO_CLI_EXPERIMENT_H_
#define CROSSEMO_CLI_EXPERIMENT_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "crossemo/base/util.h"
#include "crossemo/corpus/corpus.h"
#include "crossemo/eval/eval.h"
#include "crossemo/frontend/fbank.h"
#include "crossemo/model/model.h"
#include "crossemo/train/train.h"

namespace crossemo {

inline constexpr const char *kVersion = "0.1.0";

/// Environment variable naming the default output root.
inline constexpr const char *kOutputRootEnv = "CROSSEMO_OUTPUT_ROOT";

/// $CROSSEMO_OUTPUT_ROOT, or "crossemo_out" when unset.
std::filesystem::path DefaultOutputRoot();

struct CorpusSource {
  std::filesystem::path manifest;
  /// "none" keeps the labels already in the manifest.
  std::string label_map = "none";
  /// Relative audio paths resolve here; defaults to the manifest's directory.
  std::optional<std::filesystem::path> audio_root;
  /// Row label for evaluation targets; defaults to the manifest name.
  std::string tag;

  Json ToJson() const;
  static CorpusSource FromJson(const Json &j, const std::string &field);
};

/// Loads the manifest, applies the label map and makes audio paths absolute.
LabelMapResult LoadCorpusSource(const CorpusSource &source);

struct FoldSelection {
  /// A plan written by the prepare step; when unset the plan is built from
  /// the strategy fields over the merged training corpora.
  std::optional<std::filesystem::path> plan;
  std::string strategy = "proportional";
  uint64_t seed = 0;
  int fold = 0;
  int n_folds = 5;
  int test_speakers = 5;
  double test_fraction = 0.2;
  bool reverse = false;
  /// Build the plan separately for each training corpus and take the union
  /// of fold k, so every corpus keeps its own held-out speakers.
  bool per_corpus = false;
  /// Row label for the held-out side; defaults to the experiment tag.
  std::string test_tag;

  Json ToJson() const;
  static FoldSelection FromJson(const Json &j);
};

struct FoldOptions {
  int n_folds = 5;
  int test_speakers = 5;
  double test_fraction = 0.2;
  bool reverse = false;
};

/// InvalidFoldPlan listing the valid names for an unknown strategy.
FoldPlan MakeFoldPlan(const CorpusManifest &manifest, const std::string &strategy, uint64_t seed,
                      const FoldOptions &options = {});

struct AugmentSelection {
  std::string recipe;
  uint64_t seed = 0;
};

struct ExperimentConfig {
  std::string tag = "model";
  std::vector<CorpusSource> corpora;
  std::optional<FoldSelection> folds;
  std::optional<AugmentSelection> augment;
  FbankConfig fbank;
  ModelConfig model;
  TrainConfig train;
  std::vector<CorpusSource> eval;
  /// "best-validation" or "last-epoch".
  std::string selection = "best-validation";
  bool restrict_classes = false;
  std::filesystem::path output_dir;
  std::optional<std::filesystem::path> feature_cache;

  /// Throws BadConfig naming the offending field.
  void Validate() const;
  Json ToJson() const;
  /// "model" and "train" accept a "profile" key ("paper-default" or
  /// "desk-scale") that the remaining keys override. Unknown keys are
  /// rejected.
  static ExperimentConfig FromJson(const Json &j);
  static ExperimentConfig Load(const std::filesystem::path &path);
};

/// Metric file written per (checkpoint, test set).
struct EvalRecord {
  std::string train_tag;
  std::string test_tag;
  int fold = 0;
  std::string checkpoint;
  std::string selection;
  int epoch = 0;
  EvalOutput output;

  Json ToJson() const;
  RunResult ToRunResult() const;
};

RunResult ReadRunResult(const std::filesystem::path &metrics_file, std::string *selection = nullptr,
                        bool *restricted = nullptr);

struct EvalTarget {
  CorpusSource source;
  /// Only these ids when set.
  std::optional<std::set<std::string>> ids;
};

struct EvalFiles {
  std::filesystem::path metrics;
  std::filesystem::path predictions;
};

/// Evaluates a checkpoint on every target and writes
/// <out_dir>/<test_tag>.metrics.json and <test_tag>.predictions.csv. The
/// front-end config, train tag and fold come from the checkpoint metadata
/// unless overridden.
std::vector<EvalFiles> EvaluateCheckpoint(const std::filesystem::path &checkpoint,
                                          const std::vector<EvalTarget> &targets,
                                          const std::filesystem::path &out_dir,
                                          bool restrict_classes,
                                          const std::optional<std::string> &train_tag = std::nullopt,
                                          const std::optional<int> &fold = std::nullopt,
                                          const std::optional<std::filesystem::path> &cache_dir = std::nullopt);

struct ExperimentResult {
  std::filesystem::path run_dir;
  TrainOutcome outcome;
  std::vector<EvalFiles> evals;
};

/// Trains one model as configured and evaluates the selected checkpoint on
/// the held-out fold side and every evaluation target.
ExperimentResult RunExperiment(const ExperimentConfig &config, bool resume = false);

/// Expands shell globs; directories contribute every *.metrics.json below
/// them. Sorted, duplicates removed.
std::vector<std::filesystem::path> CollectMetricFiles(const std::vector<std::string> &patterns);

struct ReportFiles {
  std::filesystem::path json;
  std::filesystem::path csv;
  std::vector<std::filesystem::path> tables;  // one per metric
};

/// Builds the cross-corpus report from metric files and writes report.json,
/// report.csv and report_<metric>.txt into out_dir.
ReportFiles WriteReport(const std::vector<std::filesystem::path> &metric_files,
                        ReportOptions options, const std::filesystem::path &out_dir);

}  // namespace crossemo

#endif  // CROSSEMO_CLI_EXPERIMENT_H_
