// include/crossemo/eval/eval.h

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

#ifndef CROSSEMO_EVAL_EVAL_H_
#define CROSSEMO_EVAL_EVAL_H_

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "crossemo/base/util.h"
#include "crossemo/model/model.h"
#include "crossemo/train/dataset.h"

namespace crossemo {

/// Rows are true classes, columns predicted classes.
struct ConfusionMatrix {
  std::vector<std::string> classes;
  std::vector<std::vector<long>> counts;

  explicit ConfusionMatrix(std::vector<std::string> class_names = {});
  int size() const { return static_cast<int>(classes.size()); }
  long total() const;
  long row_sum(int c) const;
  long col_sum(int c) const;

  Json ToJson() const;
};

/// Throws UnknownLabel for a label outside `classes`.
ConfusionMatrix ConfusionFromPredictions(const std::vector<std::pair<std::string, std::string>> &pairs,
                                         const std::vector<std::string> &classes);

struct BinaryCounts {
  long tp = 0, tn = 0, fp = 0, fn = 0;
};

/// One-vs-rest reduction for class c.
BinaryCounts BinaryReduce(const ConfusionMatrix &cm, int c);

/// (tp + tn) / (tp + tn + fp + fn) in percent, macro-averaged over the
/// one-vs-rest reductions of every class. Throws EmptyMatrix.
double UnweightedAccuracy(const ConfusionMatrix &cm);

/// 0.5 (tp / (tp + fn) + tn / (tn + fp)) in percent, macro-averaged over
/// one-vs-rest reductions. Classes with a zero denominator are skipped and
/// named in `warnings`. Throws EmptyMatrix.
double WeightedAccuracy(const ConfusionMatrix &cm, std::vector<std::string> *warnings = nullptr);

/// Mean of per-class recall over classes present in the truth, and
/// trace / total, both in percent. Throws EmptyMatrix.
std::pair<double, double> ConventionalMetrics(const ConfusionMatrix &cm);

struct MetricSet {
  double ua = 0.0;
  double wa = 0.0;
  double mean_class_recall = 0.0;
  double overall_accuracy = 0.0;

  Json ToJson() const;
  static MetricSet FromJson(const Json &j);
  double Get(const std::string &metric) const;
};

const std::vector<std::string> &MetricNames();

MetricSet ComputeMetrics(const ConfusionMatrix &cm, std::vector<std::string> *warnings = nullptr);

struct FoldAggregate {
  double mean = 0.0;
  std::optional<double> std;  // population std, present from two folds on
};

FoldAggregate AggregateFolds(const std::vector<double> &values);

struct RunResult {
  std::string train_tag;
  std::string test_tag;
  int fold = 0;
  MetricSet metrics;
};

struct ReportCell {
  bool matched = false;
  std::vector<int> folds;
  bool complete = false;  // every expected fold present
  std::map<std::string, FoldAggregate> metrics;
};

struct ReportOptions {
  /// Column (model) and row (test set) order; unlisted tags follow sorted.
  std::vector<std::string> column_order;
  std::vector<std::string> row_order;
  /// Folds each cell must have; 0 means the largest fold set seen.
  int expected_folds = 0;
  std::string title = "Cross-corpus results";
  std::string model_selection;  // e.g. "best-validation"
  bool restrict_classes = false;
};

/// Models as columns, test sets as rows. Cells missing folds are flagged
/// MissingFold and kept out of every average.
struct CrossCorpusReport {
  std::vector<std::string> columns;
  std::vector<std::string> rows;
  std::map<std::pair<std::string, std::string>, ReportCell> cells;  // (train, test)
  std::map<std::string, std::map<std::string, std::optional<double>>> column_average;
  std::map<std::string, std::optional<double>> matched_average;
  std::map<std::string, std::optional<double>> mismatched_average;
  std::vector<std::string> flags;
  ReportOptions options;
  int expected_folds = 0;

  Json ToJson() const;
  std::string ToCsv() const;
  /// Text table for one metric: "mean (std)" per cell, matched cells in
  /// **bold**, an Avg row and the matched/mismatched averages.
  std::string ToTable(const std::string &metric = "ua") const;
};

CrossCorpusReport BuildCrossMatrix(const std::vector<RunResult> &runs,
                                   const ReportOptions &options = {});

struct Prediction {
  std::string id;
  int truth = 0;
  int predicted = 0;
  std::vector<double> scores;  // softmax over all model classes
};

struct EvalOutput {
  ConfusionMatrix cm;
  MetricSet metrics;
  std::vector<Prediction> predictions;
  bool restricted = false;
  std::vector<int> allowed_classes;
  std::vector<std::string> warnings;

  Json ToJson() const;
  std::string PredictionsCsv() const;
};

/// Eval-mode forward over `data`. Without restriction the argmax runs over
/// every model class and the confusion matrix covers all of them. With
/// `restrict_classes` the argmax and the matrix cover only the classes
/// present in the test labels; ClassSetMismatch if a test label lies
/// outside the model's classes.
EvalOutput EvaluateModel(Model<float> &model, const Dataset &data, bool restrict_classes,
                         int batch_size = 32);

std::vector<std::string> EmotionClassNames();

}  // namespace crossemo

#endif  // CROSSEMO_EVAL_EVAL_H_
