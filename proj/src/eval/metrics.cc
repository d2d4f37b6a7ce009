// src/eval/metrics.cc

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

#include <algorithm>
#include <cmath>

#include "crossemo/base/error.h"
#include "crossemo/eval/eval.h"

namespace crossemo {

namespace {

void RequireCounts(const ConfusionMatrix &cm) {
  if (cm.size() == 0 || cm.total() == 0)
    throw Error(ErrorCode::kEmptyMatrix, "confusion matrix holds no predictions");
}

}  // namespace

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> class_names)
    : classes(std::move(class_names)),
      counts(classes.size(), std::vector<long>(classes.size(), 0)) {}

long ConfusionMatrix::total() const {
  long n = 0;
  for (const auto &row : counts)
    for (long v : row) n += v;
  return n;
}

long ConfusionMatrix::row_sum(int c) const {
  long n = 0;
  for (long v : counts[c]) n += v;
  return n;
}

long ConfusionMatrix::col_sum(int c) const {
  long n = 0;
  for (const auto &row : counts) n += row[c];
  return n;
}

Json ConfusionMatrix::ToJson() const { return Json{{"classes", classes}, {"counts", counts}}; }

ConfusionMatrix ConfusionFromPredictions(const std::vector<std::pair<std::string, std::string>> &pairs,
                                         const std::vector<std::string> &classes) {
  ConfusionMatrix cm(classes);
  auto index = [&](const std::string &label) {
    auto it = std::find(classes.begin(), classes.end(), label);
    if (it == classes.end()) throw Error(ErrorCode::kUnknownLabel, "label '" + label + "' not in class set");
    return static_cast<size_t>(it - classes.begin());
  };
  for (const auto &[truth, predicted] : pairs) ++cm.counts[index(truth)][index(predicted)];
  return cm;
}

BinaryCounts BinaryReduce(const ConfusionMatrix &cm, int c) {
  BinaryCounts b;
  b.tp = cm.counts[c][c];
  b.fn = cm.row_sum(c) - b.tp;
  b.fp = cm.col_sum(c) - b.tp;
  b.tn = cm.total() - b.tp - b.fn - b.fp;
  return b;
}

double UnweightedAccuracy(const ConfusionMatrix &cm) {
  RequireCounts(cm);
  double sum = 0.0;
  for (int c = 0; c < cm.size(); ++c) {
    const BinaryCounts b = BinaryReduce(cm, c);
    sum += static_cast<double>(b.tp + b.tn) / static_cast<double>(b.tp + b.tn + b.fp + b.fn);
  }
  return 100.0 * sum / cm.size();
}

double WeightedAccuracy(const ConfusionMatrix &cm, std::vector<std::string> *warnings) {
  RequireCounts(cm);
  double sum = 0.0;
  int used = 0;
  for (int c = 0; c < cm.size(); ++c) {
    const BinaryCounts b = BinaryReduce(cm, c);
    if (b.tp + b.fn == 0 || b.tn + b.fp == 0) {
      if (warnings)
        warnings->push_back("wa skips class '" + cm.classes[c] + "' (degenerate one-vs-rest split)");
      continue;
    }
    sum += 0.5 * (static_cast<double>(b.tp) / static_cast<double>(b.tp + b.fn) +
                  static_cast<double>(b.tn) / static_cast<double>(b.tn + b.fp));
    ++used;
  }
  return used ? 100.0 * sum / used : 0.0;
}

std::pair<double, double> ConventionalMetrics(const ConfusionMatrix &cm) {
  RequireCounts(cm);
  double recall = 0.0, trace = 0.0;
  int present = 0;
  for (int c = 0; c < cm.size(); ++c) {
    trace += static_cast<double>(cm.counts[c][c]);
    const long row = cm.row_sum(c);
    if (row == 0) continue;
    recall += static_cast<double>(cm.counts[c][c]) / static_cast<double>(row);
    ++present;
  }
  return {100.0 * recall / present, 100.0 * trace / static_cast<double>(cm.total())};
}

const std::vector<std::string> &MetricNames() {
  static const std::vector<std::string> kNames = {"ua", "wa", "mean_class_recall",
                                                  "overall_accuracy"};
  return kNames;
}

Json MetricSet::ToJson() const {
  return Json{{"ua", ua},
              {"wa", wa},
              {"mean_class_recall", mean_class_recall},
              {"overall_accuracy", overall_accuracy}};
}

MetricSet MetricSet::FromJson(const Json &j) {
  MetricSet m;
  m.ua = j.at("ua").get<double>();
  m.wa = j.at("wa").get<double>();
  m.mean_class_recall = j.at("mean_class_recall").get<double>();
  m.overall_accuracy = j.at("overall_accuracy").get<double>();
  return m;
}

double MetricSet::Get(const std::string &metric) const {
  if (metric == "ua") return ua;
  if (metric == "wa") return wa;
  if (metric == "mean_class_recall") return mean_class_recall;
  if (metric == "overall_accuracy") return overall_accuracy;
  throw Error(ErrorCode::kBadConfig, "unknown metric '" + metric + "'");
}

MetricSet ComputeMetrics(const ConfusionMatrix &cm, std::vector<std::string> *warnings) {
  MetricSet m;
  m.ua = UnweightedAccuracy(cm);
  m.wa = WeightedAccuracy(cm, warnings);
  std::tie(m.mean_class_recall, m.overall_accuracy) = ConventionalMetrics(cm);
  return m;
}

FoldAggregate AggregateFolds(const std::vector<double> &values) {
  FoldAggregate a;
  if (values.empty()) return a;
  double sum = 0.0;
  for (double v : values) sum += v;
  a.mean = sum / static_cast<double>(values.size());
  if (values.size() >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - a.mean) * (v - a.mean);
    a.std = std::sqrt(ss / static_cast<double>(values.size()));
  }
  return a;
}

}  // namespace crossemo
