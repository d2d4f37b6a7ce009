// include/crossemo/train/train.h

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

#ifndef CROSSEMO_TRAIN_TRAIN_H_
#define CROSSEMO_TRAIN_TRAIN_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "crossemo/base/util.h"
#include "crossemo/model/model.h"
#include "crossemo/train/dataset.h"

namespace crossemo {

struct TrainConfig {
  int epochs = 200;
  double learning_rate = 1e-4;
  int batch_size = 186;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int plateau_patience = 4;
  double plateau_factor = 0.8;
  double plateau_min_delta = 1e-6;
  double lr_floor = 1e-7;
  double validation_fraction = 0.1;
  uint64_t seed = 0;
  /// Stop after this many epochs without a validation improvement.
  std::optional<int> early_stop;

  static TrainConfig PaperDefault() { return {}; }
  static TrainConfig DeskScale();
  /// "paper-default" or "desk-scale"; BadConfig otherwise.
  static TrainConfig Profile(const std::string &name);

  /// Throws BadConfig naming the offending field.
  void Validate() const;
  Json ToJson() const;
  static TrainConfig FromJson(const Json &j);
};

struct AdamState {
  long step = 0;
  std::vector<std::vector<float>> m;
  std::vector<std::vector<float>> v;
};

/// One Adam update over every parameter. A parameter whose gradient was
/// never touched counts as a zero gradient. Moments are allocated on the
/// first call; ShapeMismatch when they no longer fit the parameters.
void AdamStep(const std::vector<std::pair<std::string, ad::Var<float>>> &params, AdamState *state,
              double lr, const TrainConfig &cfg);

struct PlateauState {
  double lr = 1e-4;
  std::optional<double> best;
  int since = 0;  // epochs since the last improvement or reduction
  int reductions = 0;
};

/// Higher-is-better metric. The first call on an empty state records the
/// baseline. Returns true when the learning rate was reduced.
bool PlateauUpdate(PlateauState *state, double metric, const TrainConfig &cfg);

/// Class-proportional, seeded split of (id, label) items into fit and
/// validation ids. TooFewPerClass when a class has fewer than 2 items.
std::pair<std::vector<std::string>, std::vector<std::string>> CarveValidation(
    const std::vector<std::pair<std::string, int>> &items, double fraction, uint64_t seed);

/// Splits a dataset by CarveValidation into (fit, validation).
std::pair<Dataset, Dataset> SplitForTraining(const Dataset &data, double fraction, uint64_t seed);

/// ceil(n / batch).
size_t BatchCount(size_t n, int batch);

/// Seeded permutation of [0, n) for one epoch.
std::vector<size_t> EpochOrder(size_t n, uint64_t seed, int epoch);

/// TestLeakage when any fit or validation example, or the source of an
/// augmented one, appears among the test ids.
void CheckNoLeakage(const Dataset &fit, const Dataset &val, const std::set<std::string> &test_ids);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_ua = 0.0;
  double val_wa = 0.0;
  double lr = 0.0;

  Json ToJson() const;
  static EpochRecord FromJson(const Json &j);
};

struct TrainOptions {
  std::filesystem::path out_dir;
  std::set<std::string> test_ids;
  /// Continue from the last completed epoch recorded in out_dir.
  bool resume = false;
  Json meta = Json::object();
  std::function<void(const EpochRecord &)> on_epoch;
};

struct TrainOutcome {
  std::vector<EpochRecord> history;
  int start_epoch = 1;
  int best_epoch = 0;
  double best_val_ua = 0.0;
  std::filesystem::path best_checkpoint;
  std::filesystem::path last_checkpoint;
  std::filesystem::path history_file;
};

/// Mini-batch Adam over `fit`, validation ua after every epoch driving the
/// plateau schedule. Writes history.jsonl, best.ckpt (best validation ua,
/// epoch 0 is the untrained model), last.ckpt and the resume state to
/// out_dir. EmptyTrainSet, TestLeakage, DivergedLoss.
TrainOutcome TrainModel(Model<float> &model, const Dataset &fit, const Dataset &val,
                        const TrainConfig &cfg, const TrainOptions &options);

std::vector<EpochRecord> ReadHistory(const std::filesystem::path &path);

}  // namespace crossemo

#endif  // CROSSEMO_TRAIN_TRAIN_H_
