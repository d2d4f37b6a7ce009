// include/crossemo/train/dataset.h

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

#ifndef CROSSEMO_TRAIN_DATASET_H_
#define CROSSEMO_TRAIN_DATASET_H_

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "crossemo/corpus/corpus.h"
#include "crossemo/frontend/fbank.h"

namespace crossemo {

struct Example {
  std::string id;
  int label = 0;
  std::vector<float> features;  // frames x bands, row-major
  std::string source_id;        // set for augmented copies
};

/// Equal-shaped feature matrices with class labels.
struct Dataset {
  int frames = 0;
  int bands = 0;
  std::vector<Example> examples;

  size_t size() const { return examples.size(); }
  bool empty() const { return examples.empty(); }
  std::set<std::string> Ids() const;
  /// Copies the listed examples, in dataset order.
  Dataset Select(const std::set<std::string> &ids) const;
  /// Packs examples[order[begin..end)] into one batch buffer.
  void Gather(const std::vector<size_t> &order, size_t begin, size_t end,
              std::vector<float> *features, std::vector<int> *labels) const;
};

/// Features for every record in `manifest` (or only `ids` when given).
/// Relative audio paths resolve against `audio_root`. With a cache
/// directory, features are read from and written to a FeatureCache. Records
/// without an emotion label throw UnknownLabel.
Dataset LoadDataset(const CorpusManifest &manifest, const FbankConfig &cfg,
                    const std::filesystem::path &audio_root,
                    const std::optional<std::filesystem::path> &cache_dir = std::nullopt,
                    const std::optional<std::set<std::string>> &ids = std::nullopt);

}  // namespace crossemo

#endif  // CROSSEMO_TRAIN_DATASET_H_
