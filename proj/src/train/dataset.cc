// src/train/dataset.cc

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

#include "crossemo/train/dataset.h"

#include <algorithm>

#include "crossemo/base/error.h"

namespace crossemo {

std::set<std::string> Dataset::Ids() const {
  std::set<std::string> ids;
  for (const auto &e : examples) ids.insert(e.id);
  return ids;
}

Dataset Dataset::Select(const std::set<std::string> &ids) const {
  Dataset out;
  out.frames = frames;
  out.bands = bands;
  for (const auto &e : examples) {
    if (ids.count(e.id)) out.examples.push_back(e);
  }
  return out;
}

void Dataset::Gather(const std::vector<size_t> &order, size_t begin, size_t end,
                     std::vector<float> *features, std::vector<int> *labels) const {
  const size_t cells = static_cast<size_t>(frames) * bands;
  features->resize((end - begin) * cells);
  labels->resize(end - begin);
  for (size_t i = begin; i < end; ++i) {
    const Example &e = examples[order[i]];
    std::copy(e.features.begin(), e.features.end(), features->begin() + (i - begin) * cells);
    (*labels)[i - begin] = e.label;
  }
}

Dataset LoadDataset(const CorpusManifest &manifest, const FbankConfig &cfg,
                    const std::filesystem::path &audio_root,
                    const std::optional<std::filesystem::path> &cache_dir,
                    const std::optional<std::set<std::string>> &ids) {
  cfg.Validate();
  std::optional<FeatureCache> cache;
  if (cache_dir) cache.emplace(*cache_dir, cfg);
  Dataset data;
  data.frames = cfg.frames();
  data.bands = cfg.n_bands;
  for (const auto &r : manifest.records()) {
    if (ids && !ids->count(r.id)) continue;
    if (!r.emotion)
      throw Error(ErrorCode::kUnknownLabel, "utterance '" + r.id + "' has no emotion label");
    std::optional<FeatureMatrix> fm;
    if (cache) fm = cache->Get(r.id);
    if (!fm) {
      std::filesystem::path path = r.audio_path;
      if (path.is_relative()) path = audio_root / path;
      fm = ComputeFeatures(ReadWav(path), cfg);
      if (cache) cache->Put(r.id, *fm);
    }
    Example e;
    e.id = r.id;
    e.label = static_cast<int>(*r.emotion);
    if (r.source_id) e.source_id = *r.source_id;
    e.features.assign(fm->values.begin(), fm->values.end());
    data.examples.push_back(std::move(e));
  }
  return data;
}

}  // namespace crossemo
