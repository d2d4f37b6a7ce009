// src/eval/evaluate.cc

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
#include <cstdio>
#include <numeric>
#include <set>

#include "crossemo/base/error.h"
#include "crossemo/corpus/corpus.h"
#include "crossemo/eval/eval.h"

namespace crossemo {

std::vector<std::string> EmotionClassNames() {
  std::vector<std::string> names;
  for (int c = 0; c < kNumEmotions; ++c) names.emplace_back(EmotionName(static_cast<Emotion>(c)));
  return names;
}

Json EvalOutput::ToJson() const {
  return Json{{"metrics", metrics.ToJson()},
              {"confusion", cm.ToJson()},
              {"n", predictions.size()},
              {"restrict_classes", restricted},
              {"allowed_classes", allowed_classes},
              {"warnings", warnings}};
}

std::string EvalOutput::PredictionsCsv() const {
  const auto names = EmotionClassNames();
  std::string out = "id,true,predicted";
  const size_t n_scores = predictions.empty() ? 0 : predictions[0].scores.size();
  for (size_t k = 0; k < n_scores; ++k)
    out += ",score_" + (k < names.size() ? names[k] : std::to_string(k));
  out += "\n";
  for (const auto &p : predictions) {
    auto name = [&](int c) {
      return c < static_cast<int>(names.size()) ? names[c] : std::to_string(c);
    };
    out += p.id + "," + name(p.truth) + "," + name(p.predicted);
    for (double s : p.scores) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), ",%.6f", s);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

EvalOutput EvaluateModel(Model<float> &model, const Dataset &data, bool restrict_classes,
                         int batch_size) {
  const int n_classes = model.config().n_classes;
  if (data.bands != model.config().n_bands)
    throw Error(ErrorCode::kShapeMismatch, "test features have " + std::to_string(data.bands) +
                                               " bands, model expects " +
                                               std::to_string(model.config().n_bands));
  std::set<int> present;
  for (const auto &e : data.examples) {
    if (e.label < 0 || e.label >= n_classes)
      throw Error(ErrorCode::kClassSetMismatch,
                  "test label " + std::to_string(e.label) + " outside the model's classes");
    present.insert(e.label);
  }
  EvalOutput out;
  out.restricted = restrict_classes;
  if (restrict_classes) {
    out.allowed_classes.assign(present.begin(), present.end());
  } else {
    out.allowed_classes.resize(n_classes);
    std::iota(out.allowed_classes.begin(), out.allowed_classes.end(), 0);
  }
  const auto names = EmotionClassNames();
  std::vector<std::string> cm_classes;
  for (int c : out.allowed_classes)
    cm_classes.push_back(c < static_cast<int>(names.size()) ? names[c] : std::to_string(c));
  out.cm = ConfusionMatrix(cm_classes);
  auto position = [&](int c) {
    return static_cast<int>(std::find(out.allowed_classes.begin(), out.allowed_classes.end(), c) -
                            out.allowed_classes.begin());
  };

  std::vector<size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<float> feats;
  std::vector<int> labels;
  for (size_t begin = 0; begin < data.size(); begin += batch_size) {
    const size_t end = std::min(data.size(), begin + static_cast<size_t>(batch_size));
    data.Gather(order, begin, end, &feats, &labels);
    auto logits = model.Forward(feats, static_cast<int>(end - begin), data.frames, false);
    for (size_t i = 0; i < end - begin; ++i) {
      const float *z = logits->value.data() + i * n_classes;
      Prediction p;
      p.id = data.examples[begin + i].id;
      p.truth = labels[i];
      const double peak = *std::max_element(z, z + n_classes);
      double sum = 0.0;
      for (int k = 0; k < n_classes; ++k) sum += std::exp(z[k] - peak);
      for (int k = 0; k < n_classes; ++k) p.scores.push_back(std::exp(z[k] - peak) / sum);
      p.predicted = out.allowed_classes[0];
      for (int c : out.allowed_classes) {
        if (z[c] > z[p.predicted]) p.predicted = c;
      }
      ++out.cm.counts[position(p.truth)][position(p.predicted)];
      out.predictions.push_back(std::move(p));
    }
  }
  if (!data.empty()) out.metrics = ComputeMetrics(out.cm, &out.warnings);
  return out;
}

}  // namespace crossemo
