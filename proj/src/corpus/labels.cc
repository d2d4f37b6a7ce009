// src/corpus/labels.cc

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

#include "crossemo/base/error.h"
#include "crossemo/corpus/corpus.h"

namespace crossemo {

namespace {

// Highest-scoring raw label; ties resolve to the lexicographically first.
std::optional<std::string> TopRawLabel(const UtteranceRecord &r) {
  std::optional<std::string> best;
  double best_score = 0.0;
  for (const auto &[label, score] : r.raw_labels) {
    if (!best || score > best_score) {
      best = label;
      best_score = score;
    }
  }
  return best;
}

std::optional<Emotion> CategoricalEmotion(const std::string &label) {
  static const std::map<std::string, Emotion> kAliases = {
      {"angry", Emotion::kAngry},     {"ang", Emotion::kAngry},     {"anger", Emotion::kAngry},
      {"happy", Emotion::kHappy},     {"hap", Emotion::kHappy},     {"happiness", Emotion::kHappy},
      {"excited", Emotion::kHappy},   {"exc", Emotion::kHappy},     {"sad", Emotion::kSad},
      {"sadness", Emotion::kSad},     {"neutral", Emotion::kNeutral}, {"neu", Emotion::kNeutral},
  };
  auto it = kAliases.find(label);
  if (it == kAliases.end()) return std::nullopt;
  return it->second;
}

// Raw label used for the mapping decision (falls back to an existing
// canonical label when no raw annotation is present).
std::string LabelOf(const UtteranceRecord &r) {
  if (auto top = TopRawLabel(r)) return *top;
  if (r.emotion) return std::string(EmotionName(*r.emotion));
  return "<unlabelled>";
}

LabelMapResult Finish(const CorpusManifest &source, std::vector<UtteranceRecord> kept,
                      DiscardSummary discards) {
  discards.kept = kept.size();
  return {CorpusManifest(source.name(), std::move(kept)), std::move(discards)};
}

}  // namespace

size_t DiscardSummary::total_dropped() const {
  size_t n = 0;
  for (const auto &[_, c] : dropped) n += c;
  return n;
}

std::string DiscardSummary::ToCsv() const {
  std::string out = "reason,count\n";
  for (const auto &[reason, count] : dropped) out += reason + "," + std::to_string(count) + "\n";
  out += "kept," + std::to_string(kept) + "\n";
  return out;
}

LabelMapResult MapLabelsIemocap(const CorpusManifest &manifest) {
  std::vector<UtteranceRecord> kept;
  DiscardSummary discards;
  for (const auto &r : manifest.records()) {
    const std::string label = LabelOf(r);
    auto e = CategoricalEmotion(label);
    if (!e) {
      ++discards.dropped[label];
      continue;
    }
    UtteranceRecord out = r;
    out.emotion = e;
    kept.push_back(std::move(out));
  }
  return Finish(manifest, std::move(kept), std::move(discards));
}

LabelMapResult MapLabelsMosei(const CorpusManifest &manifest) {
  static const std::vector<std::pair<std::string, std::optional<Emotion>>> kScored = {
      {"anger", Emotion::kAngry}, {"disgust", std::nullopt},     {"fear", std::nullopt},
      {"happiness", Emotion::kHappy}, {"sadness", Emotion::kSad}, {"surprise", std::nullopt},
  };
  std::vector<UtteranceRecord> kept;
  DiscardSummary discards;
  for (const auto &r : manifest.records()) {
    int positives = 0;
    std::optional<Emotion> target;
    bool non_target_positive = false;
    for (const auto &[name, emotion] : kScored) {
      auto it = r.raw_labels.find(name);
      const double score = it == r.raw_labels.end() ? 0.0 : it->second;
      if (score > 0.0) {
        ++positives;
        if (emotion) {
          target = emotion;
        } else {
          non_target_positive = true;
        }
      }
    }
    UtteranceRecord out = r;
    if (positives == 0) {
      out.emotion = Emotion::kNeutral;
    } else if (positives == 1 && target) {
      out.emotion = target;
    } else {
      ++discards.dropped[non_target_positive && positives == 1 ? "non_target_emotion"
                                                               : "equivocal"];
      continue;
    }
    kept.push_back(std::move(out));
  }
  return Finish(manifest, std::move(kept), std::move(discards));
}

LabelMapResult MapLabelsCategorical(const CorpusManifest &manifest) {
  std::vector<UtteranceRecord> kept;
  DiscardSummary discards;
  for (const auto &r : manifest.records()) {
    std::optional<Emotion> e = r.emotion;
    std::string label = e ? std::string(EmotionName(*e)) : LabelOf(r);
    if (!e) e = CategoricalEmotion(label);
    if (!e || label == "excited" || label == "exc") {
      ++discards.dropped[label];
      continue;
    }
    UtteranceRecord out = r;
    out.emotion = e;
    kept.push_back(std::move(out));
  }
  return Finish(manifest, std::move(kept), std::move(discards));
}

LabelMapResult MapLabelsUnseen(const CorpusManifest &manifest,
                               const std::set<std::string> &excluded_speakers) {
  std::vector<UtteranceRecord> kept;
  DiscardSummary discards;
  for (const auto &r : manifest.records()) {
    if (excluded_speakers.count(r.speaker)) {
      ++discards.dropped["excluded_speaker"];
      continue;
    }
    std::optional<Emotion> e = r.emotion;
    const std::string label = e ? std::string(EmotionName(*e)) : LabelOf(r);
    if (!e) e = CategoricalEmotion(label);
    if (!e || *e == Emotion::kNeutral) {
      ++discards.dropped[label];
      continue;
    }
    UtteranceRecord out = r;
    out.emotion = e;
    kept.push_back(std::move(out));
  }
  return Finish(manifest, std::move(kept), std::move(discards));
}

LabelMapResult MapLabels(const CorpusManifest &manifest, std::string_view scheme) {
  if (scheme == "iemocap") return MapLabelsIemocap(manifest);
  if (scheme == "mosei") return MapLabelsMosei(manifest);
  if (scheme == "categorical") return MapLabelsCategorical(manifest);
  if (scheme == "enterface") return MapLabelsUnseen(manifest, {"6"});
  throw Error(ErrorCode::kBadConfig,
              "unknown label map '" + std::string(scheme) +
                  "' (valid: iemocap, mosei, categorical, enterface)");
}

}  // namespace crossemo
