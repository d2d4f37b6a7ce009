// include/crossemo/corpus/corpus.h

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

#ifndef CROSSEMO_CORPUS_CORPUS_H_
#define CROSSEMO_CORPUS_CORPUS_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "crossemo/base/util.h"

namespace crossemo {

/// Canonical emotion classes, in label-index order.
enum class Emotion { kAngry = 0, kHappy = 1, kSad = 2, kNeutral = 3 };
inline constexpr int kNumEmotions = 4;

std::string_view EmotionName(Emotion e);
std::optional<Emotion> ParseEmotion(std::string_view name);

enum class Style { kActed, kElicitedScripted, kElicitedImprovised, kNatural };

std::string_view StyleName(Style s);
std::optional<Style> ParseStyle(std::string_view name);

struct UtteranceRecord {
  std::string id;
  std::string audio_path;
  std::string corpus;
  std::string speaker;
  std::optional<std::string> session;
  Style style = Style::kActed;
  std::map<std::string, double> raw_labels;
  std::optional<Emotion> emotion;
  bool augmented = false;
  /// Id of the original utterance an augmented record was rendered from.
  std::optional<std::string> source_id;

  Json ToJson() const;
  static UtteranceRecord FromJson(const Json &j);
};

inline constexpr int kManifestSchemaVersion = 1;

class CorpusManifest {
 public:
  CorpusManifest() = default;
  CorpusManifest(std::string name, std::vector<UtteranceRecord> records);

  const std::string &name() const { return name_; }
  const std::vector<UtteranceRecord> &records() const { return records_; }
  size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  /// Derived from records; only labelled records are counted.
  std::map<Emotion, size_t> class_counts() const;
  const UtteranceRecord *Find(const std::string &id) const;
  std::set<std::string> Ids() const;
  std::vector<std::string> Speakers() const;
  std::vector<std::string> Sessions() const;

  /// Records with the given ids, in manifest order.
  CorpusManifest Subset(const std::set<std::string> &ids, std::string name = "") const;

  /// JSON-lines text: a header line {"schema_version", "name"} followed by
  /// one record per line.
  std::string ToJsonLines() const;
  static CorpusManifest FromJsonLines(std::string_view text, std::string default_name = "");

 private:
  std::string name_;
  std::vector<UtteranceRecord> records_;
  std::map<std::string, size_t> index_;
};

CorpusManifest LoadManifest(const std::filesystem::path &path);
void SaveManifest(const CorpusManifest &manifest, const std::filesystem::path &path);

/// Concatenates manifests; ids must stay unique.
CorpusManifest MergeManifests(const std::vector<CorpusManifest> &parts, std::string name);

// ---------------------------------------------------------------------------
// Label mapping

struct DiscardSummary {
  /// raw label (or reason) -> dropped record count
  std::map<std::string, size_t> dropped;
  size_t kept = 0;

  size_t total_dropped() const;
  std::string ToCsv() const;
};

struct LabelMapResult {
  CorpusManifest manifest;
  DiscardSummary discards;
};

/// Single categorical annotation per record (the raw label with the highest
/// score). "excited" merges into happy; anything outside
/// {angry, happy, excited, sad, neutral} is dropped.
LabelMapResult MapLabelsIemocap(const CorpusManifest &manifest);

/// Six scored emotions (anger, disgust, fear, happiness, sadness, surprise).
/// All zero -> neutral; exactly one of anger/happiness/sadness positive with
/// every other score zero -> that class; everything else is equivocal and
/// dropped.
LabelMapResult MapLabelsMosei(const CorpusManifest &manifest);

/// Records already carrying a canonical 4-class label (or a single
/// categorical raw label naming one) pass through; others are dropped.
LabelMapResult MapLabelsCategorical(const CorpusManifest &manifest);

/// Unseen-corpus protocol: excludes the listed speakers and keeps only
/// angry/happy/sad.
LabelMapResult MapLabelsUnseen(const CorpusManifest &manifest,
                               const std::set<std::string> &excluded_speakers);

LabelMapResult MapLabels(const CorpusManifest &manifest, std::string_view scheme);

// ---------------------------------------------------------------------------
// Folds

enum class FoldStrategy { kSpeakerRotation, kSessionHoldout, kProportional, kSplit8020 };

std::string_view FoldStrategyName(FoldStrategy s);
std::optional<FoldStrategy> ParseFoldStrategy(std::string_view name);
std::vector<std::string> FoldStrategyNames();

struct Fold {
  std::set<std::string> train_ids;
  std::set<std::string> test_ids;
};

struct FoldPlan {
  FoldStrategy strategy = FoldStrategy::kProportional;
  uint64_t seed = 0;
  std::string manifest_name;
  std::vector<Fold> folds;

  Json ToJson() const;
  static FoldPlan FromJson(const Json &j);
};

/// Sorted speaker ids, fold k tests speakers [k * test_speakers, ...)
/// (mod speaker count), remaining speakers train.
FoldPlan MakeFoldsSpeakerRotation(const CorpusManifest &manifest, int n_folds = 5,
                                  int test_speakers = 5);

/// One fold per distinct session in lexicographic order; fold k tests
/// session k. With `reverse`, fold 0 tests the last session instead.
FoldPlan MakeFoldsSessionHoldout(const CorpusManifest &manifest, bool reverse = false);

/// Per fold and per class, round(count * test_fraction) records drawn
/// without replacement into test. Folds are independent seeded draws.
FoldPlan MakeFoldsProportional(const CorpusManifest &manifest, int n_folds,
                               double test_fraction, uint64_t seed);

FoldPlan MakeSplit8020(const CorpusManifest &manifest, uint64_t seed);

/// Re-validates a plan against its manifest: ids exist, train/test are
/// disjoint, and for speaker/session strategies the groups are disjoint.
/// Throws InvalidFoldPlan.
void ValidateFoldPlan(const FoldPlan &plan, const CorpusManifest &manifest);

// ---------------------------------------------------------------------------
// Subsetting

/// Draws exactly per_corpus_counts[name] records from each manifest,
/// class-proportionally (largest-remainder apportionment), seeded. Ids are
/// prefixed with "<corpus>/" in the merged result.
CorpusManifest SubsampleBalanced(const std::vector<CorpusManifest> &manifests,
                                 const std::map<std::string, size_t> &per_corpus_counts,
                                 uint64_t seed, std::string name = "balanced");

CorpusManifest FilterStyle(const CorpusManifest &manifest, Style style);

}  // namespace crossemo

#endif  // CROSSEMO_CORPUS_CORPUS_H_
