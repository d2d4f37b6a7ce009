// include/crossemo/augment/augment.h

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

#ifndef CROSSEMO_AUGMENT_AUGMENT_H_
#define CROSSEMO_AUGMENT_AUGMENT_H_

#include <filesystem>
#include <string>
#include <vector>

#include "crossemo/audio/audio.h"
#include "crossemo/base/util.h"
#include "crossemo/corpus/corpus.h"

namespace crossemo {

struct FactorRange {
  double lo = 0.6;
  double hi = 1.5;
};

struct VariantTemplate {
  EffectKind kind;
  FactorRange range;
};

struct AugmentRecipe {
  std::string name;
  std::vector<VariantTemplate> variants;

  /// Size of original plus augmented data relative to the original.
  size_t multiplier() const { return variants.size() + 1; }
};

/// Known recipes: speed, volume, 2sp-2vol, 7vars. Throws UnknownRecipe.
AugmentRecipe GetRecipe(const std::string &name);
std::vector<std::string> RecipeNames();

/// Uniform factor in [range.lo, range.hi] derived from a 64-bit hash of all
/// four inputs. Throws BadRange unless lo < hi.
double DrawFactor(uint64_t base_seed, const std::string &utterance_id, int variant_index,
                  FactorRange range);

struct AugmentEntry {
  std::string source_id;
  int variant = 0;
  EffectSpec effect;
  std::string output_path;  // relative to the render directory

  std::string augmented_id(const std::string &recipe) const;
};

struct AugmentPlan {
  std::string recipe;
  uint64_t base_seed = 0;
  std::vector<AugmentEntry> entries;

  Json ToJson() const;
  static AugmentPlan FromJson(const Json &j);
};

std::string AugmentedFileName(const std::string &id, const std::string &recipe, int variant);

AugmentPlan PlanAugmentation(const CorpusManifest &manifest, const AugmentRecipe &recipe,
                             uint64_t base_seed);

struct RenderStatus {
  std::string entry;  // augmented id
  std::string status;  // "ok" or the error message
  double output_seconds = 0.0;
};

struct ApplyResult {
  CorpusManifest manifest;  // originals followed by rendered copies
  std::vector<RenderStatus> summary;

  size_t failures() const;
  std::string SummaryCsv() const;
};

/// Renders every entry into `out_dir`. Relative source paths resolve
/// against `audio_root`. A failing entry is recorded in the summary and
/// left out of the manifest; the remaining entries still render.
ApplyResult ApplyPlan(const AugmentPlan &plan, const CorpusManifest &source,
                      const std::filesystem::path &audio_root,
                      const std::filesystem::path &out_dir);

/// Throws TestLeakage if any test id of any fold names an augmented record
/// or a record that is not an original utterance.
void CheckNoAugmentedInTest(const FoldPlan &plan, const CorpusManifest &manifest);

/// Adds to each fold's train side the augmented copies of its train
/// utterances. Copies of test utterances are never added.
FoldPlan ExpandTrainSide(const FoldPlan &plan, const CorpusManifest &augmented_manifest);

}  // namespace crossemo

#endif  // CROSSEMO_AUGMENT_AUGMENT_H_
