// tests/unit/augment_test.cc

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

#include <cmath>
#include <set>

#include "crossemo/augment/augment.h"
#include "crossemo/base/error.h"
#include "doctest.h"
#include "fixtures.h"
#include "test_util.h"

namespace crossemo {
namespace {

using testing::LabelledCorpus;

TEST_CASE("DrawFactor is deterministic, uniform and bounded") {
  const FactorRange range{0.6, 1.5};
  CHECK(DrawFactor(9, "u1", 0, range) == DrawFactor(9, "u1", 0, range));
  CHECK(DrawFactor(9, "u1", 0, range) != DrawFactor(10, "u1", 0, range));

  double sum = 0.0, lo = 10.0, hi = -10.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double f = DrawFactor(3, "utt" + std::to_string(i), i % 7, range);
    sum += f;
    lo = std::min(lo, f);
    hi = std::max(hi, f);
  }
  CHECK(std::abs(sum / n - 1.05) < 0.01);
  CHECK(lo >= 0.6);
  CHECK(hi <= 1.5);
  // Uniform variance (0.9^2 / 12) checked by a second pass.
  double var = 0.0;
  for (int i = 0; i < n; ++i) {
    const double f = DrawFactor(3, "utt" + std::to_string(i), i % 7, range);
    var += (f - sum / n) * (f - sum / n);
  }
  CHECK(std::abs(var / n - 0.81 / 12.0) < 0.002);

  int collisions = 0;
  for (int i = 0; i < 10000; ++i) {
    const std::string id = "id" + std::to_string(i);
    collisions += DrawFactor(1, id, 0, range) == DrawFactor(1, id, 1, range);
  }
  CHECK(collisions == 0);

  CHECK_THROWS_AS(DrawFactor(1, "x", 0, {1.5, 0.6}), Error);
  try {
    DrawFactor(1, "x", 0, {1.0, 1.0});
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::kBadRange);
  }
}

TEST_CASE("recipes multiply the data by 2, 2, 5 and 8") {
  CHECK(GetRecipe("speed").multiplier() == 2);
  CHECK(GetRecipe("volume").multiplier() == 2);
  CHECK(GetRecipe("2sp-2vol").multiplier() == 5);
  CHECK(GetRecipe("7vars").multiplier() == 8);
  std::set<EffectKind> kinds;
  for (const auto &v : GetRecipe("7vars").variants) kinds.insert(v.kind);
  CHECK(kinds.size() == 6);
  try {
    GetRecipe("pitch");
    FAIL("expected UnknownRecipe");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::kUnknownRecipe);
  }
}

TEST_CASE("plan sizes on a 4290-utterance train side") {
  CorpusManifest train = LabelledCorpus("IEM", {1000, 1200, 900, 1190});
  REQUIRE(train.size() == 4290);
  const AugmentPlan two = PlanAugmentation(train, GetRecipe("2sp-2vol"), 11);
  CHECK(two.entries.size() == 17160);
  CHECK(train.size() + two.entries.size() == 21450);
  CHECK(21450 == 5 * 4290);
  const AugmentPlan seven = PlanAugmentation(train, GetRecipe("7vars"), 11);
  CHECK(seven.entries.size() == 30030);
  CHECK(train.size() + seven.entries.size() == 8 * 4290);
  CHECK(PlanAugmentation(CorpusManifest(), GetRecipe("7vars"), 1).entries.empty());

  for (const auto &e : seven.entries) {
    REQUIRE(e.effect.factor >= 0.6);
    REQUIRE(e.effect.factor <= 1.5);
  }
  CHECK(seven.entries[3].output_path == train.records()[0].id + "__7vars__v3.wav");
  CHECK(PlanAugmentation(train, GetRecipe("7vars"), 11).ToJson() == seven.ToJson());
  CHECK(PlanAugmentation(train, GetRecipe("7vars"), 12).ToJson() != seven.ToJson());
  CHECK(AugmentPlan::FromJson(seven.ToJson()).ToJson() == seven.ToJson());
}

TEST_CASE("apply_plan renders, inherits metadata and is idempotent") {
  testing::TempDir dir("augment");
  UtteranceRecord r;
  r.id = "u1";
  r.audio_path = "u1.wav";
  r.corpus = "C";
  r.speaker = "spk";
  r.session = "S1";
  r.style = Style::kElicitedImprovised;
  r.emotion = Emotion::kSad;
  UtteranceRecord missing = r;
  missing.id = "u2";
  missing.audio_path = "nope.wav";
  CorpusManifest source("C", {r, missing});
  WriteWav(testing::MakeTone(220.0, 2.0, 0.4), dir / "u1.wav");

  AugmentPlan plan;
  plan.recipe = "speed";
  plan.entries = {{"u1", 0, {EffectKind::kSpeed, 1.25}, AugmentedFileName("u1", "speed", 0)},
                  {"u2", 0, {EffectKind::kSpeed, 1.25}, AugmentedFileName("u2", "speed", 0)}};
  ApplyResult res = ApplyPlan(plan, source, dir.path(), dir / "out");
  CHECK(res.failures() == 1);
  CHECK(res.manifest.size() == 3);
  const UtteranceRecord *aug = res.manifest.Find("u1__speed__v0");
  REQUIRE(aug != nullptr);
  CHECK(aug->augmented);
  CHECK(aug->source_id == "u1");
  CHECK(aug->emotion == Emotion::kSad);
  CHECK(aug->speaker == "spk");
  CHECK(aug->session == "S1");
  CHECK(aug->style == Style::kElicitedImprovised);
  CHECK(std::abs(ReadWav(aug->audio_path).duration_seconds() - 1.6) < 1e-3);
  CHECK(res.summary[0].status == "ok");
  CHECK(res.summary[1].status.find("IoFailure") != std::string::npos);
  CHECK(res.SummaryCsv().rfind("entry,status,output_seconds\n", 0) == 0);

  const std::string first = ReadFile(dir / "out" / "u1__speed__v0.wav");
  ApplyPlan(plan, source, dir.path(), dir / "out");
  CHECK(ReadFile(dir / "out" / "u1__speed__v0.wav") == first);
}

TEST_CASE("leakage guard and train-side expansion") {
  CorpusManifest base = LabelledCorpus("P", {10, 10, 10, 10});
  FoldPlan folds = MakeFoldsProportional(base, 2, 0.2, 1);
  std::vector<UtteranceRecord> records = base.records();
  for (const auto &r : base.records()) {
    UtteranceRecord a = r;
    a.id = r.id + "__speed__v0";
    a.augmented = true;
    a.source_id = r.id;
    records.push_back(a);
  }
  CorpusManifest expanded("P", records);
  FoldPlan wide = ExpandTrainSide(folds, expanded);
  for (size_t k = 0; k < folds.folds.size(); ++k) {
    CHECK(wide.folds[k].train_ids.size() == 2 * folds.folds[k].train_ids.size());
    CHECK(wide.folds[k].test_ids == folds.folds[k].test_ids);
    for (const auto &id : wide.folds[k].test_ids) {
      CHECK(wide.folds[k].train_ids.count(id + "__speed__v0") == 0);
    }
  }
  FoldPlan leaky = folds;
  leaky.folds[0].test_ids.insert(base.records()[0].id + "__speed__v0");
  try {
    CheckNoAugmentedInTest(leaky, expanded);
    FAIL("expected TestLeakage");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::kTestLeakage);
  }
}

}  // namespace
}  // namespace crossemo
