// src/augment/augment.cc

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

#include "crossemo/augment/augment.h"

#include <cmath>
#include <cstring>

#include "crossemo/base/error.h"

namespace crossemo {

namespace {

uint64_t DoubleBits(double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  return bits;
}

}  // namespace

AugmentRecipe GetRecipe(const std::string &name) {
  const FactorRange r;
  if (name == "speed") return {name, {{EffectKind::kSpeed, r}}};
  if (name == "volume") return {name, {{EffectKind::kVolume, r}}};
  if (name == "2sp-2vol")
    return {name,
            {{EffectKind::kSpeed, r}, {EffectKind::kSpeed, r},
             {EffectKind::kVolume, r}, {EffectKind::kVolume, r}}};
  if (name == "7vars")
    return {name,
            {{EffectKind::kSpeed, r}, {EffectKind::kVolume, r}, {EffectKind::kTempo, r},
             {EffectKind::kBass, r}, {EffectKind::kTreble, r}, {EffectKind::kOverdrive, r},
             {EffectKind::kSpeed, r}}};
  throw Error(ErrorCode::kUnknownRecipe,
              "unknown recipe '" + name + "' (valid: speed, volume, 2sp-2vol, 7vars)");
}

std::vector<std::string> RecipeNames() { return {"speed", "volume", "2sp-2vol", "7vars"}; }

double DrawFactor(uint64_t base_seed, const std::string &utterance_id, int variant_index,
                  FactorRange range) {
  if (!(range.lo < range.hi) || !std::isfinite(range.lo) || !std::isfinite(range.hi))
    throw Error(ErrorCode::kBadRange, "factor range [" + std::to_string(range.lo) + ", " +
                                          std::to_string(range.hi) + "] is empty");
  uint64_t h = Mix64(base_seed);
  h = Mix64(h ^ Fnv1a64(utterance_id));
  h = Mix64(h ^ static_cast<uint64_t>(variant_index));
  h = Mix64(h ^ DoubleBits(range.lo));
  h = Mix64(h ^ DoubleBits(range.hi));
  // 53 random bits onto [0, 1]; both ends reachable.
  const double u = static_cast<double>(h >> 11) / static_cast<double>((1ULL << 53) - 1);
  return range.lo + (range.hi - range.lo) * u;
}

std::string AugmentedFileName(const std::string &id, const std::string &recipe, int variant) {
  std::string safe = id;
  for (char &c : safe) {
    if (c == '/' || c == '\\') c = '_';
  }
  return safe + "__" + recipe + "__v" + std::to_string(variant) + ".wav";
}

std::string AugmentEntry::augmented_id(const std::string &recipe) const {
  return source_id + "__" + recipe + "__v" + std::to_string(variant);
}

Json AugmentPlan::ToJson() const {
  Json entries_json = Json::array();
  for (const auto &e : entries) {
    entries_json.push_back({{"source_id", e.source_id},
                            {"variant", e.variant},
                            {"effect", std::string(EffectKindName(e.effect.kind))},
                            {"factor", e.effect.factor},
                            {"output_path", e.output_path}});
  }
  return Json{{"recipe", recipe}, {"base_seed", base_seed}, {"entries", entries_json}};
}

AugmentPlan AugmentPlan::FromJson(const Json &j) {
  AugmentPlan p;
  p.recipe = j.at("recipe").get<std::string>();
  p.base_seed = j.at("base_seed").get<uint64_t>();
  for (const auto &e : j.at("entries")) {
    AugmentEntry entry;
    entry.source_id = e.at("source_id").get<std::string>();
    entry.variant = e.at("variant").get<int>();
    const auto kind = ParseEffectKind(e.at("effect").get<std::string>());
    if (!kind) throw Error(ErrorCode::kUnknownRecipe, "plan names an unknown effect");
    entry.effect = {*kind, e.at("factor").get<double>()};
    entry.output_path = e.at("output_path").get<std::string>();
    p.entries.push_back(std::move(entry));
  }
  return p;
}

AugmentPlan PlanAugmentation(const CorpusManifest &manifest, const AugmentRecipe &recipe,
                             uint64_t base_seed) {
  AugmentPlan plan;
  plan.recipe = recipe.name;
  plan.base_seed = base_seed;
  plan.entries.reserve(manifest.size() * recipe.variants.size());
  for (const auto &r : manifest.records()) {
    for (size_t k = 0; k < recipe.variants.size(); ++k) {
      const auto &v = recipe.variants[k];
      AugmentEntry e;
      e.source_id = r.id;
      e.variant = static_cast<int>(k);
      e.effect = {v.kind, DrawFactor(base_seed, r.id, e.variant, v.range)};
      e.output_path = AugmentedFileName(r.id, recipe.name, e.variant);
      plan.entries.push_back(std::move(e));
    }
  }
  return plan;
}

size_t ApplyResult::failures() const {
  size_t n = 0;
  for (const auto &s : summary) n += s.status != "ok";
  return n;
}

std::string ApplyResult::SummaryCsv() const {
  std::string out = "entry,status,output_seconds\n";
  for (const auto &s : summary) {
    std::string status = s.status;
    for (char &c : status) {
      if (c == ',' || c == '\n') c = ';';
    }
    out += s.entry + "," + status + "," + std::to_string(s.output_seconds) + "\n";
  }
  return out;
}

ApplyResult ApplyPlan(const AugmentPlan &plan, const CorpusManifest &source,
                      const std::filesystem::path &audio_root,
                      const std::filesystem::path &out_dir) {
  std::vector<UtteranceRecord> records = source.records();
  std::vector<RenderStatus> summary;
  std::filesystem::create_directories(out_dir);
  for (const auto &e : plan.entries) {
    RenderStatus status{e.augmented_id(plan.recipe), "ok", 0.0};
    try {
      const UtteranceRecord *src = source.Find(e.source_id);
      if (src == nullptr)
        throw Error(ErrorCode::kIoFailure, "source '" + e.source_id + "' not in manifest");
      std::filesystem::path in = src->audio_path;
      if (in.is_relative()) in = audio_root / in;
      const AudioBuffer out = ApplyEffect(ReadWav(in), e.effect);
      const std::filesystem::path out_path = out_dir / e.output_path;
      WriteFileAtomic(out_path, EncodeWav(out));
      status.output_seconds = out.duration_seconds();

      UtteranceRecord aug = *src;
      aug.id = status.entry;
      aug.audio_path = std::filesystem::absolute(out_path).lexically_normal().string();
      aug.augmented = true;
      aug.source_id = src->id;
      records.push_back(std::move(aug));
    } catch (const std::exception &ex) {
      status.status = ex.what();
    }
    summary.push_back(std::move(status));
  }
  return {CorpusManifest(source.name(), std::move(records)), std::move(summary)};
}

void CheckNoAugmentedInTest(const FoldPlan &plan, const CorpusManifest &manifest) {
  for (size_t k = 0; k < plan.folds.size(); ++k) {
    for (const auto &id : plan.folds[k].test_ids) {
      const UtteranceRecord *r = manifest.Find(id);
      if (r != nullptr && (r->augmented || r->source_id))
        throw Error(ErrorCode::kTestLeakage, "fold " + std::to_string(k) +
                                                 " tests on augmented utterance '" + id + "'");
    }
  }
}

FoldPlan ExpandTrainSide(const FoldPlan &plan, const CorpusManifest &augmented_manifest) {
  std::map<std::string, std::vector<std::string>> copies;
  for (const auto &r : augmented_manifest.records()) {
    if (r.augmented && r.source_id) copies[*r.source_id].push_back(r.id);
  }
  FoldPlan out = plan;
  for (auto &fold : out.folds) {
    std::set<std::string> added;
    for (const auto &id : fold.train_ids) {
      if (fold.test_ids.count(id)) continue;
      auto it = copies.find(id);
      if (it != copies.end()) added.insert(it->second.begin(), it->second.end());
    }
    fold.train_ids.insert(added.begin(), added.end());
  }
  CheckNoAugmentedInTest(out, augmented_manifest);
  return out;
}

}  // namespace crossemo
