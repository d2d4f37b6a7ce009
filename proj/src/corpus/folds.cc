// src/corpus/folds.cc

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
#include <numeric>

#include "crossemo/base/error.h"
#include "crossemo/corpus/corpus.h"

namespace crossemo {

namespace {

// Group key for proportional sampling; unlabelled records form their own group.
std::string ClassKey(const UtteranceRecord &r) {
  return r.emotion ? std::string(EmotionName(*r.emotion)) : std::string("<unlabelled>");
}

std::map<std::string, std::vector<std::string>> IdsByClass(const CorpusManifest &m) {
  std::map<std::string, std::vector<std::string>> groups;
  for (const auto &r : m.records()) groups[ClassKey(r)].push_back(r.id);
  return groups;
}

// Largest-remainder apportionment of `total` over weights.
std::vector<size_t> Apportion(const std::vector<size_t> &weights, size_t total) {
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<size_t> alloc(weights.size(), 0);
  std::vector<std::pair<double, size_t>> remainders;
  size_t assigned = 0;
  for (size_t i = 0; i < weights.size(); ++i) {
    const double exact = sum > 0 ? total * (weights[i] / sum) : 0.0;
    alloc[i] = static_cast<size_t>(std::floor(exact));
    assigned += alloc[i];
    remainders.emplace_back(exact - std::floor(exact), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto &a, const auto &b) { return a.first > b.first; });
  for (size_t k = 0; assigned < total && k < remainders.size(); ++k) {
    ++alloc[remainders[k].second];
    ++assigned;
  }
  return alloc;
}

std::set<std::string> GroupOf(const CorpusManifest &m, const std::set<std::string> &ids,
                              bool by_session) {
  std::set<std::string> groups;
  for (const auto &id : ids) {
    const UtteranceRecord *r = m.Find(id);
    if (r == nullptr) continue;
    groups.insert(by_session ? r->session.value_or("") : r->speaker);
  }
  return groups;
}

}  // namespace

std::string_view FoldStrategyName(FoldStrategy s) {
  switch (s) {
    case FoldStrategy::kSpeakerRotation: return "speaker-rotation";
    case FoldStrategy::kSessionHoldout: return "session-holdout";
    case FoldStrategy::kProportional: return "proportional";
    case FoldStrategy::kSplit8020: return "split-80-20";
  }
  return "unknown";
}

std::vector<std::string> FoldStrategyNames() {
  return {"speaker-rotation", "session-holdout", "proportional", "split-80-20"};
}

std::optional<FoldStrategy> ParseFoldStrategy(std::string_view name) {
  for (FoldStrategy s : {FoldStrategy::kSpeakerRotation, FoldStrategy::kSessionHoldout,
                         FoldStrategy::kProportional, FoldStrategy::kSplit8020}) {
    if (FoldStrategyName(s) == name) return s;
  }
  return std::nullopt;
}

Json FoldPlan::ToJson() const {
  Json folds_json = Json::array();
  for (const auto &f : folds) {
    folds_json.push_back({{"train", std::vector<std::string>(f.train_ids.begin(), f.train_ids.end())},
                          {"test", std::vector<std::string>(f.test_ids.begin(), f.test_ids.end())}});
  }
  return Json{{"strategy", std::string(FoldStrategyName(strategy))},
              {"seed", seed},
              {"manifest", manifest_name},
              {"folds", folds_json}};
}

FoldPlan FoldPlan::FromJson(const Json &j) {
  FoldPlan p;
  const auto strategy = ParseFoldStrategy(j.value("strategy", std::string()));
  if (!strategy) throw Error(ErrorCode::kInvalidFoldPlan, "fold plan has unknown strategy");
  p.strategy = *strategy;
  p.seed = j.value("seed", uint64_t{0});
  p.manifest_name = j.value("manifest", std::string());
  if (!j.contains("folds") || !j["folds"].is_array())
    throw Error(ErrorCode::kInvalidFoldPlan, "fold plan has no folds array");
  for (const auto &f : j["folds"]) {
    Fold fold;
    for (const auto &id : f.at("train")) fold.train_ids.insert(id.get<std::string>());
    for (const auto &id : f.at("test")) fold.test_ids.insert(id.get<std::string>());
    p.folds.push_back(std::move(fold));
  }
  return p;
}

FoldPlan MakeFoldsSpeakerRotation(const CorpusManifest &manifest, int n_folds, int test_speakers) {
  const std::vector<std::string> speakers = manifest.Speakers();  // sorted
  const int n = static_cast<int>(speakers.size());
  if (n_folds < 1 || test_speakers < 1 || n <= test_speakers || n < n_folds)
    throw Error(ErrorCode::kTooFewSpeakers,
                std::to_string(n) + " speakers cannot provide " + std::to_string(n_folds) +
                    " folds with " + std::to_string(test_speakers) + " test speakers each");
  FoldPlan plan;
  plan.strategy = FoldStrategy::kSpeakerRotation;
  plan.manifest_name = manifest.name();
  for (int k = 0; k < n_folds; ++k) {
    std::set<std::string> held_out;
    for (int i = 0; i < test_speakers; ++i) held_out.insert(speakers[(k * test_speakers + i) % n]);
    Fold fold;
    for (const auto &r : manifest.records())
      (held_out.count(r.speaker) ? fold.test_ids : fold.train_ids).insert(r.id);
    plan.folds.push_back(std::move(fold));
  }
  return plan;
}

FoldPlan MakeFoldsSessionHoldout(const CorpusManifest &manifest, bool reverse) {
  for (const auto &r : manifest.records()) {
    if (!r.session) throw Error(ErrorCode::kMissingSession, "record '" + r.id + "' has no session");
  }
  std::vector<std::string> sessions = manifest.Sessions();
  if (sessions.empty()) throw Error(ErrorCode::kMissingSession, "manifest has no sessions");
  if (reverse) std::reverse(sessions.begin(), sessions.end());
  FoldPlan plan;
  plan.strategy = FoldStrategy::kSessionHoldout;
  plan.manifest_name = manifest.name();
  for (const auto &held_out : sessions) {
    Fold fold;
    for (const auto &r : manifest.records())
      (*r.session == held_out ? fold.test_ids : fold.train_ids).insert(r.id);
    plan.folds.push_back(std::move(fold));
  }
  return plan;
}

FoldPlan MakeFoldsProportional(const CorpusManifest &manifest, int n_folds, double test_fraction,
                               uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw Error(ErrorCode::kBadConfig, "test_fraction must lie in (0, 1)");
  if (n_folds < 1) throw Error(ErrorCode::kBadConfig, "n_folds must be >= 1");
  if (manifest.empty()) throw Error(ErrorCode::kClassTooSmall, "manifest has no utterances");
  const auto groups = IdsByClass(manifest);

  FoldPlan plan;
  plan.strategy = FoldStrategy::kProportional;
  plan.seed = seed;
  plan.manifest_name = manifest.name();
  for (int k = 0; k < n_folds; ++k) {
    Rng rng(seed ^ Mix64(static_cast<uint64_t>(k) + 1));
    Fold fold;
    for (const auto &[label, ids] : groups) {
      const auto n_test = static_cast<size_t>(std::llround(ids.size() * test_fraction));
      if (n_test == 0 || n_test == ids.size())
        throw Error(ErrorCode::kClassTooSmall,
                    "class '" + label + "' with " + std::to_string(ids.size()) +
                        " utterances cannot be split at fraction " + std::to_string(test_fraction));
      std::vector<std::string> order = ids;
      rng.Shuffle(&order);
      for (size_t i = 0; i < order.size(); ++i)
        (i < n_test ? fold.test_ids : fold.train_ids).insert(order[i]);
    }
    plan.folds.push_back(std::move(fold));
  }
  return plan;
}

FoldPlan MakeSplit8020(const CorpusManifest &manifest, uint64_t seed) {
  FoldPlan plan = MakeFoldsProportional(manifest, 1, 0.2, seed);
  plan.strategy = FoldStrategy::kSplit8020;
  return plan;
}

void ValidateFoldPlan(const FoldPlan &plan, const CorpusManifest &manifest) {
  auto fail = [](size_t k, const std::string &what) {
    throw Error(ErrorCode::kInvalidFoldPlan, "fold " + std::to_string(k) + ": " + what);
  };
  if (plan.folds.empty()) throw Error(ErrorCode::kInvalidFoldPlan, "plan has no folds");
  for (size_t k = 0; k < plan.folds.size(); ++k) {
    const Fold &f = plan.folds[k];
    for (const auto *ids : {&f.train_ids, &f.test_ids}) {
      for (const auto &id : *ids) {
        if (manifest.Find(id) == nullptr) fail(k, "unknown id '" + id + "'");
      }
    }
    for (const auto &id : f.test_ids) {
      if (f.train_ids.count(id)) fail(k, "id '" + id + "' in both train and test");
    }
    if (plan.strategy == FoldStrategy::kSpeakerRotation ||
        plan.strategy == FoldStrategy::kSessionHoldout) {
      const bool by_session = plan.strategy == FoldStrategy::kSessionHoldout;
      const auto train_groups = GroupOf(manifest, f.train_ids, by_session);
      for (const auto &g : GroupOf(manifest, f.test_ids, by_session)) {
        if (train_groups.count(g))
          fail(k, std::string(by_session ? "session '" : "speaker '") + g +
                      "' on both sides of the split");
      }
    }
  }
}

CorpusManifest SubsampleBalanced(const std::vector<CorpusManifest> &manifests,
                                 const std::map<std::string, size_t> &per_corpus_counts,
                                 uint64_t seed, std::string name) {
  std::vector<UtteranceRecord> merged;
  for (const auto &[corpus_name, want] : per_corpus_counts) {
    auto it = std::find_if(manifests.begin(), manifests.end(),
                           [&](const CorpusManifest &m) { return m.name() == corpus_name; });
    if (it == manifests.end())
      throw Error(ErrorCode::kNotEnoughUtterances, "no manifest named '" + corpus_name + "'");
    if (want > it->size())
      throw Error(ErrorCode::kNotEnoughUtterances,
                  "requested " + std::to_string(want) + " from '" + corpus_name + "' which has " +
                      std::to_string(it->size()));
    const auto groups = IdsByClass(*it);
    std::vector<size_t> sizes;
    for (const auto &[_, ids] : groups) sizes.push_back(ids.size());
    const auto alloc = Apportion(sizes, want);

    Rng rng(seed ^ Fnv1a64(corpus_name));
    std::set<std::string> chosen;
    size_t g = 0;
    for (const auto &[_, ids] : groups) {
      std::vector<std::string> order = ids;
      rng.Shuffle(&order);
      chosen.insert(order.begin(), order.begin() + static_cast<long>(alloc[g++]));
    }
    for (const auto &r : it->records()) {
      if (!chosen.count(r.id)) continue;
      UtteranceRecord copy = r;
      copy.id = corpus_name + "/" + r.id;
      merged.push_back(std::move(copy));
    }
  }
  return CorpusManifest(std::move(name), std::move(merged));
}

CorpusManifest FilterStyle(const CorpusManifest &manifest, Style style) {
  std::vector<UtteranceRecord> out;
  for (const auto &r : manifest.records()) {
    if (r.style == style) out.push_back(r);
  }
  return CorpusManifest(manifest.name(), std::move(out));
}

}  // namespace crossemo
