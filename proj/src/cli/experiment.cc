// src/cli/experiment.cc

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

#include "crossemo/cli/experiment.h"

#include <glob.h>

#include <algorithm>
#include <cstdlib>
#include <map>
#include <set>

#include "crossemo/augment/augment.h"
#include "crossemo/base/error.h"
#include "crossemo/train/dataset.h"

namespace crossemo {
namespace fs = std::filesystem;

namespace {

[[noreturn]] void Bad(const std::string &field, const std::string &what) {
  throw Error(ErrorCode::kBadConfig, "experiment config field '" + field + "' " + what);
}

void RejectUnknown(const Json &j, const std::set<std::string> &known, const std::string &prefix) {
  if (!j.is_object()) Bad(prefix.empty() ? "<root>" : prefix, "must be an object");
  for (const auto &[key, _] : j.items()) {
    if (!known.count(key)) Bad(prefix.empty() ? key : prefix + "." + key, "is not a known field");
  }
}

template <typename T>
T Get(const Json &j, const std::string &key, const std::string &field, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception &) {
    Bad(field, "has the wrong type");
  }
}

fs::path AbsolutePath(const fs::path &p) { return fs::absolute(p).lexically_normal(); }

bool ValidTag(const std::string &tag) {
  if (tag.empty()) return false;
  return std::all_of(tag.begin(), tag.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.' || c == '+';
  });
}

ModelConfig ModelFromJson(const Json &j) {
  if (!j.is_object()) Bad("model", "must be an object");
  const std::string arch_name = j.value("arch", std::string("cnnrnnatt"));
  Arch arch = Arch::kCnnRnnAtt;
  if (arch_name == "blstmattsim") arch = Arch::kBlstmAttSim;
  else if (arch_name != "cnnrnnatt") Bad("model.arch", "must be cnnrnnatt or blstmattsim");
  ModelConfig base = ModelConfig::PaperDefault(arch);
  if (j.contains("profile")) {
    const std::string profile = Get<std::string>(j, "profile", "model.profile", "");
    if (profile == "desk-scale") base = ModelConfig::DeskScale(arch);
    else if (profile != "paper-default") Bad("model.profile", "must be paper-default or desk-scale");
  }
  Json merged = base.ToJson();
  Json patch = j;
  patch.erase("profile");
  merged.merge_patch(patch);
  return ModelConfig::FromJson(merged);
}

FbankConfig FbankFromJson(const Json &j) {
  RejectUnknown(j, {"window_ms", "shift_ms", "n_bands", "max_seconds", "sample_rate", "fft_size",
                    "log_floor", "per_band_norm", "window", "spectrum", "mel_scale", "log"},
                "fbank");
  // Descriptive keys written by ToJson; fixed by the implementation.
  const Json fixed = FbankConfig{}.ToJson();
  for (const char *key : {"window", "spectrum", "mel_scale", "log"}) {
    if (j.contains(key) && j[key] != fixed[key])
      Bad(std::string("fbank.") + key, "can only be " + fixed[key].dump());
  }
  try {
    return FbankConfig::FromJson(j);
  } catch (const Json::exception &e) {
    Bad("fbank", std::string("has a mistyped field: ") + e.what());
  }
}

}  // namespace

fs::path DefaultOutputRoot() {
  const char *env = std::getenv(kOutputRootEnv);
  if (env != nullptr && *env != '\0') return fs::path(env);
  return fs::path("crossemo_out");
}

Json CorpusSource::ToJson() const {
  Json j{{"manifest", manifest.string()}, {"label_map", label_map}};
  if (audio_root) j["audio_root"] = audio_root->string();
  if (!tag.empty()) j["tag"] = tag;
  return j;
}

CorpusSource CorpusSource::FromJson(const Json &j, const std::string &field) {
  CorpusSource s;
  if (j.is_string()) {
    s.manifest = AbsolutePath(j.get<std::string>());
    return s;
  }
  RejectUnknown(j, {"manifest", "label_map", "audio_root", "tag"}, field);
  if (!j.contains("manifest")) Bad(field + ".manifest", "is required");
  s.manifest = AbsolutePath(Get<std::string>(j, "manifest", field + ".manifest", ""));
  s.label_map = Get<std::string>(j, "label_map", field + ".label_map", s.label_map);
  if (j.contains("audio_root"))
    s.audio_root = AbsolutePath(Get<std::string>(j, "audio_root", field + ".audio_root", ""));
  s.tag = Get<std::string>(j, "tag", field + ".tag", "");
  return s;
}

LabelMapResult LoadCorpusSource(const CorpusSource &source) {
  CorpusManifest manifest = LoadManifest(source.manifest);
  LabelMapResult mapped;
  if (source.label_map == "none") {
    mapped.manifest = manifest;
    mapped.discards.kept = manifest.size();
  } else {
    mapped = MapLabels(manifest, source.label_map);
  }
  const fs::path root = source.audio_root ? *source.audio_root : source.manifest.parent_path();
  std::vector<UtteranceRecord> records = mapped.manifest.records();
  for (auto &r : records) {
    const fs::path p = r.audio_path;
    if (p.is_relative()) r.audio_path = AbsolutePath(root / p).string();
  }
  mapped.manifest = CorpusManifest(mapped.manifest.name(), std::move(records));
  return mapped;
}

Json FoldSelection::ToJson() const {
  Json j{{"strategy", strategy},           {"seed", seed},
         {"fold", fold},                   {"n_folds", n_folds},
         {"test_speakers", test_speakers}, {"test_fraction", test_fraction},
         {"reverse", reverse},             {"per_corpus", per_corpus}};
  if (plan) j["plan"] = plan->string();
  if (!test_tag.empty()) j["test_tag"] = test_tag;
  return j;
}

FoldSelection FoldSelection::FromJson(const Json &j) {
  RejectUnknown(j, {"plan", "strategy", "seed", "fold", "n_folds", "test_speakers", "test_fraction",
                    "reverse", "per_corpus", "test_tag"},
                "folds");
  FoldSelection f;
  if (j.contains("plan")) f.plan = AbsolutePath(Get<std::string>(j, "plan", "folds.plan", ""));
  f.strategy = Get<std::string>(j, "strategy", "folds.strategy", f.strategy);
  f.seed = Get<uint64_t>(j, "seed", "folds.seed", f.seed);
  f.fold = Get<int>(j, "fold", "folds.fold", f.fold);
  f.n_folds = Get<int>(j, "n_folds", "folds.n_folds", f.n_folds);
  f.test_speakers = Get<int>(j, "test_speakers", "folds.test_speakers", f.test_speakers);
  f.test_fraction = Get<double>(j, "test_fraction", "folds.test_fraction", f.test_fraction);
  f.reverse = Get<bool>(j, "reverse", "folds.reverse", f.reverse);
  f.per_corpus = Get<bool>(j, "per_corpus", "folds.per_corpus", f.per_corpus);
  f.test_tag = Get<std::string>(j, "test_tag", "folds.test_tag", "");
  return f;
}

FoldPlan MakeFoldPlan(const CorpusManifest &manifest, const std::string &strategy, uint64_t seed,
                      const FoldOptions &options) {
  const auto parsed = ParseFoldStrategy(strategy);
  if (!parsed) {
    std::string valid;
    for (const auto &n : FoldStrategyNames()) valid += (valid.empty() ? "" : ", ") + n;
    throw Error(ErrorCode::kInvalidFoldPlan,
                "unknown fold strategy '" + strategy + "' (valid: " + valid + ")");
  }
  switch (*parsed) {
    case FoldStrategy::kSpeakerRotation:
      return MakeFoldsSpeakerRotation(manifest, options.n_folds, options.test_speakers);
    case FoldStrategy::kSessionHoldout:
      return MakeFoldsSessionHoldout(manifest, options.reverse);
    case FoldStrategy::kProportional:
      return MakeFoldsProportional(manifest, options.n_folds, options.test_fraction, seed);
    case FoldStrategy::kSplit8020:
      return MakeSplit8020(manifest, seed);
  }
  throw Error(ErrorCode::kInvalidFoldPlan, "unhandled fold strategy");
}

void ExperimentConfig::Validate() const {
  if (!ValidTag(tag)) Bad("tag", "must be non-empty and use only letters, digits, - _ . +");
  if (corpora.empty()) Bad("corpora", "must list at least one manifest");
  if (selection != "best-validation" && selection != "last-epoch")
    Bad("selection", "must be best-validation or last-epoch");
  if (model.n_bands != fbank.n_bands) Bad("model.n_bands", "must equal fbank.n_bands");
  if (folds) {
    if (!folds->plan && !ParseFoldStrategy(folds->strategy)) {
      std::string valid;
      for (const auto &n : FoldStrategyNames()) valid += (valid.empty() ? "" : ", ") + n;
      Bad("folds.strategy", "must be one of " + valid);
    }
    if (folds->fold < 0) Bad("folds.fold", "must be >= 0");
    if (folds->plan && folds->per_corpus) Bad("folds.per_corpus", "cannot be combined with folds.plan");
    if (!folds->test_tag.empty() && !ValidTag(folds->test_tag))
      Bad("folds.test_tag", "must use only letters, digits, - _ . +");
  }
  if (augment) {
    const auto names = RecipeNames();
    if (std::find(names.begin(), names.end(), augment->recipe) == names.end())
      Bad("augment.recipe", "is not a known recipe");
  }
  std::set<std::string> tags;
  if (folds) tags.insert(folds->test_tag.empty() ? tag : folds->test_tag);
  for (size_t i = 0; i < eval.size(); ++i) {
    const std::string field = "eval[" + std::to_string(i) + "].tag";
    if (eval[i].tag.empty()) Bad(field, "is required");
    if (!ValidTag(eval[i].tag)) Bad(field, "must use only letters, digits, - _ . +");
    if (!tags.insert(eval[i].tag).second) Bad(field, "repeats test tag '" + eval[i].tag + "'");
  }
  fbank.Validate();
  model.Validate();
  train.Validate();
}

Json ExperimentConfig::ToJson() const {
  Json j;
  j["tag"] = tag;
  j["corpora"] = Json::array();
  for (const auto &c : corpora) j["corpora"].push_back(c.ToJson());
  if (folds) j["folds"] = folds->ToJson();
  if (augment) j["augment"] = {{"recipe", augment->recipe}, {"seed", augment->seed}};
  j["fbank"] = fbank.ToJson();
  j["model"] = model.ToJson();
  j["train"] = train.ToJson();
  j["eval"] = Json::array();
  for (const auto &e : eval) j["eval"].push_back(e.ToJson());
  j["selection"] = selection;
  j["restrict_classes"] = restrict_classes;
  j["output_dir"] = output_dir.string();
  if (feature_cache) j["feature_cache"] = feature_cache->string();
  return j;
}

ExperimentConfig ExperimentConfig::FromJson(const Json &j) {
  RejectUnknown(j, {"tag", "corpora", "folds", "augment", "fbank", "model", "train", "eval",
                    "selection", "restrict_classes", "output_dir", "feature_cache"},
                "");
  ExperimentConfig c;
  c.tag = Get<std::string>(j, "tag", "tag", c.tag);
  if (j.contains("corpora")) {
    if (!j["corpora"].is_array()) Bad("corpora", "must be an array");
    for (size_t i = 0; i < j["corpora"].size(); ++i)
      c.corpora.push_back(CorpusSource::FromJson(j["corpora"][i], "corpora[" + std::to_string(i) + "]"));
  }
  if (j.contains("folds") && !j["folds"].is_null()) c.folds = FoldSelection::FromJson(j["folds"]);
  if (j.contains("augment") && !j["augment"].is_null()) {
    RejectUnknown(j["augment"], {"recipe", "seed"}, "augment");
    AugmentSelection a;
    a.recipe = Get<std::string>(j["augment"], "recipe", "augment.recipe", "");
    a.seed = Get<uint64_t>(j["augment"], "seed", "augment.seed", 0);
    c.augment = a;
  }
  if (j.contains("fbank")) c.fbank = FbankFromJson(j["fbank"]);
  c.model = ModelFromJson(j.value("model", Json::object()));
  if (j.contains("train")) c.train = TrainConfig::FromJson(j["train"]);
  if (j.contains("eval")) {
    if (!j["eval"].is_array()) Bad("eval", "must be an array");
    for (size_t i = 0; i < j["eval"].size(); ++i)
      c.eval.push_back(CorpusSource::FromJson(j["eval"][i], "eval[" + std::to_string(i) + "]"));
  }
  c.selection = Get<std::string>(j, "selection", "selection", c.selection);
  c.restrict_classes = Get<bool>(j, "restrict_classes", "restrict_classes", false);
  if (j.contains("output_dir"))
    c.output_dir = AbsolutePath(Get<std::string>(j, "output_dir", "output_dir", ""));
  if (j.contains("feature_cache") && !j["feature_cache"].is_null())
    c.feature_cache = AbsolutePath(Get<std::string>(j, "feature_cache", "feature_cache", ""));
  c.Validate();
  return c;
}

ExperimentConfig ExperimentConfig::Load(const fs::path &path) {
  Json j;
  try {
    j = LoadJsonFile(path);
  } catch (const Json::exception &e) {
    throw Error(ErrorCode::kBadConfig, path.string() + ": " + e.what());
  }
  return FromJson(j);
}

Json EvalRecord::ToJson() const {
  Json j{{"schema_version", 1}, {"train_tag", train_tag}, {"test_tag", test_tag},
         {"fold", fold},        {"checkpoint", checkpoint}, {"selection", selection},
         {"epoch", epoch}};
  j.update(output.ToJson());
  return j;
}

RunResult EvalRecord::ToRunResult() const { return {train_tag, test_tag, fold, output.metrics}; }

RunResult ReadRunResult(const fs::path &metrics_file, std::string *selection, bool *restricted) {
  const Json j = LoadJsonFile(metrics_file);
  try {
    RunResult r;
    r.train_tag = j.at("train_tag").get<std::string>();
    r.test_tag = j.at("test_tag").get<std::string>();
    r.fold = j.at("fold").get<int>();
    r.metrics = MetricSet::FromJson(j.at("metrics"));
    if (selection) *selection = j.value("selection", std::string());
    if (restricted) *restricted = j.value("restrict_classes", false);
    return r;
  } catch (const Json::exception &e) {
    throw Error(ErrorCode::kMissingField, metrics_file.string() + ": " + e.what());
  }
}

std::vector<EvalFiles> EvaluateCheckpoint(const fs::path &checkpoint,
                                          const std::vector<EvalTarget> &targets,
                                          const fs::path &out_dir, bool restrict_classes,
                                          const std::optional<std::string> &train_tag,
                                          const std::optional<int> &fold,
                                          const std::optional<fs::path> &cache_dir) {
  if (!fs::exists(checkpoint))
    throw Error(ErrorCode::kIoFailure, "checkpoint not found: " + checkpoint.string());
  const CheckpointHeader header = ReadCheckpointHeader(checkpoint);
  Model<float> model(ModelConfig::FromJson(header.model_config), 0);
  model.LoadCheckpoint(checkpoint);
  const Json &meta = header.meta;
  const FbankConfig fbank =
      meta.contains("fbank") ? FbankConfig::FromJson(meta["fbank"]) : FbankConfig{};

  EvalRecord base;
  base.train_tag = train_tag ? *train_tag : meta.value("tag", std::string("model"));
  base.fold = fold ? *fold : meta.value("fold", 0);
  base.checkpoint = AbsolutePath(checkpoint).string();
  base.selection = meta.value("selection", std::string());
  base.epoch = header.epoch;

  std::vector<EvalFiles> files;
  std::set<std::string> seen;
  for (const auto &t : targets) {
    const auto mapped = LoadCorpusSource(t.source);
    EvalRecord rec = base;
    rec.test_tag = t.source.tag.empty() ? mapped.manifest.name() : t.source.tag;
    if (!ValidTag(rec.test_tag))
      throw Error(ErrorCode::kBadConfig, "test tag '" + rec.test_tag + "' is not a valid file name");
    if (!seen.insert(rec.test_tag).second)
      throw Error(ErrorCode::kBadConfig, "test tag '" + rec.test_tag + "' given twice");
    const Dataset data = LoadDataset(mapped.manifest, fbank, fs::path(), cache_dir, t.ids);
    rec.output = EvaluateModel(model, data, restrict_classes);
    EvalFiles f{out_dir / (rec.test_tag + ".metrics.json"),
                out_dir / (rec.test_tag + ".predictions.csv")};
    fs::create_directories(out_dir);
    WriteFileAtomic(f.predictions, rec.output.PredictionsCsv());
    WriteFileAtomic(f.metrics, rec.ToJson().dump(2) + "\n");
    files.push_back(f);
  }
  return files;
}

ExperimentResult RunExperiment(const ExperimentConfig &input, bool resume) {
  ExperimentConfig config = input;
  config.Validate();
  if (config.output_dir.empty()) {
    std::string leaf = config.tag;
    if (config.folds) leaf += "_fold" + std::to_string(config.folds->fold);
    config.output_dir = AbsolutePath(DefaultOutputRoot() / "runs" / leaf);
  }
  ExperimentResult result;
  result.run_dir = config.output_dir;
  fs::create_directories(result.run_dir);

  const fs::path config_file = result.run_dir / "resolved_config.json";
  const Json resolved = config.ToJson();
  if (resume && fs::exists(config_file)) {
    Json previous = LoadJsonFile(config_file);
    Json current = resolved;
    previous["train"].erase("epochs");
    current["train"].erase("epochs");
    if (previous != current)
      throw Error(ErrorCode::kBadConfig,
                  "resume needs the same config as the original run (only train.epochs may change)");
  }
  WriteFileAtomic(config_file, resolved.dump(2) + "\n");

  // Training corpora, merged.
  std::vector<CorpusManifest> parts;
  Json discards = Json::object();
  for (const auto &c : config.corpora) {
    auto mapped = LoadCorpusSource(c);
    discards[mapped.manifest.name()] = mapped.discards.dropped;
    parts.push_back(std::move(mapped.manifest));
  }
  const CorpusManifest merged =
      parts.size() == 1 ? parts[0] : MergeManifests(parts, config.tag);

  std::set<std::string> train_ids = merged.Ids();
  std::set<std::string> held_out;
  int fold_index = 0;
  if (config.folds) {
    const auto &fs_cfg = *config.folds;
    const FoldOptions opts{fs_cfg.n_folds, fs_cfg.test_speakers, fs_cfg.test_fraction,
                           fs_cfg.reverse};
    FoldPlan plan;
    if (fs_cfg.plan) {
      plan = FoldPlan::FromJson(LoadJsonFile(*fs_cfg.plan));
    } else if (fs_cfg.per_corpus) {
      for (const auto &part : parts) {
        const FoldPlan p = MakeFoldPlan(part, fs_cfg.strategy, fs_cfg.seed, opts);
        if (plan.folds.empty()) {
          plan = p;
          plan.manifest_name = merged.name();
          continue;
        }
        if (p.folds.size() != plan.folds.size())
          throw Error(ErrorCode::kInvalidFoldPlan,
                      "per-corpus plans disagree on the fold count for '" + part.name() + "'");
        for (size_t k = 0; k < p.folds.size(); ++k) {
          plan.folds[k].train_ids.insert(p.folds[k].train_ids.begin(), p.folds[k].train_ids.end());
          plan.folds[k].test_ids.insert(p.folds[k].test_ids.begin(), p.folds[k].test_ids.end());
        }
      }
    } else {
      plan = MakeFoldPlan(merged, fs_cfg.strategy, fs_cfg.seed, opts);
    }
    ValidateFoldPlan(plan, merged);
    if (fs_cfg.fold >= static_cast<int>(plan.folds.size()))
      throw Error(ErrorCode::kBadConfig, "folds.fold " + std::to_string(fs_cfg.fold) +
                                             " is out of range for a " +
                                             std::to_string(plan.folds.size()) + "-fold plan");
    WriteFileAtomic(result.run_dir / "folds.json", plan.ToJson().dump(2) + "\n");
    fold_index = fs_cfg.fold;
    train_ids = plan.folds[fold_index].train_ids;
    held_out = plan.folds[fold_index].test_ids;
  }

  std::vector<EvalTarget> targets;
  std::set<std::string> test_ids = held_out;
  // The held-out side, one row per training corpus.
  for (size_t i = 0; i < config.corpora.size() && !held_out.empty(); ++i) {
    std::set<std::string> ids;
    for (const auto &id : parts[i].Ids())
      if (held_out.count(id)) ids.insert(id);
    if (ids.empty()) continue;
    EvalTarget t{config.corpora[i], ids};
    if (config.corpora.size() == 1)
      t.source.tag = config.folds->test_tag.empty() ? config.tag : config.folds->test_tag;
    else if (t.source.tag.empty())
      t.source.tag = parts[i].name();
    targets.push_back(t);
  }
  for (const auto &e : config.eval) {
    const auto mapped = LoadCorpusSource(e);
    for (const auto &id : mapped.manifest.Ids()) test_ids.insert(id);
    targets.push_back({e, std::nullopt});
  }

  // Features, validation carve, augmentation of the fit side.
  const Dataset data =
      LoadDataset(merged, config.fbank, fs::path(), config.feature_cache, train_ids);
  auto [fit, val] =
      SplitForTraining(data, config.train.validation_fraction, config.train.seed);
  if (config.augment) {
    const CorpusManifest fit_manifest = merged.Subset(fit.Ids(), merged.name() + "_fit");
    const AugmentPlan plan =
        PlanAugmentation(fit_manifest, GetRecipe(config.augment->recipe), config.augment->seed);
    const fs::path aug_dir = result.run_dir / "augment";
    const ApplyResult applied = ApplyPlan(plan, fit_manifest, fs::path(), aug_dir);
    WriteFileAtomic(aug_dir / "plan.json", plan.ToJson().dump(2) + "\n");
    WriteFileAtomic(aug_dir / "summary.csv", applied.SummaryCsv());
    if (applied.failures() > 0)
      throw Error(ErrorCode::kIoFailure, std::to_string(applied.failures()) +
                                             " augmented files failed to render; see " +
                                             (aug_dir / "summary.csv").string());
    std::set<std::string> copies;
    for (const auto &r : applied.manifest.records())
      if (r.augmented) copies.insert(r.id);
    const Dataset extra =
        LoadDataset(applied.manifest, config.fbank, fs::path(), config.feature_cache, copies);
    for (const auto &e : extra.examples) fit.examples.push_back(e);
  }

  Json seeds{{"model_init", config.train.seed}, {"train", config.train.seed}};
  if (config.folds) seeds["folds"] = config.folds->seed;
  if (config.augment) seeds["augment"] = config.augment->seed;
  WriteFileAtomic(result.run_dir / "run.json",
                  Json{{"tool", "crossemo"},
                       {"version", kVersion},
                       {"modules", {{"audio", 1}, {"frontend", 1}, {"corpus", kManifestSchemaVersion},
                                    {"augment", 1}, {"model", 1}, {"train", 1}, {"eval", 1}}},
                       {"mode", "deterministic, single thread"},
                       {"seeds", seeds},
                       {"config_digest", JsonDigest(resolved)},
                       {"fit_size", fit.size()},
                       {"validation_size", val.size()},
                       {"discards", discards}}
                          .dump(2) + "\n");

  Model<float> model(config.model, config.train.seed);
  TrainOptions options;
  options.out_dir = result.run_dir;
  options.test_ids = test_ids;
  options.resume = resume;
  options.meta = {{"tag", config.tag}, {"fold", fold_index}, {"fbank", config.fbank.ToJson()}};
  result.outcome = TrainModel(model, fit, val, config.train, options);

  const fs::path chosen = config.selection == "last-epoch" ? result.outcome.last_checkpoint
                                                            : result.outcome.best_checkpoint;
  result.evals = EvaluateCheckpoint(chosen, targets, result.run_dir / "eval",
                                    config.restrict_classes, config.tag, fold_index,
                                    config.feature_cache);
  return result;
}

std::vector<fs::path> CollectMetricFiles(const std::vector<std::string> &patterns) {
  std::set<fs::path> out;
  for (const auto &pattern : patterns) {
    glob_t g{};
    const int rc = ::glob(pattern.c_str(), GLOB_NOCHECK, nullptr, &g);
    std::vector<std::string> matches;
    if (rc == 0)
      for (size_t i = 0; i < g.gl_pathc; ++i) matches.emplace_back(g.gl_pathv[i]);
    globfree(&g);
    for (const auto &m : matches) {
      const fs::path p = m;
      if (fs::is_directory(p)) {
        for (const auto &entry : fs::recursive_directory_iterator(p)) {
          const std::string name = entry.path().filename().string();
          if (entry.is_regular_file() && name.size() > 13 &&
              name.compare(name.size() - 13, 13, ".metrics.json") == 0)
            out.insert(entry.path());
        }
      } else if (fs::is_regular_file(p)) {
        out.insert(p);
      } else {
        throw Error(ErrorCode::kIoFailure, "no metric files match '" + pattern + "'");
      }
    }
  }
  return {out.begin(), out.end()};
}

ReportFiles WriteReport(const std::vector<fs::path> &metric_files, ReportOptions options,
                        const fs::path &out_dir) {
  if (metric_files.empty()) throw Error(ErrorCode::kEmptyMatrix, "no metric files to report");
  std::vector<RunResult> runs;
  std::set<std::string> selections;
  bool any_restricted = false;
  for (const auto &f : metric_files) {
    std::string selection;
    bool restricted = false;
    runs.push_back(ReadRunResult(f, &selection, &restricted));
    if (!selection.empty()) selections.insert(selection);
    any_restricted = any_restricted || restricted;
  }
  if (options.model_selection.empty()) {
    std::string joined;
    for (const auto &s : selections) joined += (joined.empty() ? "" : ", ") + s;
    options.model_selection = joined;
  }
  options.restrict_classes = options.restrict_classes || any_restricted;
  const CrossCorpusReport report = BuildCrossMatrix(runs, options);

  fs::create_directories(out_dir);
  ReportFiles files;
  files.json = out_dir / "report.json";
  files.csv = out_dir / "report.csv";
  WriteFileAtomic(files.json, report.ToJson().dump(2) + "\n");
  WriteFileAtomic(files.csv, report.ToCsv());
  for (const auto &metric : MetricNames()) {
    const fs::path table = out_dir / ("report_" + metric + ".txt");
    WriteFileAtomic(table, report.ToTable(metric));
    files.tables.push_back(table);
  }
  return files;
}

}  // namespace crossemo
