// src/train/train.cc

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

#include "crossemo/train/train.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <numeric>
#include <sstream>

#include "crossemo/base/error.h"
#include "crossemo/eval/eval.h"

namespace crossemo {

namespace {

constexpr char kAdamMagic[4] = {'C', 'E', 'A', 'D'};

void Bad(const std::string &field, const std::string &why) {
  throw Error(ErrorCode::kBadConfig, "train config field '" + field + "' " + why);
}

std::string EncodeAdam(const AdamState &s) {
  std::string out(kAdamMagic, 4);
  auto pod = [&](const auto &v) { out.append(reinterpret_cast<const char *>(&v), sizeof(v)); };
  pod(static_cast<int64_t>(s.step));
  pod(static_cast<uint32_t>(s.m.size()));
  for (size_t i = 0; i < s.m.size(); ++i) {
    pod(static_cast<uint32_t>(s.m[i].size()));
    out.append(reinterpret_cast<const char *>(s.m[i].data()), s.m[i].size() * sizeof(float));
    out.append(reinterpret_cast<const char *>(s.v[i].data()), s.v[i].size() * sizeof(float));
  }
  return out;
}

AdamState DecodeAdam(const std::string &bytes) {
  size_t pos = 0;
  auto take = [&](void *dst, size_t n) {
    if (pos + n > bytes.size()) throw Error(ErrorCode::kIoFailure, "optimizer state is truncated");
    std::memcpy(dst, bytes.data() + pos, n);
    pos += n;
  };
  char magic[4];
  take(magic, 4);
  if (std::memcmp(magic, kAdamMagic, 4) != 0)
    throw Error(ErrorCode::kIoFailure, "optimizer state has a bad magic");
  AdamState s;
  int64_t step;
  uint32_t count;
  take(&step, sizeof(step));
  take(&count, sizeof(count));
  s.step = step;
  s.m.resize(count);
  s.v.resize(count);
  for (uint32_t i = 0; i < count; ++i) {
    uint32_t n;
    take(&n, sizeof(n));
    s.m[i].resize(n);
    s.v[i].resize(n);
    take(s.m[i].data(), n * sizeof(float));
    take(s.v[i].data(), n * sizeof(float));
  }
  return s;
}

// Resume is allowed after changing only the epoch budget.
std::string ResumeDigest(const TrainConfig &cfg) {
  Json j = cfg.ToJson();
  j.erase("epochs");
  return JsonDigest(j);
}

}  // namespace

TrainConfig TrainConfig::DeskScale() {
  TrainConfig c;
  c.epochs = 30;
  c.learning_rate = 1e-3;
  c.batch_size = 16;
  return c;
}

TrainConfig TrainConfig::Profile(const std::string &name) {
  if (name == "paper-default") return PaperDefault();
  if (name == "desk-scale") return DeskScale();
  throw Error(ErrorCode::kBadConfig,
              "unknown training profile '" + name + "' (valid: paper-default, desk-scale)");
}

void TrainConfig::Validate() const {
  if (epochs < 1) Bad("epochs", "must be >= 1");
  if (!(learning_rate > 0.0)) Bad("learning_rate", "must be > 0");
  if (batch_size < 1) Bad("batch_size", "must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) Bad("beta1", "must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) Bad("beta2", "must lie in [0, 1)");
  if (!(adam_eps > 0.0)) Bad("adam_eps", "must be > 0");
  if (plateau_patience < 1) Bad("plateau_patience", "must be >= 1");
  if (!(plateau_factor > 0.0 && plateau_factor < 1.0)) Bad("plateau_factor", "must lie in (0, 1)");
  if (!(plateau_min_delta >= 0.0)) Bad("plateau_min_delta", "must be >= 0");
  if (!(lr_floor > 0.0)) Bad("lr_floor", "must be > 0");
  if (!(validation_fraction > 0.0 && validation_fraction < 0.5))
    Bad("validation_fraction", "must lie in (0, 0.5)");
  if (early_stop && *early_stop < 1) Bad("early_stop", "must be >= 1 when set");
}

Json TrainConfig::ToJson() const {
  return Json{{"epochs", epochs},
              {"learning_rate", learning_rate},
              {"batch_size", batch_size},
              {"beta1", beta1},
              {"beta2", beta2},
              {"adam_eps", adam_eps},
              {"plateau_patience", plateau_patience},
              {"plateau_factor", plateau_factor},
              {"plateau_min_delta", plateau_min_delta},
              {"lr_floor", lr_floor},
              {"validation_fraction", validation_fraction},
              {"seed", seed},
              {"early_stop", early_stop ? Json(*early_stop) : Json(nullptr)}};
}

TrainConfig TrainConfig::FromJson(const Json &j) {
  TrainConfig c;
  if (j.contains("profile")) c = Profile(j.at("profile").get<std::string>());
  static const std::set<std::string> kKnown = {
      "profile",        "epochs",           "learning_rate",     "batch_size", "beta1",
      "beta2",          "adam_eps",         "plateau_patience",  "plateau_factor",
      "plateau_min_delta", "lr_floor",      "validation_fraction", "seed",   "early_stop"};
  for (const auto &[key, _] : j.items()) {
    if (!kKnown.count(key)) Bad(key, "is not a known field");
  }
  try {
    if (j.contains("epochs")) c.epochs = j.at("epochs").get<int>();
    if (j.contains("learning_rate")) c.learning_rate = j.at("learning_rate").get<double>();
    if (j.contains("batch_size")) c.batch_size = j.at("batch_size").get<int>();
    if (j.contains("beta1")) c.beta1 = j.at("beta1").get<double>();
    if (j.contains("beta2")) c.beta2 = j.at("beta2").get<double>();
    if (j.contains("adam_eps")) c.adam_eps = j.at("adam_eps").get<double>();
    if (j.contains("plateau_patience")) c.plateau_patience = j.at("plateau_patience").get<int>();
    if (j.contains("plateau_factor")) c.plateau_factor = j.at("plateau_factor").get<double>();
    if (j.contains("plateau_min_delta")) c.plateau_min_delta = j.at("plateau_min_delta").get<double>();
    if (j.contains("lr_floor")) c.lr_floor = j.at("lr_floor").get<double>();
    if (j.contains("validation_fraction"))
      c.validation_fraction = j.at("validation_fraction").get<double>();
    if (j.contains("seed")) c.seed = j.at("seed").get<uint64_t>();
    if (j.contains("early_stop")) {
      if (j.at("early_stop").is_null()) c.early_stop.reset();
      else c.early_stop = j.at("early_stop").get<int>();
    }
  } catch (const Json::exception &e) {
    throw Error(ErrorCode::kBadConfig, std::string("train config has a mistyped field: ") + e.what());
  }
  c.Validate();
  return c;
}

void AdamStep(const std::vector<std::pair<std::string, ad::Var<float>>> &params, AdamState *state,
              double lr, const TrainConfig &cfg) {
  if (state->m.empty() && state->step == 0) {
    for (const auto &[_, p] : params) {
      state->m.emplace_back(p->size(), 0.0f);
      state->v.emplace_back(p->size(), 0.0f);
    }
  }
  if (state->m.size() != params.size())
    throw Error(ErrorCode::kShapeMismatch, "optimizer holds " + std::to_string(state->m.size()) +
                                               " moment tensors for " +
                                               std::to_string(params.size()) + " parameters");
  for (size_t i = 0; i < params.size(); ++i) {
    const auto &[name, p] = params[i];
    if (state->m[i].size() != p->size() || state->v[i].size() != p->size())
      throw Error(ErrorCode::kShapeMismatch, "optimizer moments for '" + name + "' do not match");
    if (!p->grad.empty() && p->grad.size() != p->size())
      throw Error(ErrorCode::kShapeMismatch, "gradient for '" + name + "' does not match");
  }
  ++state->step;
  const double b1 = cfg.beta1, b2 = cfg.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state->step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state->step));
  for (size_t i = 0; i < params.size(); ++i) {
    auto &p = params[i].second;
    auto &m = state->m[i];
    auto &v = state->v[i];
    const bool has_grad = !p->grad.empty();
    for (size_t k = 0; k < p->size(); ++k) {
      const double g = has_grad ? p->grad[k] : 0.0;
      m[k] = static_cast<float>(b1 * m[k] + (1.0 - b1) * g);
      v[k] = static_cast<float>(b2 * v[k] + (1.0 - b2) * g * g);
      const double mhat = m[k] / c1;
      const double vhat = v[k] / c2;
      p->value[k] = static_cast<float>(p->value[k] - lr * mhat / (std::sqrt(vhat) + cfg.adam_eps));
    }
  }
}

bool PlateauUpdate(PlateauState *state, double metric, const TrainConfig &cfg) {
  if (!state->best) {
    state->best = metric;
    return false;
  }
  if (metric > *state->best + cfg.plateau_min_delta) {
    state->best = metric;
    state->since = 0;
    return false;
  }
  if (++state->since < cfg.plateau_patience) return false;
  state->since = 0;
  const double reduced = std::max(cfg.lr_floor, state->lr * cfg.plateau_factor);
  if (reduced >= state->lr) return false;
  state->lr = reduced;
  ++state->reductions;
  return true;
}

std::pair<std::vector<std::string>, std::vector<std::string>> CarveValidation(
    const std::vector<std::pair<std::string, int>> &items, double fraction, uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw Error(ErrorCode::kBadConfig, "validation fraction must lie in (0, 1)");
  std::map<int, std::vector<std::string>> by_class;
  for (const auto &[id, label] : items) by_class[label].push_back(id);
  for (auto &[label, ids] : by_class) {
    if (ids.size() < 2)
      throw Error(ErrorCode::kTooFewPerClass, "class " + std::to_string(label) + " has " +
                                                  std::to_string(ids.size()) +
                                                  " item(s); need at least 2 to carve validation");
    std::sort(ids.begin(), ids.end());
  }
  // Largest-remainder quotas so the total is round(fraction * N).
  const auto total = static_cast<long>(std::llround(fraction * static_cast<double>(items.size())));
  std::map<int, long> quota;
  std::vector<std::pair<double, int>> remainders;
  long assigned = 0;
  for (const auto &[label, ids] : by_class) {
    const double exact = fraction * static_cast<double>(ids.size());
    quota[label] = static_cast<long>(std::floor(exact));
    assigned += quota[label];
    remainders.emplace_back(exact - std::floor(exact), label);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto &a, const auto &b) { return a.first > b.first; });
  for (size_t i = 0; assigned < total && i < remainders.size(); ++i, ++assigned)
    ++quota[remainders[i].second];

  std::vector<std::string> fit, val;
  for (auto &[label, ids] : by_class) {
    Rng rng(Mix64(seed ^ Mix64(static_cast<uint64_t>(label) + 0x51)));
    rng.Shuffle(&ids);
    const long q = std::min<long>(quota[label], static_cast<long>(ids.size()) - 1);
    val.insert(val.end(), ids.begin(), ids.begin() + q);
    fit.insert(fit.end(), ids.begin() + q, ids.end());
  }
  std::sort(fit.begin(), fit.end());
  std::sort(val.begin(), val.end());
  return {fit, val};
}

std::pair<Dataset, Dataset> SplitForTraining(const Dataset &data, double fraction, uint64_t seed) {
  std::vector<std::pair<std::string, int>> items;
  for (const auto &e : data.examples) items.emplace_back(e.id, e.label);
  auto [fit, val] = CarveValidation(items, fraction, seed);
  return {data.Select({fit.begin(), fit.end()}), data.Select({val.begin(), val.end()})};
}

size_t BatchCount(size_t n, int batch) {
  return (n + static_cast<size_t>(batch) - 1) / static_cast<size_t>(batch);
}

std::vector<size_t> EpochOrder(size_t n, uint64_t seed, int epoch) {
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(Mix64(seed) ^ Mix64(static_cast<uint64_t>(epoch)));
  rng.Shuffle(&order);
  return order;
}

void CheckNoLeakage(const Dataset &fit, const Dataset &val, const std::set<std::string> &test_ids) {
  for (const Dataset *d : {&fit, &val}) {
    for (const auto &e : d->examples) {
      if (test_ids.count(e.id))
        throw Error(ErrorCode::kTestLeakage, "training example '" + e.id + "' is in the test set");
      if (!e.source_id.empty() && test_ids.count(e.source_id))
        throw Error(ErrorCode::kTestLeakage, "training example '" + e.id +
                                                 "' is derived from test utterance '" +
                                                 e.source_id + "'");
    }
  }
}

Json EpochRecord::ToJson() const {
  return Json{{"epoch", epoch},
              {"train_loss", train_loss},
              {"val_ua", val_ua},
              {"val_wa", val_wa},
              {"lr", lr}};
}

EpochRecord EpochRecord::FromJson(const Json &j) {
  EpochRecord r;
  r.epoch = j.at("epoch").get<int>();
  r.train_loss = j.at("train_loss").get<double>();
  r.val_ua = j.at("val_ua").get<double>();
  r.val_wa = j.at("val_wa").get<double>();
  r.lr = j.at("lr").get<double>();
  return r;
}

std::vector<EpochRecord> ReadHistory(const std::filesystem::path &path) {
  std::vector<EpochRecord> out;
  std::istringstream in(ReadFile(path));
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(EpochRecord::FromJson(Json::parse(line)));
  }
  return out;
}

TrainOutcome TrainModel(Model<float> &model, const Dataset &fit, const Dataset &val,
                        const TrainConfig &cfg, const TrainOptions &options) {
  cfg.Validate();
  if (fit.empty()) throw Error(ErrorCode::kEmptyTrainSet, "no training examples");
  if (val.empty()) throw Error(ErrorCode::kEmptyTrainSet, "no validation examples");
  CheckNoLeakage(fit, val, options.test_ids);
  namespace fs = std::filesystem;
  fs::create_directories(options.out_dir);

  TrainOutcome out;
  out.best_checkpoint = options.out_dir / "best.ckpt";
  out.last_checkpoint = options.out_dir / "last.ckpt";
  out.history_file = options.out_dir / "history.jsonl";
  const fs::path state_file = options.out_dir / "train_state.json";
  const fs::path adam_file = options.out_dir / "optimizer.bin";

  AdamState adam;
  PlateauState plateau;
  plateau.lr = cfg.learning_rate;
  int stale = 0;
  Json meta = options.meta;
  meta["train_config"] = cfg.ToJson();

  if (options.resume && fs::exists(state_file)) {
    const Json st = LoadJsonFile(state_file);
    if (st.at("config_digest").get<std::string>() != ResumeDigest(cfg))
      throw Error(ErrorCode::kBadConfig,
                  "resume state was written with a different training config");
    model.LoadCheckpoint(out.last_checkpoint);
    adam = DecodeAdam(ReadFile(adam_file));
    plateau.lr = st.at("lr").get<double>();
    plateau.best = st.at("best").get<double>();
    plateau.since = st.at("since").get<int>();
    plateau.reductions = st.at("reductions").get<int>();
    stale = st.at("stale").get<int>();
    out.best_epoch = st.at("best_epoch").get<int>();
    out.start_epoch = st.at("epoch").get<int>() + 1;
    for (const auto &r : ReadHistory(out.history_file)) {
      if (r.epoch < out.start_epoch) out.history.push_back(r);
    }
  } else {
    const auto baseline = EvaluateModel(model, val, false, cfg.batch_size);
    PlateauUpdate(&plateau, baseline.metrics.ua, cfg);
    Json m = meta;
    m["selection"] = "best-validation";
    m["val_ua"] = baseline.metrics.ua;
    model.SaveCheckpoint(out.best_checkpoint, 0, m);
    WriteFileAtomic(out.history_file, "");
  }
  out.best_val_ua = *plateau.best;

  std::string history_text;
  for (const auto &r : out.history) history_text += r.ToJson().dump() + "\n";

  std::vector<float> feats;
  std::vector<int> labels;
  for (int epoch = out.start_epoch; epoch <= cfg.epochs; ++epoch) {
    const auto order = EpochOrder(fit.size(), cfg.seed, epoch);
    double loss_sum = 0.0;
    const size_t batches = BatchCount(fit.size(), cfg.batch_size);
    for (size_t b = 0; b < batches; ++b) {
      const size_t begin = b * cfg.batch_size;
      const size_t end = std::min(fit.size(), begin + cfg.batch_size);
      fit.Gather(order, begin, end, &feats, &labels);
      model.ZeroGrad();
      const uint64_t dropout_seed =
          Mix64(cfg.seed ^ Mix64((static_cast<uint64_t>(epoch) << 24) + b));
      auto logits = model.Forward(feats, static_cast<int>(end - begin), fit.frames, true, dropout_seed);
      auto loss = ad::SoftmaxCrossEntropy(logits, labels);
      const double value = loss->value[0];
      if (!std::isfinite(value)) {
        Json m = meta;
        m["diverged_at"] = {{"epoch", epoch}, {"batch", b}};
        model.SaveCheckpoint(options.out_dir / "diverged.ckpt", epoch, m);
        throw Error(ErrorCode::kDivergedLoss, "non-finite loss at epoch " + std::to_string(epoch) +
                                                  ", batch " + std::to_string(b) +
                                                  "; state dumped to diverged.ckpt");
      }
      ad::Backward(loss);
      AdamStep(model.parameters(), &adam, plateau.lr, cfg);
      loss_sum += value * static_cast<double>(end - begin);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(fit.size());
    rec.lr = plateau.lr;
    const auto v = EvaluateModel(model, val, false, cfg.batch_size);
    rec.val_ua = v.metrics.ua;
    rec.val_wa = v.metrics.wa;

    const bool improved = rec.val_ua > *plateau.best + cfg.plateau_min_delta;
    PlateauUpdate(&plateau, rec.val_ua, cfg);
    stale = improved ? 0 : stale + 1;
    if (improved) {
      out.best_epoch = epoch;
      Json m = meta;
      m["selection"] = "best-validation";
      m["val_ua"] = rec.val_ua;
      model.SaveCheckpoint(out.best_checkpoint, epoch, m);
    }
    out.best_val_ua = *plateau.best;
    Json m = meta;
    m["selection"] = "last-epoch";
    m["val_ua"] = rec.val_ua;
    model.SaveCheckpoint(out.last_checkpoint, epoch, m);
    WriteFileAtomic(adam_file, EncodeAdam(adam));
    out.history.push_back(rec);
    history_text += rec.ToJson().dump() + "\n";
    WriteFileAtomic(out.history_file, history_text);
    WriteFileAtomic(state_file, Json{{"epoch", epoch},
                                     {"lr", plateau.lr},
                                     {"best", *plateau.best},
                                     {"since", plateau.since},
                                     {"reductions", plateau.reductions},
                                     {"stale", stale},
                                     {"best_epoch", out.best_epoch},
                                     {"config_digest", ResumeDigest(cfg)}}
                                    .dump(2));
    if (options.on_epoch) options.on_epoch(rec);
    if (cfg.early_stop && stale >= *cfg.early_stop) break;
  }
  return out;
}

}  // namespace crossemo
