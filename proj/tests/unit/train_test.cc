// tests/unit/train_test.cc

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
#include <limits>
#include <map>
#include <set>

#include "crossemo/base/error.h"
#include "crossemo/train/train.h"
#include "doctest.h"
#include "test_util.h"

namespace crossemo {
namespace {

using testing::TempDir;

std::vector<std::pair<std::string, ad::Var<float>>> TwoParams(std::vector<float> a, std::vector<float> b) {
  return {{"a", ad::Leaf<float>({static_cast<int>(a.size())}, a, true)},
          {"b", ad::Leaf<float>({static_cast<int>(b.size())}, b, true)}};
}

TEST_CASE("adam with a zero gradient leaves parameters and decays moments") {
  TrainConfig cfg;
  auto params = TwoParams({1.0f, -2.0f}, {0.5f});
  AdamState st;
  st.step = 3;
  st.m = {{0.2f, -0.4f}, {0.1f}};
  st.v = {{0.0f, 0.0f}, {0.0f}};
  for (auto &[_, p] : params) p->grad.assign(p->size(), 0.0f);
  // With v = 0 the update is lr * mhat / eps, so keep m at zero instead.
  st.m = {{0.0f, 0.0f}, {0.0f}};
  st.v = {{0.04f, 0.09f}, {0.01f}};
  AdamStep(params, &st, 1e-3, cfg);
  CHECK(params[0].second->value == std::vector<float>{1.0f, -2.0f});
  CHECK(params[1].second->value == std::vector<float>{0.5f});
  CHECK(st.v[0][0] == doctest::Approx(0.999 * 0.04));
  CHECK(st.v[1][0] == doctest::Approx(0.999 * 0.01));
  CHECK(st.step == 4);

  AdamState decay;
  decay.step = 1;
  decay.m = {{0.5f, 0.5f}, {0.5f}};
  decay.v = {{1.0f, 1.0f}, {1.0f}};
  AdamStep(params, &decay, 0.0, cfg);
  CHECK(decay.m[0][0] == doctest::Approx(0.45));
  CHECK(decay.v[0][1] == doctest::Approx(0.999));
}

TEST_CASE("first adam step moves each cell by about lr") {
  TrainConfig cfg;
  const double lr = 1e-3;
  auto params = TwoParams({0.0f, 1.0f, -1.0f}, {3.0f});
  const std::vector<float> g = {0.5f, -2.0f, 1e-3f};
  params[0].second->grad = g;
  params[1].second->grad = {7.0f};
  AdamState st;
  AdamStep(params, &st, lr, cfg);
  // m-hat = g and v-hat = g^2 after bias correction.
  const std::vector<float> start = {0.0f, 1.0f, -1.0f};
  for (size_t k = 0; k < 3; ++k) {
    const double expected = start[k] - lr * g[k] / (std::abs(g[k]) + 1e-8);
    CHECK(params[0].second->value[k] == doctest::Approx(expected).epsilon(1e-6));
    CHECK(std::abs(std::abs(params[0].second->value[k] - start[k]) - lr) < 1e-5);
  }
  CHECK(params[1].second->value[0] == doctest::Approx(3.0 - lr).epsilon(1e-6));
}

TEST_CASE("adam is deterministic and checks shapes") {
  TrainConfig cfg;
  auto run = [&] {
    auto params = TwoParams({0.3f, -0.1f}, {0.2f, 0.4f, 0.6f});
    AdamState st;
    Rng rng(12);
    for (int s = 0; s < 3; ++s) {
      for (auto &[_, p] : params) {
        p->grad.resize(p->size());
        for (auto &x : p->grad) x = static_cast<float>(rng.Normal());
      }
      AdamStep(params, &st, 1e-2, cfg);
    }
    return std::make_pair(params[0].second->value, params[1].second->value);
  };
  CHECK(run() == run());

  auto params = TwoParams({1, 2}, {3});
  AdamState st;
  AdamStep(params, &st, 1e-3, cfg);
  auto other = TwoParams({1, 2, 3}, {3});
  try {
    AdamStep(other, &st, 1e-3, cfg);
    FAIL("expected ShapeMismatch");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::kShapeMismatch);
  }
  params[0].second->grad = {1.0f};
  CHECK_THROWS_AS(AdamStep(params, &st, 1e-3, cfg), Error);
}

TEST_CASE("plateau schedule") {
  TrainConfig cfg;
  auto run = [&](const std::vector<double> &metrics) {
    PlateauState st;
    st.lr = 1e-4;
    for (double m : metrics) PlateauUpdate(&st, m, cfg);
    return st;
  };
  CHECK(run({0.5, 0.6, 0.7}).lr == 1e-4);
  const auto flat5 = run({0.7, 0.7, 0.7, 0.7, 0.7});
  CHECK(flat5.reductions == 1);
  CHECK(flat5.lr == doctest::Approx(8e-5).epsilon(1e-12));

  // A baseline evaluation followed by 40 flat epochs.
  std::vector<double> flat(41, 0.7);
  const auto st40 = run(flat);
  CHECK(st40.reductions == 10);
  CHECK(st40.lr == doctest::Approx(1e-4 * std::pow(0.8, 10)).epsilon(1e-12));
  CHECK(std::abs(st40.lr - 1.074e-5) < 1e-8);

  // Improvements smaller than min-delta do not count.
  CHECK(run({0.7, 0.7 + 5e-7, 0.7 + 9e-7, 0.7 + 9.5e-7, 0.7 + 9.9e-7}).reductions == 1);

  // lr never rises and each reduction is exactly x0.8 until the floor.
  PlateauState st;
  st.lr = 1e-4;
  Rng rng(3);
  double prev = st.lr;
  for (int e = 0; e < 2000; ++e) {
    const double before = st.lr;
    const bool reduced = PlateauUpdate(&st, rng.Uniform() * 0.1, cfg);
    CHECK(st.lr <= prev);
    if (reduced && st.lr > cfg.lr_floor) CHECK(st.lr == doctest::Approx(before * 0.8).epsilon(1e-12));
    prev = st.lr;
  }
  CHECK(st.lr >= cfg.lr_floor);
}

TEST_CASE("validation carve") {
  std::vector<std::pair<std::string, int>> items;
  for (int i = 0; i < 100; ++i) items.emplace_back("id" + std::to_string(i), i % 4);
  auto [fit, val] = CarveValidation(items, 0.1, 9);
  CHECK(val.size() == 10);
  CHECK(fit.size() == 90);
  std::set<std::string> all(fit.begin(), fit.end());
  for (const auto &v : val) CHECK(all.insert(v).second);
  CHECK(all.size() == 100);
  CHECK(CarveValidation(items, 0.1, 9) == std::make_pair(fit, val));
  CHECK(CarveValidation(items, 0.1, 10) != std::make_pair(fit, val));

  std::map<std::string, int> label;
  for (const auto &[id, l] : items) label[id] = l;
  std::map<int, int> per_class;
  for (const auto &v : val) ++per_class[label[v]];
  for (int c = 0; c < 4; ++c) CHECK(std::abs(per_class[c] - 2.5) <= 1.0);

  std::vector<std::pair<std::string, int>> skewed;
  for (int i = 0; i < 70; ++i) skewed.emplace_back("a" + std::to_string(i), 0);
  for (int i = 0; i < 20; ++i) skewed.emplace_back("b" + std::to_string(i), 1);
  for (int i = 0; i < 10; ++i) skewed.emplace_back("c" + std::to_string(i), 2);
  auto sk = CarveValidation(skewed, 0.1, 1).second;
  std::map<char, int> counts;
  for (const auto &v : sk) ++counts[v[0]];
  CHECK(counts['a'] == 7);
  CHECK(counts['b'] == 2);
  CHECK(counts['c'] == 1);

  items.emplace_back("lonely", 9);
  try {
    CarveValidation(items, 0.1, 9);
    FAIL("expected TooFewPerClass");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::kTooFewPerClass);
  }
}

TEST_CASE("batch partition and epoch order") {
  CHECK(BatchCount(4290, 186) == 24);
  CHECK(4290 - 23 * 186 == 12);
  CHECK(BatchCount(186, 186) == 1);
  CHECK(BatchCount(187, 186) == 2);

  const auto a = EpochOrder(50, 4, 1);
  CHECK(a == EpochOrder(50, 4, 1));
  CHECK(a != EpochOrder(50, 4, 2));
  auto sorted = a;
  std::sort(sorted.begin(), sorted.end());
  for (size_t i = 0; i < sorted.size(); ++i) CHECK(sorted[i] == i);
}

TEST_CASE("train config json and profiles") {
  const auto paper = TrainConfig::Profile("paper-default");
  CHECK(paper.learning_rate == 1e-4);
  CHECK(paper.batch_size == 186);
  CHECK(paper.epochs == 200);
  CHECK(paper.plateau_patience == 4);
  CHECK(paper.plateau_factor == 0.8);
  const auto back = TrainConfig::FromJson(paper.ToJson());
  CHECK(back.ToJson() == paper.ToJson());
  CHECK(TrainConfig::FromJson(Json{{"profile", "desk-scale"}, {"epochs", 3}}).epochs == 3);
  CHECK_THROWS_AS(TrainConfig::Profile("huge"), Error);
  try {
    TrainConfig::FromJson(Json{{"plateau_factor", 1.5}});
    FAIL("expected BadConfig");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::kBadConfig);
    CHECK(std::string(e.what()).find("plateau_factor") != std::string::npos);
  }
  CHECK_THROWS_AS(TrainConfig::FromJson(Json{{"validation_fraction", 0.5}}), Error);
  CHECK_THROWS_AS(TrainConfig::FromJson(Json{{"learnin_rate", 0.1}}), Error);
}

// Two classes told apart by the sign of band 0 plus noise.
Dataset ToyData(int n, uint64_t seed, int frames = 16) {
  Dataset d;
  d.frames = frames;
  d.bands = 23;
  Rng rng(seed);
  for (int i = 0; i < n; ++i) {
    Example e;
    e.id = "toy" + std::to_string(seed) + "_" + std::to_string(i);
    e.label = i % 4;
    e.features.resize(static_cast<size_t>(frames) * 23);
    for (int t = 0; t < frames; ++t)
      for (int b = 0; b < 23; ++b)
        e.features[t * 23 + b] =
            static_cast<float>(0.3 * rng.Normal() + (b == e.label * 5 ? 1.5 : 0.0));
    d.examples.push_back(std::move(e));
  }
  return d;
}

TrainConfig ToyConfig(int epochs) {
  TrainConfig cfg = TrainConfig::DeskScale();
  cfg.epochs = epochs;
  cfg.batch_size = 8;
  cfg.seed = 21;
  return cfg;
}

TEST_CASE("training writes history and checkpoints and learns the toy task") {
  TempDir dir("train");
  const auto data = ToyData(40, 1);
  auto [fit, val] = SplitForTraining(data, 0.2, 3);
  CHECK(fit.size() == 32);
  CHECK(val.size() == 8);
  Model<float> model(ModelConfig::DeskScale(Arch::kCnnRnnAtt), 5);
  TrainOptions opt;
  opt.out_dir = dir.path();
  int seen = 0;
  opt.on_epoch = [&](const EpochRecord &) { ++seen; };
  const auto outcome = TrainModel(model, fit, val, ToyConfig(12), opt);
  CHECK(seen == 12);
  REQUIRE(outcome.history.size() == 12);
  CHECK(ReadHistory(outcome.history_file).size() == 12);
  CHECK(std::filesystem::exists(outcome.best_checkpoint));
  CHECK(std::filesystem::exists(outcome.last_checkpoint));
  CHECK(ReadCheckpointHeader(outcome.last_checkpoint).epoch == 12);
  CHECK(ReadCheckpointHeader(outcome.best_checkpoint).meta.at("selection") == "best-validation");
  CHECK(outcome.history.back().train_loss < outcome.history.front().train_loss);
  CHECK(outcome.best_val_ua > 75.0);
  for (size_t i = 1; i < outcome.history.size(); ++i)
    CHECK(outcome.history[i].lr <= outcome.history[i - 1].lr);
}

TEST_CASE("training is bit-reproducible and resumes at an epoch boundary") {
  const auto data = ToyData(24, 2);
  auto [fit, val] = SplitForTraining(data, 0.25, 3);
  auto run = [&](const std::filesystem::path &dir, int epochs, bool resume) {
    Model<float> model(ModelConfig::DeskScale(Arch::kCnnRnnAtt), 5);
    TrainOptions opt;
    opt.out_dir = dir;
    opt.resume = resume;
    return TrainModel(model, fit, val, ToyConfig(epochs), opt);
  };
  TempDir a("det_a"), b("det_b"), c("det_c");
  run(a.path(), 4, false);
  run(b.path(), 4, false);
  CHECK(ReadFile(a / "history.jsonl") == ReadFile(b / "history.jsonl"));
  CHECK(ReadFile(a / "last.ckpt") == ReadFile(b / "last.ckpt"));
  CHECK(ReadFile(a / "best.ckpt") == ReadFile(b / "best.ckpt"));

  run(c.path(), 2, false);
  const auto resumed = run(c.path(), 4, true);
  CHECK(resumed.start_epoch == 3);
  REQUIRE(resumed.history.size() == 4);
  CHECK(resumed.history.back().epoch == 4);
  CHECK(ReadFile(c / "history.jsonl") == ReadFile(a / "history.jsonl"));
  CHECK(ReadFile(c / "last.ckpt") == ReadFile(a / "last.ckpt"));
}

TEST_CASE("training refuses leakage, empty sets and diverging losses") {
  TempDir dir("guards");
  const auto data = ToyData(16, 3);
  auto [fit, val] = SplitForTraining(data, 0.25, 3);
  Model<float> model(ModelConfig::DeskScale(Arch::kCnnRnnAtt), 5);
  TrainOptions opt;
  opt.out_dir = dir.path();

  opt.test_ids = {fit.examples[0].id};
  try {
    TrainModel(model, fit, val, ToyConfig(1), opt);
    FAIL("expected TestLeakage");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::kTestLeakage);
  }
  auto derived = fit;
  derived.examples[1].id = "copy__speed__v0";
  derived.examples[1].source_id = "held_out";
  opt.test_ids = {"held_out"};
  CHECK_THROWS_AS(TrainModel(model, derived, val, ToyConfig(1), opt), Error);
  opt.test_ids.clear();

  try {
    TrainModel(model, Dataset{16, 23, {}}, val, ToyConfig(1), opt);
    FAIL("expected EmptyTrainSet");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::kEmptyTrainSet);
  }

  for (auto &[name, p] : model.parameters())
    if (name == "out.b") p->value[0] = std::numeric_limits<float>::quiet_NaN();
  try {
    TrainModel(model, fit, val, ToyConfig(1), opt);
    FAIL("expected DivergedLoss");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::kDivergedLoss);
  }
  CHECK(std::filesystem::exists(dir / "diverged.ckpt"));
}

}  // namespace
}  // namespace crossemo
