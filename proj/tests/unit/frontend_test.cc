// tests/unit/frontend_test.cc

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

#include <random>

#include "crossemo/base/error.h"
#include "crossemo/frontend/fbank.h"
#include "doctest.h"
#include "test_util.h"

namespace crossemo {
namespace {

using testing::MakeTone;
using testing::TempDir;

int LoopFrameCount(size_t n, int window, int shift) {
  int count = 0;
  for (size_t start = 0; start + window <= n; start += shift) ++count;
  return count;
}

AudioBuffer NoisyTone(double seconds, uint64_t seed) {
  AudioBuffer b = MakeTone(310, seconds, 0.3);
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> noise(0.0, 0.02);
  for (double &s : b.samples) s += noise(gen);
  return b;
}

void CheckNormalized(const FeatureMatrix &m) {
  double mean = 0.0;
  for (double v : m.values) mean += v;
  mean /= m.values.size();
  double var = 0.0;
  for (double v : m.values) var += (v - mean) * (v - mean);
  CHECK(std::abs(mean) < 1e-6);
  CHECK(std::abs(std::sqrt(var / m.values.size()) - 1.0) < 1e-6);
}

TEST_CASE("default config geometry") {
  FbankConfig cfg;
  CHECK(cfg.window_samples() == 416);
  CHECK(cfg.shift_samples() == 144);
  CHECK(cfg.target_samples() == 112000);
  CHECK(cfg.frames() == 775);
  CHECK(FrameCount(112000, 416, 144) == (112000 - 416) / 144 + 1);
}

TEST_CASE("frame count formula agrees with a loop oracle") {
  for (double seconds = 0.03; seconds <= 10.0; seconds += 0.0137) {
    const auto n = static_cast<size_t>(seconds * 16000);
    REQUIRE(FrameCount(n, 416, 144) == LoopFrameCount(n, 416, 144));
  }
  CHECK(FrameCount(415, 416, 144) == 0);
  CHECK(FrameCount(416, 416, 144) == 1);
}

TEST_CASE("FixLength truncates and pads at the end") {
  FbankConfig cfg;
  AudioBuffer eight = NoisyTone(8.0, 1);
  AudioBuffer cut = FixLength(eight, cfg);
  REQUIRE(cut.size() == 112000);
  CHECK(std::equal(cut.samples.begin(), cut.samples.end(), eight.samples.begin()));

  AudioBuffer one = NoisyTone(1.0, 2);
  AudioBuffer padded = FixLength(one, cfg);
  REQUIRE(padded.size() == 112000);
  CHECK(std::equal(one.samples.begin(), one.samples.end(), padded.samples.begin()));
  for (size_t i = 16000; i < 112000; ++i) REQUIRE(padded.samples[i] == 0.0);

  AudioBuffer seven = NoisyTone(7.0, 3);
  CHECK(FixLength(seven, cfg).samples == seven.samples);
}

TEST_CASE("pipeline always yields 775 x 23 normalized features") {
  FbankConfig cfg;
  for (double seconds : {0.03, 0.5, 1.0, 6.99, 7.0, 8.5, 10.0}) {
    CAPTURE(seconds);
    FeatureMatrix m = ComputeFeatures(NoisyTone(seconds, 4), cfg);
    CHECK(m.rows == 775);
    CHECK(m.cols == 23);
    CHECK(m.normalized);
    CheckNormalized(m);
  }
}

TEST_CASE("silence hits the log floor everywhere") {
  FbankConfig cfg;
  AudioBuffer silence;
  silence.samples.assign(112000, 0.0);
  FeatureMatrix m = ExtractFbank(silence, cfg);
  for (double v : m.values) REQUIRE(v == std::log(1e-10));
  FeatureMatrix z = ZNormPerFile(m);
  for (double v : z.values) REQUIRE(v == 0.0);
}

TEST_CASE("signal gain shifts unfloored log energies by 2 ln f") {
  FbankConfig cfg;
  AudioBuffer x = NoisyTone(7.0, 5);
  const double f = 0.37;
  AudioBuffer y = x;
  for (double &s : y.samples) s *= f;
  FeatureMatrix a = ExtractFbank(x, cfg);
  FeatureMatrix b = ExtractFbank(y, cfg);
  const double floor_log = std::log(cfg.log_floor);
  int compared = 0;
  for (size_t i = 0; i < a.values.size(); ++i) {
    if (a.values[i] > floor_log + 1 && b.values[i] > floor_log + 1) {
      REQUIRE(b.values[i] - a.values[i] == doctest::Approx(2.0 * std::log(f)).epsilon(1e-9));
      ++compared;
    }
  }
  CHECK(compared == 775 * 23);
}

TEST_CASE("normalized features are invariant to volume on unpadded input") {
  FbankConfig cfg;
  AudioBuffer x = NoisyTone(7.0, 6);
  FeatureMatrix a = ComputeFeatures(x, cfg);
  FeatureMatrix b = ComputeFeatures(ApplyVolume(x, 1.4), cfg);
  double worst = 0.0;
  for (size_t i = 0; i < a.values.size(); ++i)
    worst = std::max(worst, std::abs(a.values[i] - b.values[i]));
  CHECK(worst < 1e-5);
}

TEST_CASE("ZNormPerFile arithmetic and degenerate cases") {
  FeatureMatrix m(2, 2);
  m.values = {1, 2, 3, 4};
  FeatureMatrix z = ZNormPerFile(m);
  const double s = std::sqrt(1.25);
  CHECK(z.at(0, 0) == doctest::Approx(-1.5 / s).epsilon(1e-9));
  CHECK(z.at(0, 0) == doctest::Approx(-1.342).epsilon(1e-3));
  CHECK(z.at(0, 1) == doctest::Approx(-0.447).epsilon(1e-3));
  CHECK(z.at(1, 0) == doctest::Approx(0.447).epsilon(1e-3));
  CHECK(z.at(1, 1) == doctest::Approx(1.342).epsilon(1e-3));

  FeatureMatrix flat(3, 4, 7.5);
  for (double v : ZNormPerFile(flat).values) CHECK(v == 0.0);

  std::mt19937_64 gen(9);
  std::normal_distribution<double> dist(3.0, 2.0);
  FeatureMatrix r(50, 23);
  for (double &v : r.values) v = dist(gen);
  FeatureMatrix once = ZNormPerFile(r);
  FeatureMatrix twice = ZNormPerFile(once);
  for (size_t i = 0; i < once.values.size(); ++i)
    REQUIRE(std::abs(once.values[i] - twice.values[i]) < 1e-9);

  FeatureMatrix banded = ZNormPerFile(r, /*per_band=*/true);
  for (int c = 0; c < banded.cols; ++c) {
    double mean = 0.0;
    for (int row = 0; row < banded.rows; ++row) mean += banded.at(row, c);
    CHECK(std::abs(mean / banded.rows) < 1e-9);
  }
}

TEST_CASE("mel filters are positive and overlap their neighbours") {
  MelFilterbank bank(23, 512, 16000, 0.0, 8000.0);
  CHECK(bank.n_bands() == 23);
  for (int m = 0; m < 23; ++m) {
    double sum = 0.0;
    for (double w : bank.filter(m)) sum += w;
    CHECK(sum > 0.0);
    if (m + 1 < 23) {
      bool overlap = false;
      for (size_t k = 0; k < bank.filter(m).size(); ++k)
        overlap |= bank.filter(m)[k] > 0 && bank.filter(m + 1)[k] > 0;
      CHECK(overlap);
    }
  }
  CHECK(MelFilterbank::MelToHz(MelFilterbank::HzToMel(1234.5)) == doctest::Approx(1234.5));
}

TEST_CASE("FFT matches a direct DFT") {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> dist(-1, 1);
  std::vector<std::complex<double>> x(64);
  for (auto &v : x) v = {dist(gen), dist(gen)};
  auto y = x;
  Fft(&y);
  for (size_t k = 0; k < 64; ++k) {
    std::complex<double> acc = 0;
    for (size_t n = 0; n < 64; ++n) acc += x[n] * std::polar(1.0, -2.0 * M_PI * k * n / 64.0);
    CHECK(std::abs(acc - y[k]) < 1e-10);
  }
}

TEST_CASE("config validation and sample-rate checks") {
  FbankConfig cfg;
  AudioBuffer b = NoisyTone(7.0, 1);
  b.sample_rate = 8000;
  CHECK_THROWS_AS(ExtractFbank(b, cfg), Error);
  try {
    ExtractFbank(b, cfg);
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::kSampleRateMismatch);
  }
  FbankConfig bad;
  bad.shift_ms = 30;
  CHECK_THROWS_AS(bad.Validate(), Error);
  bad = FbankConfig{};
  bad.fft_size = 256;
  CHECK_THROWS_AS(bad.Validate(), Error);
  CHECK(FbankConfig::FromJson(cfg.ToJson()) == cfg);
}

TEST_CASE("feature cache round trips and invalidates on config change") {
  TempDir dir("cache");
  FbankConfig cfg;
  cfg.max_seconds = 1.0;
  FeatureMatrix m = ComputeFeatures(NoisyTone(1.0, 8), cfg);
  {
    FeatureCache cache(dir.path(), cfg);
    CHECK(!cache.invalidated());
    CHECK(!cache.Get("spk1/utt 1").has_value());
    cache.Put("spk1/utt 1", m);
    auto back = cache.Get("spk1/utt 1");
    REQUIRE(back.has_value());
    CHECK(back->rows == m.rows);
    CHECK(back->cols == m.cols);
    CHECK(back->normalized);
    for (size_t i = 0; i < m.values.size(); ++i)
      REQUIRE(back->values[i] == static_cast<float>(m.values[i]));
  }
  {
    FeatureCache same(dir.path(), cfg);
    CHECK(!same.invalidated());
    CHECK(same.Get("spk1/utt 1").has_value());
  }
  cfg.n_bands = 40;
  FeatureCache changed(dir.path(), cfg);
  CHECK(changed.invalidated());
  CHECK(!changed.Get("spk1/utt 1").has_value());
  CHECK_THROWS_AS(FeatureCache::DecodeRecord("nope"), Error);
}

}  // namespace
}  // namespace crossemo
