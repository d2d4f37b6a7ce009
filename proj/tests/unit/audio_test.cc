// tests/unit/audio_test.cc

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

#include <cstring>
#include <random>

#include "crossemo/audio/audio.h"
#include "crossemo/base/error.h"
#include "crossemo/base/util.h"
#include "doctest.h"
#include "test_util.h"

namespace crossemo {
namespace {

using testing::DominantFrequency;
using testing::MakeTone;
using testing::Rms;
using testing::TempDir;

// Hand-rolled RIFF writer so the decoder is checked against bytes it did
// not produce itself.
std::string RawWav(uint16_t format, uint16_t channels, uint32_t rate, uint16_t bits,
                   const std::string &payload) {
  std::string out = "RIFF";
  auto u32 = [&](uint32_t v) { out.append(reinterpret_cast<const char *>(&v), 4); };
  auto u16 = [&](uint16_t v) { out.append(reinterpret_cast<const char *>(&v), 2); };
  u32(static_cast<uint32_t>(36 + payload.size()));
  out += "WAVEfmt ";
  u32(16);
  u16(format);
  u16(channels);
  u32(rate);
  u32(rate * channels * bits / 8);
  u16(static_cast<uint16_t>(channels * bits / 8));
  u16(bits);
  out += "data";
  u32(static_cast<uint32_t>(payload.size()));
  out += payload;
  return out;
}

template <typename T>
std::string Pack(const std::vector<T> &values) {
  std::string s(values.size() * sizeof(T), '\0');
  std::memcpy(s.data(), values.data(), s.size());
  return s;
}

ErrorCode CodeOf(const std::function<void()> &fn) {
  try {
    fn();
  } catch (const Error &e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::kIoFailure;
}

TEST_CASE("ReadWav decodes silence, scales PCM16 and downmixes stereo") {
  TempDir dir("wav");
  const std::string silence = RawWav(1, 1, 16000, 16, std::string(32000, '\0'));
  WriteFileAtomic(dir / "silence.wav", silence);
  AudioBuffer b = ReadWav(dir / "silence.wav");
  CHECK(b.size() == 16000);
  CHECK(b.sample_rate == 16000);
  for (double s : b.samples) REQUIRE(s == 0.0);

  AudioBuffer half = DecodeWav(RawWav(1, 1, 16000, 16, Pack<int16_t>({16384})));
  CHECK(half.samples[0] == 0.5);

  AudioBuffer stereo = DecodeWav(RawWav(3, 2, 8000, 32, Pack<float>({0.4f, 0.0f, -1.0f, 1.0f})));
  REQUIRE(stereo.size() == 2);
  CHECK(stereo.sample_rate == 8000);
  CHECK(stereo.samples[0] == doctest::Approx(0.2).epsilon(1e-7));
  CHECK(stereo.samples[1] == 0.0);
}

TEST_CASE("DecodeWav rejects malformed, unsupported and empty inputs") {
  CHECK(CodeOf([] { DecodeWav("RIFX1234WAVE"); }) == ErrorCode::kMalformedHeader);
  CHECK(CodeOf([] { DecodeWav(RawWav(1, 1, 16000, 8, "ab")); }) ==
        ErrorCode::kUnsupportedEncoding);
  CHECK(CodeOf([] { DecodeWav(RawWav(0x55, 1, 16000, 16, "ab")); }) ==
        ErrorCode::kUnsupportedEncoding);
  CHECK(CodeOf([] { DecodeWav(RawWav(1, 1, 16000, 16, "")); }) == ErrorCode::kEmptyAudio);
  CHECK(CodeOf([] { ReadWav("/nonexistent/x.wav"); }) == ErrorCode::kIoFailure);
}

TEST_CASE("WriteWav round trip stays within one quantization step") {
  TempDir dir("wav_rt");
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  AudioBuffer b;
  for (int i = 0; i < 100; ++i) b.samples.push_back(dist(gen));
  b.samples.push_back(1.0);
  b.samples.push_back(-1.0);
  WriteWav(b, dir / "rt.wav");
  AudioBuffer back = ReadWav(dir / "rt.wav");
  REQUIRE(back.size() == b.size());
  for (size_t i = 0; i < b.size(); ++i)
    CHECK(std::abs(back.samples[i] - b.samples[i]) <= 1.0 / 32768.0);

  const std::string bytes = EncodeWav(b);
  int16_t last_but_one;
  std::memcpy(&last_but_one, bytes.data() + 44 + 2 * 100, 2);
  CHECK(last_but_one == 32767);

  CHECK(CodeOf([] { EncodeWav(AudioBuffer{}); }) == ErrorCode::kEmptyAudio);
  CHECK(CodeOf([&] { WriteWav(b, "/proc/definitely/not/here.wav"); }) == ErrorCode::kIoFailure);
}

TEST_CASE("ApplyVolume is linear gain with hard clipping") {
  AudioBuffer b;
  b.samples = {0.5, -0.25, 0.9};
  AudioBuffer half = ApplyVolume(b, 0.5);
  CHECK(half.samples[0] == 0.25);
  CHECK(half.samples[1] == -0.125);
  CHECK(ApplyVolume(b, 1.0).samples == b.samples);
  CHECK(ApplyVolume(b, 1.5).samples[2] == 1.0);
  CHECK(CodeOf([&] { ApplyVolume(b, 0.0); }) == ErrorCode::kNonPositiveFactor);
  CHECK(CodeOf([&] { ApplyVolume(b, -1.0); }) == ErrorCode::kNonPositiveFactor);

  // Inverse gain recovers unclipped samples.
  AudioBuffer quiet = MakeTone(300, 0.1, 0.3);
  AudioBuffer back = ApplyVolume(ApplyVolume(quiet, 1.37), 1.0 / 1.37);
  for (size_t i = 0; i < quiet.size(); ++i)
    CHECK(back.samples[i] == doctest::Approx(quiet.samples[i]).epsilon(1e-14));
}

TEST_CASE("ApplySpeed resamples duration and pitch") {
  AudioBuffer seven = MakeTone(440, 7.0);
  AudioBuffer fast = ApplySpeed(seven, 2.0);
  CHECK(std::abs(static_cast<long>(fast.size()) - 56000) <= 1);
  CHECK(fast.sample_rate == 16000);

  AudioBuffer same = ApplySpeed(seven, 1.0);
  REQUIRE(same.size() == seven.size());
  double err = 0.0;
  for (size_t i = 0; i < seven.size(); ++i) err += std::pow(same.samples[i] - seven.samples[i], 2);
  CHECK(std::sqrt(err / seven.size()) <= 1e-6);

  AudioBuffer shifted = ApplySpeed(MakeTone(440, 2.0), 1.5);
  const auto peak = DominantFrequency(shifted);
  CHECK(std::abs(peak.hz - 660.0) <= peak.bin_hz);

  CHECK(CodeOf([&] { ApplySpeed(seven, 0.0); }) == ErrorCode::kNonPositiveFactor);
  CHECK(CodeOf([] { ApplySpeed(MakeTone(440, 0.03), 1.5); }) == ErrorCode::kResultTooShort);
}

TEST_CASE("ApplyTempo keeps pitch while scaling duration") {
  AudioBuffer tone = MakeTone(440, 2.0);
  CHECK(ApplyTempo(tone, 1.0).samples == tone.samples);

  AudioBuffer quick = ApplyTempo(tone, 1.5);
  const long window = 480;
  CHECK(std::abs(static_cast<long>(quick.size()) - std::lround(32000 / 1.5)) <= window);
  const auto peak = DominantFrequency(quick);
  CHECK(std::abs(peak.hz - 440.0) <= peak.bin_hz);

  AudioBuffer seven(MakeTone(220, 7.0));
  AudioBuffer slow = ApplyTempo(seven, 0.8);
  CHECK(std::abs(static_cast<long>(slow.size()) - 140000) <= window);

  CHECK(CodeOf([&] { ApplyTempo(tone, -2.0); }) == ErrorCode::kNonPositiveFactor);
  CHECK(CodeOf([] { ApplyTempo(MakeTone(440, 0.03), 1.5); }) == ErrorCode::kResultTooShort);
}

TEST_CASE("ApplyShelf boosts only its band") {
  AudioBuffer x = MakeTone(1000, 0.5, 0.3);
  AudioBuffer flat = ApplyShelf(x, ShelfBand::kBass, 0.0);
  for (size_t i = 0; i < x.size(); ++i) CHECK(std::abs(flat.samples[i] - x.samples[i]) < 1e-9);

  // Steady-state RMS after the biquad transient has decayed.
  AudioBuffer low = MakeTone(50, 2.0, 0.2);
  AudioBuffer boosted = ApplyShelf(low, ShelfBand::kBass, 6.0);
  const double low_ratio = Rms(boosted.samples, 16000, 32000) / Rms(low.samples, 16000, 32000);
  CHECK(low_ratio == doctest::Approx(2.0).epsilon(0.10));

  AudioBuffer high = MakeTone(6000, 1.0, 0.2);
  AudioBuffer untouched = ApplyShelf(high, ShelfBand::kBass, 6.0);
  const double high_ratio = Rms(untouched.samples, 8000, 16000) / Rms(high.samples, 8000, 16000);
  CHECK(high_ratio == doctest::Approx(1.0).epsilon(0.05));

  AudioBuffer bright = ApplyShelf(high, ShelfBand::kTreble, 6.0);
  CHECK(Rms(bright.samples, 8000, 16000) / Rms(high.samples, 8000, 16000) > 1.8);

  CHECK(CodeOf([&] { ApplyShelf(x, ShelfBand::kTreble, 20.5); }) == ErrorCode::kGainOutOfRange);
  CHECK(ShelfGainFromFactor(1.05) == 0.0);
  CHECK(ShelfGainFromFactor(1.5) == doctest::Approx(12.0));
  CHECK(ShelfGainFromFactor(0.6) == doctest::Approx(-12.0));
  CHECK(ShelfGainFromFactor(3.0) == 12.0);
}

TEST_CASE("ApplyOverdrive is odd, normalized, monotone and bounded") {
  AudioBuffer b;
  b.samples = {0.0, 1.0, -1.0};
  for (double factor : {0.6, 1.0, 1.5, 4.0}) {
    AudioBuffer y = ApplyOverdrive(b, factor);
    CHECK(y.samples[0] == 0.0);
    CHECK(y.samples[1] == 1.0);
    CHECK(y.samples[2] == -1.0);
  }
  CHECK(OverdriveDrive(1.5) == 10.0);
  CHECK(OverdriveDrive(0.75) == 5.5);

  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  AudioBuffer pairs;
  for (int i = 0; i < 10000; ++i) {
    double a = dist(gen), c = dist(gen);
    if (a == c) c = std::nextafter(c, 2.0);
    pairs.samples.push_back(std::min(a, c));
    pairs.samples.push_back(std::max(a, c));
  }
  AudioBuffer y = ApplyOverdrive(pairs, 1.2);
  for (size_t i = 0; i < pairs.size(); i += 2) {
    REQUIRE(y.samples[i] < y.samples[i + 1]);
    // odd symmetry
    AudioBuffer neg;
    if (i < 20) {
      neg.samples = {-pairs.samples[i]};
      CHECK(ApplyOverdrive(neg, 1.2).samples[0] == -y.samples[i]);
    }
  }
  CHECK(CodeOf([&] { ApplyOverdrive(b, 0.0); }) == ErrorCode::kNonPositiveFactor);
}

TEST_CASE("every effect is deterministic and stays within [-1, 1]") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  AudioBuffer noise;
  for (int i = 0; i < 16000; ++i) noise.samples.push_back(dist(gen));
  for (EffectKind kind : {EffectKind::kSpeed, EffectKind::kVolume, EffectKind::kTempo,
                          EffectKind::kBass, EffectKind::kTreble, EffectKind::kOverdrive}) {
    for (double factor : {0.6, 1.05, 1.5}) {
      CAPTURE(EffectKindName(kind));
      CAPTURE(factor);
      AudioBuffer a = ApplyEffect(noise, {kind, factor});
      AudioBuffer b = ApplyEffect(noise, {kind, factor});
      CHECK(a.samples == b.samples);
      CHECK(a.sample_rate == noise.sample_rate);
      for (double s : a.samples) REQUIRE(std::abs(s) <= 1.0);
      if (kind != EffectKind::kSpeed && kind != EffectKind::kTempo)
        CHECK(a.size() == noise.size());
    }
  }
  CHECK(ParseEffectKind("overdrive") == EffectKind::kOverdrive);
  CHECK(!ParseEffectKind("reverb").has_value());
}

}  // namespace
}  // namespace crossemo
