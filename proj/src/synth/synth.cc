// src/synth/synth.cc

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

#include "crossemo/synth/synth.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <set>

#include "crossemo/base/error.h"

namespace crossemo {

namespace {

// F1, F2, F3 in Hz for five vowels.
constexpr std::array<std::array<double, 3>, 5> kVowels = {{{730, 1090, 2440},
                                                           {530, 1840, 2480},
                                                           {270, 2290, 3010},
                                                           {570, 840, 2410},
                                                           {300, 870, 2240}}};
constexpr std::array<double, 3> kBandwidths = {90, 110, 160};
constexpr double kTopHarmonicHz = 7000.0;

void Bad(const std::string &field, const std::string &why) {
  throw Error(ErrorCode::kBadConfig, "synth spec field '" + field + "' " + why);
}

std::string TwoDigits(int v) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%02d", v);
  return buf;
}

std::string ShortName(Emotion e) { return std::string(EmotionName(e).substr(0, 3)); }

struct Resonator {
  double a1 = 0, a2 = 0, gain = 1, y1 = 0, y2 = 0;

  void Set(double hz, double bw, int sr) {
    const double r = std::exp(-M_PI * bw / sr);
    a1 = -2.0 * r * std::cos(2.0 * M_PI * hz / sr);
    a2 = r * r;
    gain = 1.0 + a1 + a2;  // unity gain at DC
  }
  double Step(double x) {
    const double y = gain * x - a1 * y1 - a2 * y2;
    y2 = y1;
    y1 = y;
    return y;
  }
};

struct Comb {
  std::vector<double> line;
  size_t pos = 0;
  double g = 0;
  double Step(double x) {
    const double y = line[pos];
    line[pos] = x + g * y;
    pos = (pos + 1) % line.size();
    return y;
  }
};

struct Allpass {
  std::vector<double> line;
  size_t pos = 0;
  double g = 0.7;
  double Step(double x) {
    const double d = line[pos];
    const double y = -g * x + d;
    line[pos] = x + g * y;
    pos = (pos + 1) % line.size();
    return y;
  }
};

// Schroeder reverberator; the output keeps the input length.
void AddRoom(std::vector<double> *x, double t60, int sr) {
  std::vector<Comb> combs;
  for (double ms : {29.7, 37.1, 41.1, 43.7}) {
    Comb c;
    c.line.assign(static_cast<size_t>(ms * sr / 1000.0), 0.0);
    c.g = std::pow(10.0, -3.0 * ms / 1000.0 / t60);
    combs.push_back(std::move(c));
  }
  std::vector<Allpass> passes;
  for (double ms : {5.0, 1.7}) {
    Allpass a;
    a.line.assign(static_cast<size_t>(ms * sr / 1000.0), 0.0);
    passes.push_back(std::move(a));
  }
  for (double &s : *x) {
    double wet = 0.0;
    for (auto &c : combs) wet += c.Step(s);
    wet *= 0.25;
    for (auto &a : passes) wet = a.Step(wet);
    s = 0.6 * s + 0.8 * wet;
  }
}

}  // namespace

std::vector<ClassSignature> SynthCorpusSpec::DefaultSignatures() {
  return {{Emotion::kAngry, 1.35, 0.0, 5.5, 0.6, 12.0},
          {Emotion::kHappy, 1.25, 0.5, 4.5, 1.0, 22.0},
          {Emotion::kSad, 0.85, -0.35, 2.5, 3.0, 30.0},
          {Emotion::kNeutral, 1.0, 0.0, 3.5, 1.5, 35.0}};
}

SynthCorpusSpec SynthCorpusSpec::Reference() {
  SynthCorpusSpec s;
  s.name = "synthA";
  s.speaker_prefix = "a";
  s.n_speakers = 2;
  s.utterances_per_class_per_speaker = 10;
  s.seed = 20260101;
  return s;
}

void SynthCorpusSpec::Validate() const {
  if (name.empty()) Bad("name", "must not be empty");
  if (speaker_prefix.empty()) Bad("speaker_prefix", "must not be empty");
  if (n_speakers < 1) Bad("n_speakers", "must be >= 1");
  if (utterances_per_class_per_speaker < 1) Bad("utterances_per_class_per_speaker", "must be >= 1");
  if (classes < 1 || classes > kNumEmotions) Bad("classes", "must lie in [1, 4]");
  if (static_cast<int>(signatures.size()) < classes)
    Bad("signatures", "must list at least `classes` entries");
  if (!(min_seconds > 0.5 && min_seconds <= 10.0)) Bad("min_seconds", "must lie in (0.5, 10]");
  if (!(max_seconds >= min_seconds && max_seconds <= 10.0))
    Bad("max_seconds", "must lie in [min_seconds, 10]");
  if (!(speaker_timbre_spread >= 0.0 && speaker_timbre_spread < 0.5))
    Bad("speaker_timbre_spread", "must lie in [0, 0.5)");
  if (!(timbre_shift > -0.5 && timbre_shift < 1.0)) Bad("timbre_shift", "must lie in (-0.5, 1)");
  if (!(room_seconds >= 0.0 && room_seconds <= 2.0)) Bad("room_seconds", "must lie in [0, 2]");
  if (sample_rate < 8000) Bad("sample_rate", "must be >= 8000");
  std::set<Emotion> seen;
  for (int c = 0; c < classes; ++c) {
    const auto &s = signatures[c];
    const std::string f = "signatures[" + std::to_string(c) + "]";
    if (!seen.insert(s.emotion).second) Bad(f + ".emotion", "repeats an earlier class");
    if (!(s.f0_scale > 0.2 && s.f0_scale < 3.0)) Bad(f + ".f0_scale", "must lie in (0.2, 3)");
    if (!(std::abs(s.f0_slope) < 1.5)) Bad(f + ".f0_slope", "must lie in (-1.5, 1.5)");
    if (!(s.syllable_rate > 0.5 && s.syllable_rate < 12.0))
      Bad(f + ".syllable_rate", "must lie in (0.5, 12)");
    if (!(s.envelope_power > 0.0 && s.envelope_power <= 10.0))
      Bad(f + ".envelope_power", "must lie in (0, 10]");
    if (!(s.snr_db >= -10.0 && s.snr_db <= 80.0)) Bad(f + ".snr_db", "must lie in [-10, 80]");
  }
}

Json SynthCorpusSpec::ToJson() const {
  Json sigs = Json::array();
  for (const auto &s : signatures)
    sigs.push_back({{"emotion", std::string(EmotionName(s.emotion))},
                    {"f0_scale", s.f0_scale},
                    {"f0_slope", s.f0_slope},
                    {"syllable_rate", s.syllable_rate},
                    {"envelope_power", s.envelope_power},
                    {"snr_db", s.snr_db}});
  return Json{{"name", name},
              {"speaker_prefix", speaker_prefix},
              {"n_speakers", n_speakers},
              {"utterances_per_class_per_speaker", utterances_per_class_per_speaker},
              {"classes", classes},
              {"min_seconds", min_seconds},
              {"max_seconds", max_seconds},
              {"seed", seed},
              {"speaker_timbre_spread", speaker_timbre_spread},
              {"timbre_shift", timbre_shift},
              {"room_seconds", room_seconds},
              {"sample_rate", sample_rate},
              {"signatures", sigs}};
}

SynthCorpusSpec SynthCorpusSpec::FromJson(const Json &j) {
  if (!j.is_object()) throw Error(ErrorCode::kBadConfig, "synth spec must be a JSON object");
  static const std::set<std::string> kKnown = {
      "name",        "speaker_prefix", "n_speakers",  "utterances_per_class_per_speaker",
      "classes",     "min_seconds",    "max_seconds", "seed",
      "speaker_timbre_spread", "timbre_shift", "room_seconds", "sample_rate", "signatures"};
  for (const auto &[key, _] : j.items())
    if (!kKnown.count(key)) Bad(key, "is not a known field");
  SynthCorpusSpec s;
  std::string field;
  try {
    auto get = [&](const char *key, auto *dst) {
      field = key;
      if (j.contains(key)) *dst = j.at(key).get<std::decay_t<decltype(*dst)>>();
    };
    get("name", &s.name);
    get("speaker_prefix", &s.speaker_prefix);
    get("n_speakers", &s.n_speakers);
    get("utterances_per_class_per_speaker", &s.utterances_per_class_per_speaker);
    get("classes", &s.classes);
    get("min_seconds", &s.min_seconds);
    get("max_seconds", &s.max_seconds);
    get("seed", &s.seed);
    get("speaker_timbre_spread", &s.speaker_timbre_spread);
    get("timbre_shift", &s.timbre_shift);
    get("room_seconds", &s.room_seconds);
    get("sample_rate", &s.sample_rate);
    if (j.contains("signatures")) {
      s.signatures.clear();
      int i = 0;
      for (const auto &sj : j.at("signatures")) {
        const std::string f = "signatures[" + std::to_string(i++) + "]";
        ClassSignature sig;
        field = f + ".emotion";
        const auto e = ParseEmotion(sj.at("emotion").get<std::string>());
        if (!e) Bad(field, "names no known emotion");
        sig.emotion = *e;
        field = f + ".f0_scale";
        sig.f0_scale = sj.value("f0_scale", sig.f0_scale);
        field = f + ".f0_slope";
        sig.f0_slope = sj.value("f0_slope", sig.f0_slope);
        field = f + ".syllable_rate";
        sig.syllable_rate = sj.value("syllable_rate", sig.syllable_rate);
        field = f + ".envelope_power";
        sig.envelope_power = sj.value("envelope_power", sig.envelope_power);
        field = f + ".snr_db";
        sig.snr_db = sj.value("snr_db", sig.snr_db);
        s.signatures.push_back(sig);
      }
    }
  } catch (const Json::exception &e) {
    Bad(field, std::string("has the wrong type (") + e.what() + ")");
  }
  s.Validate();
  return s;
}

SpeakerTimbre MakeSpeaker(const SynthCorpusSpec &spec, int index) {
  Rng rng(Mix64(spec.seed ^ Mix64(0x5eed0000ULL + static_cast<uint64_t>(index))));
  SpeakerTimbre t;
  t.id = spec.speaker_prefix + TwoDigits(index);
  t.f0_hz = rng.Uniform(100.0, 200.0);
  t.formant_scale = (1.0 + spec.speaker_timbre_spread * rng.Uniform(-1.0, 1.0)) *
                    (1.0 + spec.timbre_shift);
  return t;
}

AudioBuffer SynthesizeUtterance(const SynthCorpusSpec &spec, int speaker, int class_index, int k) {
  const ClassSignature &sig = spec.signatures.at(class_index);
  const SpeakerTimbre spk = MakeSpeaker(spec, speaker);
  Rng rng(Mix64(spec.seed ^ Mix64((static_cast<uint64_t>(speaker) << 40) ^
                                  (static_cast<uint64_t>(class_index) << 20) ^
                                  static_cast<uint64_t>(k))));
  const int sr = spec.sample_rate;
  const double seconds = rng.Uniform(spec.min_seconds, spec.max_seconds);
  const auto n = static_cast<size_t>(std::llround(seconds * sr));
  const double vibrato_phase = rng.Uniform(0.0, 2.0 * M_PI);
  const double nyquist_cap = std::min(kTopHarmonicHz, 0.45 * sr);

  std::vector<double> voiced(n, 0.0);
  std::array<Resonator, 3> formants;
  double theta = 0.0;
  double syllable_phase = rng.Uniform(0.0, 0.3);
  double rate = sig.syllable_rate * rng.Uniform(0.85, 1.15);
  int vowel = static_cast<int>(rng.Below(kVowels.size()));
  auto set_vowel = [&] {
    for (int f = 0; f < 3; ++f)
      formants[f].Set(std::min(kVowels[vowel][f] * spk.formant_scale, 0.45 * sr), kBandwidths[f], sr);
  };
  set_vowel();
  const size_t fade = static_cast<size_t>(0.02 * sr);
  for (size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sr;
    const double f0 = spk.f0_hz * sig.f0_scale * (1.0 + sig.f0_slope * (t / seconds - 0.5)) *
                      (1.0 + 0.03 * std::sin(2.0 * M_PI * 4.5 * t + vibrato_phase));
    theta += 2.0 * M_PI * f0 / sr;
    if (theta > 2.0 * M_PI) theta -= 2.0 * M_PI;
    // Harmonic sum with 1/k amplitudes via the Chebyshev sine recurrence.
    const int harmonics = std::max(1, static_cast<int>(nyquist_cap / f0));
    const double c2 = 2.0 * std::cos(theta);
    double prev = 0.0, cur = std::sin(theta), src = 0.0;
    for (int h = 1; h <= harmonics; ++h) {
      src += cur / h;
      const double next = c2 * cur - prev;
      prev = cur;
      cur = next;
    }
    syllable_phase += rate / sr;
    if (syllable_phase >= 1.0) {
      syllable_phase -= 1.0;
      rate = sig.syllable_rate * rng.Uniform(0.85, 1.15);
      vowel = static_cast<int>(rng.Below(kVowels.size()));
      set_vowel();
    }
    double env = std::pow(0.5 - 0.5 * std::cos(2.0 * M_PI * syllable_phase), sig.envelope_power);
    if (i < fade) env *= static_cast<double>(i) / fade;
    if (n - i <= fade) env *= static_cast<double>(n - i) / fade;
    double y = src * env;
    for (auto &f : formants) y = f.Step(y);
    voiced[i] = y;
  }

  double energy = 0.0;
  for (double v : voiced) energy += v * v;
  const double rms = std::sqrt(energy / std::max<size_t>(n, 1));
  const double noise_rms = rms / std::pow(10.0, sig.snr_db / 20.0);
  std::vector<double> x(n);
  for (size_t i = 0; i < n; ++i) x[i] = voiced[i] + noise_rms * rng.Normal();
  if (spec.room_seconds > 0.0) AddRoom(&x, spec.room_seconds, sr);

  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  AudioBuffer out;
  out.sample_rate = sr;
  out.samples.resize(n);
  const double scale = peak > 0.0 ? 0.7 / peak : 0.0;
  for (size_t i = 0; i < n; ++i) out.samples[i] = std::clamp(x[i] * scale, -1.0, 1.0);
  return out;
}

CorpusManifest GenerateCorpus(const SynthCorpusSpec &spec, const std::filesystem::path &out_dir) {
  spec.Validate();
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir / "wav", ec);
  if (ec) throw Error(ErrorCode::kIoFailure, "cannot create " + (out_dir / "wav").string() + ": " + ec.message());
  std::vector<UtteranceRecord> records;
  for (int s = 0; s < spec.n_speakers; ++s) {
    const SpeakerTimbre spk = MakeSpeaker(spec, s);
    for (int c = 0; c < spec.classes; ++c) {
      const Emotion e = spec.signatures[c].emotion;
      for (int k = 0; k < spec.utterances_per_class_per_speaker; ++k) {
        UtteranceRecord r;
        r.id = spec.name + "_" + spk.id + "_" + ShortName(e) + "_" + TwoDigits(k);
        r.audio_path = "wav/" + r.id + ".wav";
        r.corpus = spec.name;
        r.speaker = spk.id;
        r.style = Style::kActed;
        r.emotion = e;
        r.raw_labels[std::string(EmotionName(e))] = 1.0;
        WriteFileAtomic(out_dir / r.audio_path, EncodeWav(SynthesizeUtterance(spec, s, c, k)));
        records.push_back(std::move(r));
      }
    }
  }
  CorpusManifest manifest(spec.name, std::move(records));
  SaveManifest(manifest, out_dir / "manifest.jsonl");
  WriteFileAtomic(out_dir / "synth_spec.json", spec.ToJson().dump(2) + "\n");
  return manifest;
}

SynthCorpusSpec DeriveShiftedCorpus(const SynthCorpusSpec &spec, double timbre_shift,
                                    double room_seconds) {
  SynthCorpusSpec out = spec;
  out.name = spec.name + "_shifted";
  out.speaker_prefix = spec.speaker_prefix + "x";
  out.timbre_shift = timbre_shift;
  out.room_seconds = room_seconds;
  return out;
}

}  // namespace crossemo
