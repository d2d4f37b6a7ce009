// include/crossemo/synth/synth.h

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

// Labelled emotional-speech-like corpora built from a harmonic source, a
// syllable envelope, vowel formants and additive noise. Emotion lives in
// the prosody (F0 level and slope, syllable rate and shape, noise level);
// speakers differ by F0 range and a formant scale.

#ifndef CROSSEMO_SYNTH_SYNTH_H_
#define CROSSEMO_SYNTH_SYNTH_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "crossemo/audio/audio.h"
#include "crossemo/base/util.h"
#include "crossemo/corpus/corpus.h"

namespace crossemo {

struct ClassSignature {
  Emotion emotion = Emotion::kNeutral;
  double f0_scale = 1.0;        // multiplies the speaker's base F0
  double f0_slope = 0.0;        // relative F0 change from start to end
  double syllable_rate = 3.5;   // Hz
  double envelope_power = 1.5;  // raised-cosine exponent, higher is more peaked
  double snr_db = 30.0;
};

struct SynthCorpusSpec {
  std::string name = "synthA";
  std::string speaker_prefix = "a";
  int n_speakers = 2;
  int utterances_per_class_per_speaker = 10;
  int classes = 4;
  double min_seconds = 1.5;
  double max_seconds = 2.5;
  uint64_t seed = 1;
  /// Speakers draw a formant scale in 1 +- spread.
  double speaker_timbre_spread = 0.08;
  /// Extra formant scale applied to every speaker: formants x (1 + shift).
  double timbre_shift = 0.0;
  /// Reverb decay time in seconds, 0 for a dry studio.
  double room_seconds = 0.0;
  int sample_rate = 16000;
  std::vector<ClassSignature> signatures = DefaultSignatures();

  static std::vector<ClassSignature> DefaultSignatures();
  /// The pinned corpus used by the end-to-end checks.
  static SynthCorpusSpec Reference();

  /// Throws BadConfig naming the offending field.
  void Validate() const;
  Json ToJson() const;
  static SynthCorpusSpec FromJson(const Json &j);
};

struct SpeakerTimbre {
  std::string id;
  double f0_hz = 150.0;
  double formant_scale = 1.0;
};

SpeakerTimbre MakeSpeaker(const SynthCorpusSpec &spec, int index);

/// The k-th utterance of class `class_index` for speaker `speaker`.
/// Deterministic in (seed, speaker index, class, k).
AudioBuffer SynthesizeUtterance(const SynthCorpusSpec &spec, int speaker, int class_index, int k);

/// Writes <out_dir>/wav/<id>.wav for every utterance and
/// <out_dir>/manifest.jsonl; audio paths in the manifest are relative to
/// out_dir. IoFailure when the directory cannot be written.
CorpusManifest GenerateCorpus(const SynthCorpusSpec &spec, const std::filesystem::path &out_dir);

/// Same class signatures and seed with disjoint speaker ids, formants
/// scaled by (1 + timbre_shift) and the given room.
SynthCorpusSpec DeriveShiftedCorpus(const SynthCorpusSpec &spec, double timbre_shift,
                                    double room_seconds = 0.0);

}  // namespace crossemo

#endif  // CROSSEMO_SYNTH_SYNTH_H_
