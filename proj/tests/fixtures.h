// tests/fixtures.h

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

// Metadata-only manifests shaped like the published corpus statistics
// (class totals, session sizes, scripted/improvised counts). No audio.

#ifndef CROSSEMO_TESTS_FIXTURES_H_
#define CROSSEMO_TESTS_FIXTURES_H_

#include <cstdio>
#include <string>
#include <vector>

#include "crossemo/base/util.h"
#include "crossemo/corpus/corpus.h"

namespace crossemo::testing {

inline std::string Pad(int v, int width = 2) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%0*d", width, v);
  return buf;
}

/// Raw categorical labels: 1103 angry, 595 happy, 1041 excited, 1084 sad,
/// 1708 neutral (5531 usable) plus 300 frustrated. Session 5 holds 1241 of
/// the usable records; sessions 1-4 hold 4290, of which 2078 are scripted.
inline CorpusManifest PaperShapedIemocap() {
  std::vector<std::string> labels;
  auto add = [&](const char *label, int n) { labels.insert(labels.end(), n, label); };
  add("ang", 1103);
  add("hap", 595);
  add("exc", 1041);
  add("sad", 1084);
  add("neu", 1708);
  Rng rng(2021);
  rng.Shuffle(&labels);

  std::vector<UtteranceRecord> records;
  int scripted_left = 2078;
  for (size_t i = 0; i < labels.size(); ++i) {
    UtteranceRecord r;
    r.id = "iem_" + Pad(static_cast<int>(i), 5);
    r.audio_path = r.id + ".wav";
    r.corpus = "IEM";
    const int session = i < 1241 ? 5 : 1 + static_cast<int>(i % 4);
    r.session = "Ses" + Pad(session);
    r.speaker = *r.session + (i % 2 ? "M" : "F");
    if (session == 5) {
      r.style = i % 2 ? Style::kElicitedScripted : Style::kElicitedImprovised;
    } else if (scripted_left > 0) {
      r.style = Style::kElicitedScripted;
      --scripted_left;
    } else {
      r.style = Style::kElicitedImprovised;
    }
    r.raw_labels[labels[i]] = 1.0;
    records.push_back(std::move(r));
  }
  for (int i = 0; i < 300; ++i) {
    UtteranceRecord r;
    r.id = "iem_fru_" + Pad(i, 3);
    r.audio_path = r.id + ".wav";
    r.corpus = "IEM";
    r.session = "Ses" + Pad(1 + i % 5);
    r.speaker = *r.session + "F";
    r.style = Style::kElicitedImprovised;
    r.raw_labels["fru"] = 1.0;
    records.push_back(std::move(r));
  }
  return CorpusManifest("IEM", std::move(records));
}

/// Labelled single-speaker corpus with the given per-class counts
/// (angry, happy, sad, neutral).
inline CorpusManifest LabelledCorpus(const std::string &name, std::vector<int> per_class,
                                     int n_speakers = 1) {
  std::vector<UtteranceRecord> records;
  int k = 0;
  for (int c = 0; c < kNumEmotions; ++c) {
    for (int i = 0; i < per_class[c]; ++i, ++k) {
      UtteranceRecord r;
      r.id = name + "_" + Pad(k, 5);
      r.audio_path = r.id + ".wav";
      r.corpus = name;
      r.speaker = name + "_s" + Pad(k % n_speakers);
      r.style = Style::kActed;
      r.emotion = static_cast<Emotion>(c);
      records.push_back(std::move(r));
    }
  }
  return CorpusManifest(name, std::move(records));
}

/// 24 actors s00..s23, 28 utterances each (7 per class).
inline CorpusManifest RavdessLike() {
  std::vector<UtteranceRecord> records;
  for (int s = 0; s < 24; ++s) {
    for (int i = 0; i < 28; ++i) {
      UtteranceRecord r;
      r.id = "rav_s" + Pad(s) + "_" + Pad(i);
      r.audio_path = r.id + ".wav";
      r.corpus = "RAV";
      r.speaker = "s" + Pad(s);
      r.style = Style::kActed;
      r.emotion = static_cast<Emotion>(i % kNumEmotions);
      records.push_back(std::move(r));
    }
  }
  return CorpusManifest("RAV", std::move(records));
}

}  // namespace crossemo::testing

#endif  // CROSSEMO_TESTS_FIXTURES_H_
