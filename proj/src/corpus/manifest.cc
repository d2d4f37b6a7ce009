// src/corpus/manifest.cc

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
#include <sstream>

#include "crossemo/base/error.h"
#include "crossemo/corpus/corpus.h"

namespace crossemo {

std::string_view EmotionName(Emotion e) {
  switch (e) {
    case Emotion::kAngry: return "angry";
    case Emotion::kHappy: return "happy";
    case Emotion::kSad: return "sad";
    case Emotion::kNeutral: return "neutral";
  }
  return "unknown";
}

std::optional<Emotion> ParseEmotion(std::string_view name) {
  for (int i = 0; i < kNumEmotions; ++i) {
    const auto e = static_cast<Emotion>(i);
    if (EmotionName(e) == name) return e;
  }
  return std::nullopt;
}

std::string_view StyleName(Style s) {
  switch (s) {
    case Style::kActed: return "acted";
    case Style::kElicitedScripted: return "elicited-scripted";
    case Style::kElicitedImprovised: return "elicited-improvised";
    case Style::kNatural: return "natural";
  }
  return "unknown";
}

std::optional<Style> ParseStyle(std::string_view name) {
  for (Style s : {Style::kActed, Style::kElicitedScripted, Style::kElicitedImprovised,
                  Style::kNatural}) {
    if (StyleName(s) == name) return s;
  }
  return std::nullopt;
}

Json UtteranceRecord::ToJson() const {
  Json j{{"id", id},           {"audio_path", audio_path},     {"corpus", corpus},
         {"speaker", speaker}, {"style", std::string(StyleName(style))}};
  j["session"] = session ? Json(*session) : Json(nullptr);
  j["raw_labels"] = Json::object();
  for (const auto &[k, v] : raw_labels) j["raw_labels"][k] = v;
  j["emotion"] = emotion ? Json(std::string(EmotionName(*emotion))) : Json(nullptr);
  if (augmented) j["augmented"] = true;
  if (source_id) j["source_id"] = *source_id;
  return j;
}

UtteranceRecord UtteranceRecord::FromJson(const Json &j) {
  if (!j.is_object()) throw Error(ErrorCode::kMissingField, "record is not a JSON object");
  auto require_string = [&](const char *key) -> std::string {
    if (!j.contains(key) || !j[key].is_string())
      throw Error(ErrorCode::kMissingField, std::string("record missing field '") + key + "'");
    return j[key].get<std::string>();
  };
  UtteranceRecord r;
  r.id = require_string("id");
  r.audio_path = require_string("audio_path");
  r.corpus = require_string("corpus");
  r.speaker = require_string("speaker");
  const std::string style = require_string("style");
  const auto parsed_style = ParseStyle(style);
  if (!parsed_style)
    throw Error(ErrorCode::kUnknownStyle, "record '" + r.id + "' has unknown style '" + style + "'");
  r.style = *parsed_style;
  if (j.contains("session") && !j["session"].is_null()) {
    r.session = j["session"].is_string() ? j["session"].get<std::string>() : j["session"].dump();
  }
  if (j.contains("raw_labels") && j["raw_labels"].is_object()) {
    for (const auto &[k, v] : j["raw_labels"].items()) {
      if (!v.is_number())
        throw Error(ErrorCode::kMissingField, "raw label '" + k + "' of '" + r.id + "' not numeric");
      r.raw_labels[k] = v.get<double>();
    }
  }
  if (j.contains("emotion") && !j["emotion"].is_null()) {
    const std::string e = j["emotion"].get<std::string>();
    r.emotion = ParseEmotion(e);
    if (!r.emotion)
      throw Error(ErrorCode::kUnknownLabel, "record '" + r.id + "' has unknown emotion '" + e + "'");
  }
  r.augmented = j.value("augmented", false);
  if (j.contains("source_id") && j["source_id"].is_string())
    r.source_id = j["source_id"].get<std::string>();
  return r;
}

CorpusManifest::CorpusManifest(std::string name, std::vector<UtteranceRecord> records)
    : name_(std::move(name)), records_(std::move(records)) {
  for (size_t i = 0; i < records_.size(); ++i) {
    if (!index_.emplace(records_[i].id, i).second)
      throw Error(ErrorCode::kDuplicateId, "duplicate utterance id '" + records_[i].id + "'");
  }
}

std::map<Emotion, size_t> CorpusManifest::class_counts() const {
  std::map<Emotion, size_t> counts;
  for (const auto &r : records_) {
    if (r.emotion) ++counts[*r.emotion];
  }
  return counts;
}

const UtteranceRecord *CorpusManifest::Find(const std::string &id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &records_[it->second];
}

std::set<std::string> CorpusManifest::Ids() const {
  std::set<std::string> ids;
  for (const auto &r : records_) ids.insert(r.id);
  return ids;
}

std::vector<std::string> CorpusManifest::Speakers() const {
  std::set<std::string> s;
  for (const auto &r : records_) s.insert(r.speaker);
  return {s.begin(), s.end()};
}

std::vector<std::string> CorpusManifest::Sessions() const {
  std::set<std::string> s;
  for (const auto &r : records_) {
    if (r.session) s.insert(*r.session);
  }
  return {s.begin(), s.end()};
}

CorpusManifest CorpusManifest::Subset(const std::set<std::string> &ids, std::string name) const {
  std::vector<UtteranceRecord> out;
  for (const auto &r : records_) {
    if (ids.count(r.id)) out.push_back(r);
  }
  return CorpusManifest(name.empty() ? name_ : std::move(name), std::move(out));
}

std::string CorpusManifest::ToJsonLines() const {
  std::string out =
      Json{{"schema_version", kManifestSchemaVersion}, {"name", name_}}.dump() + "\n";
  for (const auto &r : records_) out += r.ToJson().dump() + "\n";
  return out;
}

CorpusManifest CorpusManifest::FromJsonLines(std::string_view text, std::string default_name) {
  std::string name = std::move(default_name);
  std::vector<UtteranceRecord> records;
  std::istringstream in{std::string(text)};
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); }))
      continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error &e) {
      throw Error(ErrorCode::kMissingField,
                  "manifest line " + std::to_string(line_no) + " is not valid JSON");
    }
    if (j.is_object() && j.contains("schema_version") && !j.contains("id")) {
      if (j["schema_version"] != kManifestSchemaVersion)
        throw Error(ErrorCode::kBadConfig,
                    "unsupported manifest schema version " + j["schema_version"].dump());
      name = j.value("name", name);
      continue;
    }
    try {
      records.push_back(UtteranceRecord::FromJson(j));
    } catch (const Error &e) {
      throw Error(e.code(), "line " + std::to_string(line_no) + ": " +
                                std::string(e.what()).substr(ErrorCodeName(e.code()).size() + 2));
    }
  }
  return CorpusManifest(std::move(name), std::move(records));
}

CorpusManifest LoadManifest(const std::filesystem::path &path) {
  return CorpusManifest::FromJsonLines(ReadFile(path), path.stem().string());
}

void SaveManifest(const CorpusManifest &manifest, const std::filesystem::path &path) {
  WriteFileAtomic(path, manifest.ToJsonLines());
}

CorpusManifest MergeManifests(const std::vector<CorpusManifest> &parts, std::string name) {
  std::vector<UtteranceRecord> all;
  for (const auto &p : parts) all.insert(all.end(), p.records().begin(), p.records().end());
  return CorpusManifest(std::move(name), std::move(all));
}

}  // namespace crossemo
