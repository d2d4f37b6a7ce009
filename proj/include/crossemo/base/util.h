// include/crossemo/base/util.h

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

#ifndef CROSSEMO_BASE_UTIL_H_
#define CROSSEMO_BASE_UTIL_H_

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace crossemo {

using Json = nlohmann::json;

/// FNV-1a over bytes. Stable across platforms and runs.
uint64_t Fnv1a64(std::string_view bytes, uint64_t seed = 0xcbf29ce484222325ULL);

/// SplitMix64 finalizer; a good bijective mixer for 64-bit keys.
uint64_t Mix64(uint64_t x);

/// Hex digest of a JSON document's canonical (sorted-key, compact) dump.
std::string JsonDigest(const Json &doc);

/// Random source with platform-independent derived distributions.
/// std::uniform_real_distribution and friends are implementation-defined,
/// so only the raw engine output is used.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(Mix64(seed)) {}

  uint64_t NextU64() { return engine_(); }
  /// Uniform in [0, 1).
  double Uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  /// Uniform integer in [0, n).
  uint64_t Below(uint64_t n);
  double Normal();

  template <typename T>
  void Shuffle(std::vector<T> *items) {
    for (size_t i = items->size(); i > 1; --i) {
      size_t j = static_cast<size_t>(Below(i));
      std::swap((*items)[i - 1], (*items)[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// Writes to a sibling temp file and renames it over `path`, so readers
/// never observe a partially written file.
void WriteFileAtomic(const std::filesystem::path &path, std::string_view contents);

std::string ReadFile(const std::filesystem::path &path);

/// Parses JSON, accepting // and /* */ comments.
Json ParseJsonWithComments(std::string_view text);
Json LoadJsonFile(const std::filesystem::path &path);

}  // namespace crossemo

#endif  // CROSSEMO_BASE_UTIL_H_
