// tests/test_util.h

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

// Shared helpers and independent oracles for the test suites. Nothing here
// calls into the library's DSP code.

#ifndef CROSSEMO_TESTS_TEST_UTIL_H_
#define CROSSEMO_TESTS_TEST_UTIL_H_

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "crossemo/audio/audio.h"

namespace crossemo::testing {

inline AudioBuffer MakeTone(double hz, double seconds, double amplitude = 0.5,
                            int sample_rate = 16000) {
  AudioBuffer b;
  b.sample_rate = sample_rate;
  const auto n = static_cast<size_t>(std::llround(seconds * sample_rate));
  b.samples.resize(n);
  for (size_t i = 0; i < n; ++i)
    b.samples[i] = amplitude * std::sin(2.0 * M_PI * hz * static_cast<double>(i) / sample_rate);
  return b;
}

inline double Rms(const std::vector<double> &x, size_t begin, size_t end) {
  double acc = 0.0;
  for (size_t i = begin; i < end; ++i) acc += x[i] * x[i];
  return std::sqrt(acc / static_cast<double>(end - begin));
}

/// Naive-DFT peak search over a Hann-windowed segment from the middle of
/// the signal. Returns the peak frequency in Hz and the bin width.
struct Peak {
  double hz;
  double bin_hz;
};

inline Peak DominantFrequency(const AudioBuffer &b, size_t segment = 8192, double max_hz = 2000.0) {
  const size_t start = b.size() > segment ? (b.size() - segment) / 2 : 0;
  const size_t n = std::min(segment, b.size());
  const double bin_hz = static_cast<double>(b.sample_rate) / static_cast<double>(n);
  const auto max_bin = static_cast<size_t>(max_hz / bin_hz);
  size_t best = 0;
  double best_mag = -1.0;
  for (size_t k = 1; k <= max_bin; ++k) {
    double re = 0.0, im = 0.0;
    for (size_t i = 0; i < n; ++i) {
      const double w = 0.5 - 0.5 * std::cos(2.0 * M_PI * static_cast<double>(i) / n);
      const double ang = -2.0 * M_PI * static_cast<double>(k * i) / static_cast<double>(n);
      re += w * b.samples[start + i] * std::cos(ang);
      im += w * b.samples[start + i] * std::sin(ang);
    }
    const double mag = re * re + im * im;
    if (mag > best_mag) {
      best_mag = mag;
      best = k;
    }
  }
  return {static_cast<double>(best) * bin_hz, bin_hz};
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string &tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("crossemo_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir &) = delete;
  TempDir &operator=(const TempDir &) = delete;

  const std::filesystem::path &path() const { return path_; }
  std::filesystem::path operator/(const std::string &name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace crossemo::testing

#endif  // CROSSEMO_TESTS_TEST_UTIL_H_
