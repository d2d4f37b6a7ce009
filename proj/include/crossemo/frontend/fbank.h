// include/crossemo/frontend/fbank.h

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

#ifndef CROSSEMO_FRONTEND_FBANK_H_
#define CROSSEMO_FRONTEND_FBANK_H_

#include <complex>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "crossemo/audio/audio.h"
#include "crossemo/base/util.h"

namespace crossemo {

/// Log-Mel front-end settings. Defaults: 26 ms Hamming window, 9 ms shift,
/// 23 bands over 0..nyquist, 512-point FFT, power spectrum, natural log,
/// signal padded or truncated to 7.0 s.
struct FbankConfig {
  double window_ms = 26.0;
  double shift_ms = 9.0;
  int n_bands = 23;
  double max_seconds = 7.0;
  int sample_rate = 16000;
  int fft_size = 512;
  double log_floor = 1e-10;
  /// Z-norm per band instead of over the whole matrix.
  bool per_band_norm = false;

  int window_samples() const;
  int shift_samples() const;
  size_t target_samples() const;
  /// Frames produced from a fix_length-ed signal.
  int frames() const;

  /// Throws BadConfig when the invariants do not hold.
  void Validate() const;

  Json ToJson() const;
  static FbankConfig FromJson(const Json &j);
};

bool operator==(const FbankConfig &a, const FbankConfig &b);

/// Row-major frames x bands grid.
struct FeatureMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> values;
  bool normalized = false;

  FeatureMatrix() = default;
  FeatureMatrix(int r, int c, double fill = 0.0)
      : rows(r), cols(c), values(static_cast<size_t>(r) * c, fill) {}

  double &at(int r, int c) { return values[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return values[static_cast<size_t>(r) * cols + c]; }
};

/// floor((n - window) / shift) + 1 for n >= window, 0 otherwise.
int FrameCount(size_t n_samples, int window, int shift);

/// In-place iterative radix-2 FFT; size must be a power of two.
void Fft(std::vector<std::complex<double>> *data);

/// Triangular filters evenly spaced on the 2595 log10(1 + f / 700) scale.
class MelFilterbank {
 public:
  MelFilterbank(int n_bands, int fft_size, int sample_rate, double low_hz, double high_hz);

  int n_bands() const { return static_cast<int>(filters_.size()); }
  /// Weights over the fft_size / 2 + 1 power-spectrum bins.
  const std::vector<double> &filter(int band) const { return filters_[band]; }
  void Apply(const std::vector<double> &power, double *energies) const;

  static double HzToMel(double hz);
  static double MelToHz(double mel);

 private:
  std::vector<std::vector<double>> filters_;
};

AudioBuffer FixLength(const AudioBuffer &buffer, const FbankConfig &cfg);
FeatureMatrix ExtractFbank(const AudioBuffer &buffer, const FbankConfig &cfg);
FeatureMatrix ZNormPerFile(const FeatureMatrix &features, bool per_band = false);

/// FixLength -> ExtractFbank -> ZNormPerFile.
FeatureMatrix ComputeFeatures(const AudioBuffer &buffer, const FbankConfig &cfg);

/// Directory of per-utterance binary feature records plus a JSON sidecar
/// holding the FbankConfig that produced them. Opening the cache with a
/// different config discards the stored records.
class FeatureCache {
 public:
  FeatureCache(std::filesystem::path dir, const FbankConfig &cfg);

  std::optional<FeatureMatrix> Get(const std::string &utterance_id) const;
  void Put(const std::string &utterance_id, const FeatureMatrix &features) const;
  bool invalidated() const { return invalidated_; }

  static std::string EncodeRecord(const std::string &utterance_id, const FeatureMatrix &features);
  /// Returns the stored id alongside the matrix.
  static std::pair<std::string, FeatureMatrix> DecodeRecord(std::string_view bytes);

 private:
  std::filesystem::path RecordPath(const std::string &utterance_id) const;

  std::filesystem::path dir_;
  FbankConfig cfg_;
  bool invalidated_ = false;
};

}  // namespace crossemo

#endif  // CROSSEMO_FRONTEND_FBANK_H_
