// src/frontend/fbank.cc

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

#include "crossemo/frontend/fbank.h"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "crossemo/base/error.h"

namespace crossemo {

int FbankConfig::window_samples() const {
  return static_cast<int>(std::lround(window_ms * 1e-3 * sample_rate));
}

int FbankConfig::shift_samples() const {
  return static_cast<int>(std::lround(shift_ms * 1e-3 * sample_rate));
}

size_t FbankConfig::target_samples() const {
  return static_cast<size_t>(std::llround(max_seconds * sample_rate));
}

int FbankConfig::frames() const {
  return FrameCount(target_samples(), window_samples(), shift_samples());
}

void FbankConfig::Validate() const {
  if (!(window_ms > shift_ms && shift_ms > 0))
    throw Error(ErrorCode::kBadConfig, "fbank requires window_ms > shift_ms > 0");
  if (n_bands < 1) throw Error(ErrorCode::kBadConfig, "fbank n_bands must be >= 1");
  if (sample_rate <= 0) throw Error(ErrorCode::kBadConfig, "fbank sample_rate must be positive");
  if (fft_size < window_samples() || (fft_size & (fft_size - 1)) != 0)
    throw Error(ErrorCode::kBadConfig,
                "fbank fft_size must be a power of two >= the window length");
  if (!(max_seconds > 0) || target_samples() < static_cast<size_t>(window_samples()))
    throw Error(ErrorCode::kBadConfig, "fbank max_seconds shorter than one window");
  if (!(log_floor > 0)) throw Error(ErrorCode::kBadConfig, "fbank log_floor must be positive");
}

Json FbankConfig::ToJson() const {
  return Json{{"window_ms", window_ms},       {"shift_ms", shift_ms},
              {"n_bands", n_bands},           {"max_seconds", max_seconds},
              {"sample_rate", sample_rate},   {"fft_size", fft_size},
              {"log_floor", log_floor},       {"per_band_norm", per_band_norm},
              {"window", "hamming"},          {"spectrum", "power"},
              {"mel_scale", "2595*log10(1+f/700)"}, {"log", "natural"}};
}

FbankConfig FbankConfig::FromJson(const Json &j) {
  FbankConfig c;
  c.window_ms = j.value("window_ms", c.window_ms);
  c.shift_ms = j.value("shift_ms", c.shift_ms);
  c.n_bands = j.value("n_bands", c.n_bands);
  c.max_seconds = j.value("max_seconds", c.max_seconds);
  c.sample_rate = j.value("sample_rate", c.sample_rate);
  c.fft_size = j.value("fft_size", c.fft_size);
  c.log_floor = j.value("log_floor", c.log_floor);
  c.per_band_norm = j.value("per_band_norm", c.per_band_norm);
  c.Validate();
  return c;
}

bool operator==(const FbankConfig &a, const FbankConfig &b) {
  return a.ToJson() == b.ToJson();
}

int FrameCount(size_t n_samples, int window, int shift) {
  if (n_samples < static_cast<size_t>(window)) return 0;
  return static_cast<int>((n_samples - window) / shift) + 1;
}

void Fft(std::vector<std::complex<double>> *data) {
  auto &a = *data;
  const size_t n = a.size();
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * M_PI / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (size_t k = 0; k < len / 2; ++k) {
        const auto u = a[i + k];
        const auto v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

double MelFilterbank::HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double MelFilterbank::MelToHz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank::MelFilterbank(int n_bands, int fft_size, int sample_rate, double low_hz,
                             double high_hz) {
  const int n_bins = fft_size / 2 + 1;
  const double mel_low = HzToMel(low_hz);
  const double mel_high = HzToMel(high_hz);
  const double step = (mel_high - mel_low) / (n_bands + 1);
  filters_.assign(n_bands, std::vector<double>(n_bins, 0.0));
  for (int m = 0; m < n_bands; ++m) {
    const double left = mel_low + m * step;
    const double center = left + step;
    const double right = center + step;
    for (int k = 0; k < n_bins; ++k) {
      const double mel = HzToMel(static_cast<double>(k) * sample_rate / fft_size);
      if (mel > left && mel < right) {
        filters_[m][k] = mel <= center ? (mel - left) / step : (right - mel) / step;
      }
    }
  }
}

void MelFilterbank::Apply(const std::vector<double> &power, double *energies) const {
  for (size_t m = 0; m < filters_.size(); ++m) {
    double acc = 0.0;
    const auto &f = filters_[m];
    for (size_t k = 0; k < f.size(); ++k) acc += f[k] * power[k];
    energies[m] = acc;
  }
}

AudioBuffer FixLength(const AudioBuffer &buffer, const FbankConfig &cfg) {
  AudioBuffer out;
  out.sample_rate = buffer.sample_rate;
  out.samples = buffer.samples;
  out.samples.resize(cfg.target_samples(), 0.0);
  return out;
}

FeatureMatrix ExtractFbank(const AudioBuffer &buffer, const FbankConfig &cfg) {
  cfg.Validate();
  if (buffer.sample_rate != cfg.sample_rate)
    throw Error(ErrorCode::kSampleRateMismatch,
                "buffer at " + std::to_string(buffer.sample_rate) + " Hz, config expects " +
                    std::to_string(cfg.sample_rate) + " Hz");
  const int win = cfg.window_samples();
  const int shift = cfg.shift_samples();
  const int n_frames = FrameCount(buffer.size(), win, shift);
  const int n_bins = cfg.fft_size / 2 + 1;

  // Filterbank and window depend only on the config.
  const MelFilterbank bank(cfg.n_bands, cfg.fft_size, cfg.sample_rate, 0.0,
                           cfg.sample_rate / 2.0);
  std::vector<double> window(win);
  for (int i = 0; i < win; ++i) window[i] = 0.54 - 0.46 * std::cos(2.0 * M_PI * i / (win - 1));

  FeatureMatrix out(n_frames, cfg.n_bands);
  std::vector<std::complex<double>> spectrum(cfg.fft_size);
  std::vector<double> power(n_bins);
  for (int f = 0; f < n_frames; ++f) {
    const double *frame = buffer.samples.data() + static_cast<size_t>(f) * shift;
    for (int i = 0; i < cfg.fft_size; ++i)
      spectrum[i] = i < win ? std::complex<double>(frame[i] * window[i], 0.0) : 0.0;
    Fft(&spectrum);
    for (int k = 0; k < n_bins; ++k) power[k] = std::norm(spectrum[k]);
    double *row = out.values.data() + static_cast<size_t>(f) * cfg.n_bands;
    bank.Apply(power, row);
    for (int m = 0; m < cfg.n_bands; ++m) row[m] = std::log(std::max(row[m], cfg.log_floor));
  }
  return out;
}

FeatureMatrix ZNormPerFile(const FeatureMatrix &features, bool per_band) {
  FeatureMatrix out = features;
  out.normalized = true;
  if (out.values.empty()) return out;

  // Extended-precision accumulation keeps the spread of a constant matrix
  // well below the degenerate-std threshold.
  auto normalize = [&](size_t begin, size_t count, size_t stride) {
    long double sum = 0.0L;
    for (size_t i = 0; i < count; ++i) sum += out.values[begin + i * stride];
    const auto mean = static_cast<double>(sum / static_cast<long double>(count));
    long double sq = 0.0L;
    for (size_t i = 0; i < count; ++i) {
      const long double d = out.values[begin + i * stride] - mean;
      sq += d * d;
    }
    const auto std_dev = static_cast<double>(std::sqrt(sq / static_cast<long double>(count)));
    for (size_t i = 0; i < count; ++i) {
      double &v = out.values[begin + i * stride];
      v = std_dev < 1e-12 ? 0.0 : (v - mean) / std_dev;
    }
  };

  if (per_band) {
    for (int c = 0; c < out.cols; ++c) normalize(static_cast<size_t>(c), out.rows, out.cols);
  } else {
    normalize(size_t{0}, out.values.size(), 1);
  }
  return out;
}

FeatureMatrix ComputeFeatures(const AudioBuffer &buffer, const FbankConfig &cfg) {
  if (buffer.empty()) throw Error(ErrorCode::kEmptyAudio, "cannot extract features from empty audio");
  return ZNormPerFile(ExtractFbank(FixLength(buffer, cfg), cfg), cfg.per_band_norm);
}

// ---------------------------------------------------------------------------
// FeatureCache

namespace {

constexpr char kRecordMagic[4] = {'C', 'E', 'F', 'B'};
constexpr uint32_t kRecordVersion = 1;
constexpr const char *kSidecarName = "fbank_config.json";

void PutU32(std::string *out, uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  out->append(b, 4);
}

uint32_t GetU32(std::string_view bytes, size_t *pos) {
  if (*pos + 4 > bytes.size()) throw Error(ErrorCode::kCacheMismatch, "truncated feature record");
  uint32_t v;
  std::memcpy(&v, bytes.data() + *pos, 4);
  *pos += 4;
  return v;
}

}  // namespace

FeatureCache::FeatureCache(std::filesystem::path dir, const FbankConfig &cfg)
    : dir_(std::move(dir)), cfg_(cfg) {
  namespace fs = std::filesystem;
  fs::create_directories(dir_);
  const fs::path sidecar = dir_ / kSidecarName;
  bool matches = false;
  if (fs::exists(sidecar)) {
    try {
      matches = LoadJsonFile(sidecar) == cfg_.ToJson();
    } catch (const Error &) {
      matches = false;
    }
    if (!matches) {
      for (const auto &entry : fs::directory_iterator(dir_)) {
        if (entry.path().extension() == ".fbk") fs::remove(entry.path());
      }
      invalidated_ = true;
    }
  }
  if (!matches) WriteFileAtomic(sidecar, cfg_.ToJson().dump(2) + "\n");
}

std::filesystem::path FeatureCache::RecordPath(const std::string &utterance_id) const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(Fnv1a64(utterance_id)));
  return dir_ / (std::string(buf) + ".fbk");
}

std::string FeatureCache::EncodeRecord(const std::string &utterance_id,
                                       const FeatureMatrix &features) {
  std::string out(kRecordMagic, 4);
  PutU32(&out, kRecordVersion);
  PutU32(&out, static_cast<uint32_t>(utterance_id.size()));
  out += utterance_id;
  PutU32(&out, static_cast<uint32_t>(features.rows));
  PutU32(&out, static_cast<uint32_t>(features.cols));
  out.push_back(features.normalized ? 1 : 0);
  for (double v : features.values) {
    const auto f = static_cast<float>(v);
    char b[4];
    std::memcpy(b, &f, 4);
    out.append(b, 4);
  }
  return out;
}

std::pair<std::string, FeatureMatrix> FeatureCache::DecodeRecord(std::string_view bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kRecordMagic, 4) != 0)
    throw Error(ErrorCode::kCacheMismatch, "bad feature record magic");
  size_t pos = 4;
  if (GetU32(bytes, &pos) != kRecordVersion)
    throw Error(ErrorCode::kCacheMismatch, "unsupported feature record version");
  const uint32_t id_len = GetU32(bytes, &pos);
  if (pos + id_len > bytes.size()) throw Error(ErrorCode::kCacheMismatch, "truncated record id");
  std::string id(bytes.substr(pos, id_len));
  pos += id_len;
  const auto rows = static_cast<int>(GetU32(bytes, &pos));
  const auto cols = static_cast<int>(GetU32(bytes, &pos));
  if (pos + 1 > bytes.size()) throw Error(ErrorCode::kCacheMismatch, "truncated record");
  FeatureMatrix m(rows, cols);
  m.normalized = bytes[pos++] != 0;
  if (pos + m.values.size() * 4 != bytes.size())
    throw Error(ErrorCode::kCacheMismatch, "record size does not match its shape");
  for (double &v : m.values) {
    float f;
    std::memcpy(&f, bytes.data() + pos, 4);
    pos += 4;
    v = f;
  }
  return {std::move(id), std::move(m)};
}

std::optional<FeatureMatrix> FeatureCache::Get(const std::string &utterance_id) const {
  const auto path = RecordPath(utterance_id);
  if (!std::filesystem::exists(path)) return std::nullopt;
  auto [id, m] = DecodeRecord(ReadFile(path));
  if (id != utterance_id) return std::nullopt;  // hash collision
  return m;
}

void FeatureCache::Put(const std::string &utterance_id, const FeatureMatrix &features) const {
  WriteFileAtomic(RecordPath(utterance_id), EncodeRecord(utterance_id, features));
}

}  // namespace crossemo
