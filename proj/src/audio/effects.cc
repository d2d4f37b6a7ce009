// src/audio/effects.cc

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
#include <array>
#include <cmath>
#include <string>

#include "crossemo/audio/audio.h"
#include "crossemo/base/error.h"

namespace crossemo {

namespace {

constexpr int kSincZeroCrossings = 32;
constexpr int kSincTableResolution = 512;  // entries per zero crossing
constexpr double kKaiserBeta = 8.6;

void ClipInPlace(std::vector<double> *samples) {
  for (double &s : *samples) s = std::clamp(s, -1.0, 1.0);
}

void RequirePositive(double factor, const char *what) {
  if (!(factor > 0.0) || !std::isfinite(factor))
    throw Error(ErrorCode::kNonPositiveFactor,
                std::string(what) + " factor must be positive, got " + std::to_string(factor));
}

// Kaiser-windowed sinc sampled on [0, kSincZeroCrossings] with
// kSincTableResolution points per unit; linear interpolation between entries.
class SincTable {
 public:
  SincTable() {
    const int n = kSincZeroCrossings * kSincTableResolution + 1;
    values_.resize(n + 1, 0.0);
    const double i0_beta = std::cyl_bessel_i(0.0, kKaiserBeta);
    for (int i = 0; i < n; ++i) {
      const double u = static_cast<double>(i) / kSincTableResolution;
      const double sinc = i == 0 ? 1.0 : std::sin(M_PI * u) / (M_PI * u);
      const double r = u / kSincZeroCrossings;
      const double window =
          std::cyl_bessel_i(0.0, kKaiserBeta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0_beta;
      values_[i] = sinc * window;
    }
    // Exact zeros at integer crossings keep integer-aligned resampling exact.
    for (int k = 1; k <= kSincZeroCrossings; ++k) values_[k * kSincTableResolution] = 0.0;
  }

  double operator()(double u) const {
    u = std::abs(u);
    if (u >= kSincZeroCrossings) return 0.0;
    const double pos = u * kSincTableResolution;
    const auto idx = static_cast<size_t>(pos);
    const double frac = pos - static_cast<double>(idx);
    return values_[idx] + frac * (values_[idx + 1] - values_[idx]);
  }

 private:
  std::vector<double> values_;
};

const SincTable &GetSincTable() {
  static const SincTable table;
  return table;
}

void CheckLength(size_t n, int sample_rate, const char *what) {
  if (n < MinimumEffectOutput(sample_rate))
    throw Error(ErrorCode::kResultTooShort,
                std::string(what) + " output of " + std::to_string(n) +
                    " samples is shorter than one analysis frame");
}

}  // namespace

std::string_view EffectKindName(EffectKind kind) {
  switch (kind) {
    case EffectKind::kSpeed: return "speed";
    case EffectKind::kVolume: return "volume";
    case EffectKind::kTempo: return "tempo";
    case EffectKind::kBass: return "bass";
    case EffectKind::kTreble: return "treble";
    case EffectKind::kOverdrive: return "overdrive";
  }
  return "unknown";
}

std::optional<EffectKind> ParseEffectKind(std::string_view name) {
  for (EffectKind k : {EffectKind::kSpeed, EffectKind::kVolume, EffectKind::kTempo,
                       EffectKind::kBass, EffectKind::kTreble, EffectKind::kOverdrive}) {
    if (EffectKindName(k) == name) return k;
  }
  return std::nullopt;
}

size_t MinimumEffectOutput(int sample_rate) {
  return static_cast<size_t>(std::lround(0.026 * sample_rate));
}

AudioBuffer ApplyVolume(const AudioBuffer &buffer, double factor) {
  RequirePositive(factor, "volume");
  AudioBuffer out = buffer;
  for (double &s : out.samples) s *= factor;
  ClipInPlace(&out.samples);
  return out;
}

AudioBuffer ApplySpeed(const AudioBuffer &buffer, double factor) {
  RequirePositive(factor, "speed");
  const size_t n_in = buffer.size();
  const auto n_out = static_cast<size_t>(std::llround(static_cast<double>(n_in) / factor));
  CheckLength(n_out, buffer.sample_rate, "speed");

  const SincTable &table = GetSincTable();
  const double cutoff = std::min(1.0, 1.0 / factor);
  const double half_width = kSincZeroCrossings / cutoff;
  const auto &x = buffer.samples;

  AudioBuffer out;
  out.sample_rate = buffer.sample_rate;
  out.samples.resize(n_out);
  for (size_t j = 0; j < n_out; ++j) {
    const double t = static_cast<double>(j) * factor;
    const auto lo = static_cast<long>(std::max(0.0, std::ceil(t - half_width)));
    const auto hi = static_cast<long>(
        std::min(static_cast<double>(n_in) - 1.0, std::floor(t + half_width)));
    double acc = 0.0;
    for (long k = lo; k <= hi; ++k) acc += x[k] * table(cutoff * (t - static_cast<double>(k)));
    out.samples[j] = cutoff * acc;
  }
  ClipInPlace(&out.samples);
  return out;
}

AudioBuffer ApplyTempo(const AudioBuffer &buffer, double factor) {
  RequirePositive(factor, "tempo");
  const size_t n_in = buffer.size();
  const auto target = static_cast<size_t>(std::llround(static_cast<double>(n_in) / factor));
  CheckLength(target, buffer.sample_rate, "tempo");
  if (factor == 1.0) return buffer;

  long win = std::lround(0.030 * buffer.sample_rate);
  win += win % 2;
  const long hop = win / 2;
  const long radius = std::lround(0.0075 * buffer.sample_rate);

  // Input in padded coordinates: `hop` leading zeros, zeros past the end.
  const auto &x = buffer.samples;
  auto at = [&](long i) -> double {
    const long j = i - hop;
    return (j >= 0 && j < static_cast<long>(n_in)) ? x[j] : 0.0;
  };

  std::vector<double> window(win);
  for (long i = 0; i < win; ++i) window[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / win);

  const long n_frames = static_cast<long>(target) / hop + 3;
  std::vector<double> out((n_frames + 2) * hop + win, 0.0);
  std::vector<double> natural(win);

  long prev = 0;
  for (long i = 0; i < win; ++i) out[i] += window[i] * at(i);
  for (long k = 1; k < n_frames; ++k) {
    const long nominal = std::lround(static_cast<double>(k * hop) * factor);
    for (long i = 0; i < win; ++i) natural[i] = at(prev + hop + i);

    auto score = [&](long cand) {
      double dot = 0.0, energy = 0.0;
      for (long i = 0; i < win; ++i) {
        const double v = at(cand + i);
        dot += v * natural[i];
        energy += v * v;
      }
      return dot / std::sqrt(energy + 1e-12);
    };

    long best = std::max(0L, nominal);
    double best_score = score(best);
    for (long delta = -radius; delta <= radius; ++delta) {
      const long cand = nominal + delta;
      if (cand < 0 || delta == 0) continue;
      const double s = score(cand);
      if (s > best_score) {
        best_score = s;
        best = cand;
      }
    }
    const long out_pos = k * hop;
    for (long i = 0; i < win; ++i) out[out_pos + i] += window[i] * at(best + i);
    prev = best;
  }

  AudioBuffer result;
  result.sample_rate = buffer.sample_rate;
  result.samples.assign(out.begin() + hop, out.begin() + hop + static_cast<long>(target));
  ClipInPlace(&result.samples);
  return result;
}

AudioBuffer ApplyShelf(const AudioBuffer &buffer, ShelfBand band, double gain_db) {
  if (!(std::abs(gain_db) <= 20.0))
    throw Error(ErrorCode::kGainOutOfRange,
                "shelf gain " + std::to_string(gain_db) + " dB exceeds +-20 dB");
  const double fs = buffer.sample_rate;
  const double corner = std::min(band == ShelfBand::kBass ? 100.0 : 3000.0, 0.45 * fs);

  // Audio EQ cookbook shelf, slope S = 1.
  const double a = std::pow(10.0, gain_db / 40.0);
  const double w0 = 2.0 * M_PI * corner / fs;
  const double cw = std::cos(w0);
  const double alpha = std::sin(w0) / 2.0 * std::sqrt(2.0);
  const double two_sqrt_a_alpha = 2.0 * std::sqrt(a) * alpha;

  std::array<double, 3> b{}, den{};
  if (band == ShelfBand::kBass) {
    b = {a * ((a + 1) - (a - 1) * cw + two_sqrt_a_alpha), 2 * a * ((a - 1) - (a + 1) * cw),
         a * ((a + 1) - (a - 1) * cw - two_sqrt_a_alpha)};
    den = {(a + 1) + (a - 1) * cw + two_sqrt_a_alpha, -2 * ((a - 1) + (a + 1) * cw),
           (a + 1) + (a - 1) * cw - two_sqrt_a_alpha};
  } else {
    b = {a * ((a + 1) + (a - 1) * cw + two_sqrt_a_alpha), -2 * a * ((a - 1) + (a + 1) * cw),
         a * ((a + 1) + (a - 1) * cw - two_sqrt_a_alpha)};
    den = {(a + 1) - (a - 1) * cw + two_sqrt_a_alpha, 2 * ((a - 1) - (a + 1) * cw),
           (a + 1) - (a - 1) * cw - two_sqrt_a_alpha};
  }
  for (double &v : b) v /= den[0];
  const double a1 = den[1] / den[0], a2 = den[2] / den[0];

  AudioBuffer out;
  out.sample_rate = buffer.sample_rate;
  out.samples.resize(buffer.size());
  double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
  for (size_t i = 0; i < buffer.size(); ++i) {
    const double x0 = buffer.samples[i];
    const double y0 = b[0] * x0 + b[1] * x1 + b[2] * x2 - a1 * y1 - a2 * y2;
    x2 = x1;
    x1 = x0;
    y2 = y1;
    y1 = y0;
    out.samples[i] = y0;
  }
  ClipInPlace(&out.samples);
  return out;
}

double OverdriveDrive(double factor) {
  return 1.0 + 9.0 * std::clamp(factor, 0.0, 1.5) / 1.5;
}

AudioBuffer ApplyOverdrive(const AudioBuffer &buffer, double factor) {
  RequirePositive(factor, "overdrive");
  const double g = OverdriveDrive(factor);
  const double norm = std::tanh(g);
  AudioBuffer out = buffer;
  for (double &s : out.samples) s = std::tanh(g * s) / norm;
  ClipInPlace(&out.samples);
  return out;
}

double ShelfGainFromFactor(double factor) {
  return std::clamp(12.0 * (factor - 1.05) / 0.45, -12.0, 12.0);
}

AudioBuffer ApplyEffect(const AudioBuffer &buffer, const EffectSpec &effect) {
  switch (effect.kind) {
    case EffectKind::kSpeed: return ApplySpeed(buffer, effect.factor);
    case EffectKind::kVolume: return ApplyVolume(buffer, effect.factor);
    case EffectKind::kTempo: return ApplyTempo(buffer, effect.factor);
    case EffectKind::kBass:
      RequirePositive(effect.factor, "bass");
      return ApplyShelf(buffer, ShelfBand::kBass, ShelfGainFromFactor(effect.factor));
    case EffectKind::kTreble:
      RequirePositive(effect.factor, "treble");
      return ApplyShelf(buffer, ShelfBand::kTreble, ShelfGainFromFactor(effect.factor));
    case EffectKind::kOverdrive: return ApplyOverdrive(buffer, effect.factor);
  }
  return buffer;
}

}  // namespace crossemo
