// include/crossemo/audio/audio.h

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

#ifndef CROSSEMO_AUDIO_AUDIO_H_
#define CROSSEMO_AUDIO_AUDIO_H_

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace crossemo {

/// Mono signal with amplitudes in [-1, 1].
struct AudioBuffer {
  std::vector<double> samples;
  int sample_rate = 16000;

  size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  double duration_seconds() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

/// Decodes RIFF/WAVE (PCM16 or float32, any channel count). Multichannel
/// input is downmixed by averaging channels.
AudioBuffer ReadWav(const std::filesystem::path &path);
AudioBuffer DecodeWav(std::string_view bytes);

/// Encodes as PCM16 little-endian mono. Samples are scaled by 32768, rounded
/// and clipped to [-32768, 32767], so 1.0 maps to 32767.
void WriteWav(const AudioBuffer &buffer, const std::filesystem::path &path);
std::string EncodeWav(const AudioBuffer &buffer);

enum class EffectKind { kSpeed, kVolume, kTempo, kBass, kTreble, kOverdrive };

std::string_view EffectKindName(EffectKind kind);
std::optional<EffectKind> ParseEffectKind(std::string_view name);

struct EffectSpec {
  EffectKind kind = EffectKind::kVolume;
  double factor = 1.0;
};

enum class ShelfBand { kBass, kTreble };

// Every effect below is a pure function of its arguments and hard-clips its
// output to [-1, 1].

AudioBuffer ApplyVolume(const AudioBuffer &buffer, double factor);

/// Resampling playback: factor > 1 shortens the signal and raises pitch.
/// Output length is round(n / factor). Kaiser-windowed sinc interpolation
/// with 32 zero crossings per side; the cutoff drops to 1/factor when
/// speeding up so the result stays band-limited.
AudioBuffer ApplySpeed(const AudioBuffer &buffer, double factor);

/// WSOLA time-scale modification (30 ms Hann frames, 50% overlap, +-7.5 ms
/// similarity search). Duration scales by 1/factor, pitch is kept.
AudioBuffer ApplyTempo(const AudioBuffer &buffer, double factor);

/// Second-order shelving biquad (bass corner 100 Hz, treble corner 3 kHz,
/// unit slope). |gain_db| must not exceed 20.
AudioBuffer ApplyShelf(const AudioBuffer &buffer, ShelfBand band, double gain_db);

/// Soft clip y = tanh(g x) / tanh(g), drive g = 1 + 9 min(factor, 1.5) / 1.5.
AudioBuffer ApplyOverdrive(const AudioBuffer &buffer, double factor);

/// Maps an augmentation factor in the recipe range onto shelf gain:
/// 12 (factor - 1.05) / 0.45 dB, clamped to +-12 dB.
double ShelfGainFromFactor(double factor);

double OverdriveDrive(double factor);

AudioBuffer ApplyEffect(const AudioBuffer &buffer, const EffectSpec &effect);

/// Shortest signal an effect may emit: one 26 ms analysis frame.
size_t MinimumEffectOutput(int sample_rate);

}  // namespace crossemo

#endif  // CROSSEMO_AUDIO_AUDIO_H_
