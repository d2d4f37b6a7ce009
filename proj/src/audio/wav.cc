// src/audio/wav.cc

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
#include <cmath>
#include <cstdint>
#include <cstring>

#include "crossemo/audio/audio.h"
#include "crossemo/base/error.h"
#include "crossemo/base/util.h"

namespace crossemo {

namespace {

constexpr uint16_t kFormatPcm = 1;
constexpr uint16_t kFormatFloat = 3;
constexpr uint16_t kFormatExtensible = 0xFFFE;

uint32_t ReadU32(const unsigned char *p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t ReadU16(const unsigned char *p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

void PutU32(std::string *out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out->push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void PutU16(std::string *out, uint16_t v) {
  out->push_back(static_cast<char>(v & 0xFF));
  out->push_back(static_cast<char>((v >> 8) & 0xFF));
}

}  // namespace

AudioBuffer DecodeWav(std::string_view bytes) {
  const auto *data = reinterpret_cast<const unsigned char *>(bytes.data());
  const size_t size = bytes.size();
  if (size < 12 || std::memcmp(data, "RIFF", 4) != 0 || std::memcmp(data + 8, "WAVE", 4) != 0)
    throw Error(ErrorCode::kMalformedHeader, "not a RIFF/WAVE stream");

  bool have_fmt = false;
  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t sample_rate = 0;
  const unsigned char *pcm = nullptr;
  size_t pcm_bytes = 0;

  size_t pos = 12;
  while (pos + 8 <= size) {
    const unsigned char *chunk = data + pos;
    const uint32_t chunk_size = ReadU32(chunk + 4);
    const size_t body = pos + 8;
    const size_t avail = std::min<size_t>(chunk_size, size - body);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (avail < 16) throw Error(ErrorCode::kMalformedHeader, "fmt chunk too short");
      format = ReadU16(data + body);
      channels = ReadU16(data + body + 2);
      sample_rate = ReadU32(data + body + 4);
      bits = ReadU16(data + body + 14);
      if (format == kFormatExtensible) {
        if (avail < 26) throw Error(ErrorCode::kMalformedHeader, "extensible fmt chunk too short");
        // First two bytes of the sub-format GUID carry the real format tag.
        format = ReadU16(data + body + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      pcm = data + body;
      pcm_bytes = avail;
    }
    pos = body + chunk_size + (chunk_size & 1);
  }

  if (!have_fmt) throw Error(ErrorCode::kMalformedHeader, "missing fmt chunk");
  if (pcm == nullptr) throw Error(ErrorCode::kMalformedHeader, "missing data chunk");
  if (channels == 0 || sample_rate == 0)
    throw Error(ErrorCode::kMalformedHeader, "zero channels or sample rate");

  const bool is_pcm16 = format == kFormatPcm && bits == 16;
  const bool is_float32 = format == kFormatFloat && bits == 32;
  if (!is_pcm16 && !is_float32)
    throw Error(ErrorCode::kUnsupportedEncoding,
                "format tag " + std::to_string(format) + " with " + std::to_string(bits) +
                    " bits per sample");

  const size_t bytes_per_sample = bits / 8;
  const size_t frame_bytes = bytes_per_sample * channels;
  const size_t n_frames = pcm_bytes / frame_bytes;
  if (n_frames == 0) throw Error(ErrorCode::kEmptyAudio, "no samples in data chunk");

  AudioBuffer out;
  out.sample_rate = static_cast<int>(sample_rate);
  out.samples.resize(n_frames);
  for (size_t f = 0; f < n_frames; ++f) {
    double acc = 0.0;
    for (size_t c = 0; c < channels; ++c) {
      const unsigned char *p = pcm + f * frame_bytes + c * bytes_per_sample;
      if (is_pcm16) {
        acc += static_cast<int16_t>(ReadU16(p)) / 32768.0;
      } else {
        uint32_t raw = ReadU32(p);
        float v;
        std::memcpy(&v, &raw, sizeof(v));
        acc += std::isfinite(v) ? std::clamp(static_cast<double>(v), -1.0, 1.0) : 0.0;
      }
    }
    out.samples[f] = acc / channels;
  }
  return out;
}

AudioBuffer ReadWav(const std::filesystem::path &path) {
  if (!std::filesystem::exists(path))
    throw Error(ErrorCode::kIoFailure, "no such file: " + path.string());
  return DecodeWav(ReadFile(path));
}

std::string EncodeWav(const AudioBuffer &buffer) {
  if (buffer.empty()) throw Error(ErrorCode::kEmptyAudio, "refusing to write empty buffer");
  const uint32_t data_bytes = static_cast<uint32_t>(buffer.size() * 2);
  std::string out;
  out.reserve(44 + data_bytes);
  out.append("RIFF");
  PutU32(&out, 36 + data_bytes);
  out.append("WAVE");
  out.append("fmt ");
  PutU32(&out, 16);
  PutU16(&out, kFormatPcm);
  PutU16(&out, 1);
  PutU32(&out, static_cast<uint32_t>(buffer.sample_rate));
  PutU32(&out, static_cast<uint32_t>(buffer.sample_rate) * 2);
  PutU16(&out, 2);
  PutU16(&out, 16);
  out.append("data");
  PutU32(&out, data_bytes);
  for (double s : buffer.samples) {
    const double scaled = std::nearbyint(s * 32768.0);
    const auto q = static_cast<int16_t>(std::clamp(scaled, -32768.0, 32767.0));
    PutU16(&out, static_cast<uint16_t>(q));
  }
  return out;
}

void WriteWav(const AudioBuffer &buffer, const std::filesystem::path &path) {
  WriteFileAtomic(path, EncodeWav(buffer));
}

}  // namespace crossemo
