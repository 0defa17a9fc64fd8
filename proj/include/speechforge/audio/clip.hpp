// Copyright 2026 The speechforge Authors
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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "speechforge/error.hpp"

namespace speechforge::audio {

enum class AudioErrc { kNotWav, kUnsupportedEncoding, kTruncatedData, kIo, kSegmentOutOfRange, kEmptyClip, kInvalidArgument };
using AudioError = CodedError<AudioErrc>;

struct ClipSource {
  std::filesystem::path path;
  std::size_t sample_offset = 0;
  friend bool operator==(const ClipSource&, const ClipSource&) = default;
};

// Mono float samples in [-1, 1].
struct AudioClip {
  std::vector<float> samples;
  int sample_rate = 16000;
  std::optional<ClipSource> source;

  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
  bool empty() const { return samples.empty(); }
};

// RIFF/WAVE, PCM16 or float32 (plain or WAVE_FORMAT_EXTENSIBLE). Channels are
// averaged; PCM16 is scaled by 1/32768.
AudioClip decode_wav(std::span<const std::byte> bytes);
AudioClip read_wav(const std::filesystem::path& path);

// 16-bit PCM mono; samples are rounded and clipped to int16.
std::vector<std::byte> encode_wav_pcm16(const AudioClip& clip);
void write_wav_pcm16(const std::filesystem::path& path, const AudioClip& clip);

std::int16_t to_pcm16(float sample);

}  // namespace speechforge::audio
