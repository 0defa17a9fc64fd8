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
#include <span>
#include <vector>

#include "speechforge/ctcseg/errors.hpp"

namespace speechforge::ctcseg {

// Frames x vocabulary natural-log probabilities from an external CTC model.
class LogProbMatrix {
 public:
  LogProbMatrix() = default;
  LogProbMatrix(std::size_t frames, std::size_t vocab_size, double frame_duration, std::vector<float> values,
                bool normalized = false);

  std::size_t frames() const { return frames_; }
  std::size_t vocab_size() const { return vocab_size_; }
  double frame_duration() const { return frame_duration_; }
  bool normalized() const { return normalized_; }

  float at(std::size_t t, std::size_t v) const { return values_[t * vocab_size_ + v]; }
  std::span<const float> row(std::size_t t) const { return {values_.data() + t * vocab_size_, vocab_size_}; }
  std::span<const float> values() const { return values_; }

  friend bool operator==(const LogProbMatrix&, const LogProbMatrix&) = default;

 private:
  std::size_t frames_ = 0;
  std::size_t vocab_size_ = 0;
  double frame_duration_ = 0.0;
  bool normalized_ = false;
  std::vector<float> values_;
};

// On-disk layout, little-endian:
//   "CTCL" | u16 version=1 | u16 flags (bit0: rows log-softmax normalized)
//   | u64 T | u64 V | f64 frame_duration | T*V f32 row-major
inline constexpr std::uint16_t kLogProbVersion = 1;
inline constexpr std::size_t kLogProbHeaderBytes = 32;

LogProbMatrix read_logprobs(const std::filesystem::path& path);
LogProbMatrix parse_logprobs(std::span<const std::byte> bytes);
void write_logprobs(const std::filesystem::path& path, const LogProbMatrix& matrix);
std::vector<std::byte> serialize_logprobs(const LogProbMatrix& matrix);

}  // namespace speechforge::ctcseg
