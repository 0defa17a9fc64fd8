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

#include "speechforge/ctcseg/logprobs.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

namespace speechforge::ctcseg {
namespace {

constexpr char kMagic[4] = {'C', 'T', 'C', 'L'};
constexpr std::uint16_t kFlagNormalized = 1;
constexpr double kNormalizationTolerance = 1e-3;
// log-softmax outputs may overshoot zero by rounding noise
constexpr float kMaxLogProb = 1e-5f;

template <typename T>
T load_le(const std::byte* p) {
  using U = std::conditional_t<sizeof(T) == 2, std::uint16_t, std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>;
  U u = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<U>(std::to_integer<unsigned>(p[i])) << (8 * i);
  return std::bit_cast<T>(u);
}

template <typename T>
void store_le(std::vector<std::byte>& out, T value) {
  using U = std::conditional_t<sizeof(T) == 2, std::uint16_t, std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>;
  const U u = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::byte>((u >> (8 * i)) & 0xFF));
}

void check_shape(std::size_t frames, std::size_t vocab_size, double frame_duration) {
  if (frames < 1) throw CtcError(CtcErrc::kInvalidHeader, "log-prob matrix has no frames");
  if (vocab_size < 2) throw CtcError(CtcErrc::kInvalidHeader, "log-prob matrix needs at least two tokens");
  if (!(frame_duration > 0.0) || !std::isfinite(frame_duration)) {
    throw CtcError(CtcErrc::kInvalidHeader, "frame_duration must be positive and finite");
  }
}

}  // namespace

LogProbMatrix::LogProbMatrix(std::size_t frames, std::size_t vocab_size, double frame_duration,
                             std::vector<float> values, bool normalized)
    : frames_(frames), vocab_size_(vocab_size), frame_duration_(frame_duration), normalized_(normalized),
      values_(std::move(values)) {
  check_shape(frames, vocab_size, frame_duration);
  if (values_.size() != frames * vocab_size) {
    throw CtcError(CtcErrc::kInvalidHeader, "value count does not match T*V");
  }
}

LogProbMatrix parse_logprobs(std::span<const std::byte> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw CtcError(CtcErrc::kBadMagic, "not a CTCL log-prob file");
  }
  if (bytes.size() < kLogProbHeaderBytes) throw CtcError(CtcErrc::kTruncatedFile, "log-prob header is truncated");
  const auto* p = bytes.data();
  const auto version = load_le<std::uint16_t>(p + 4);
  if (version != kLogProbVersion) {
    throw CtcError(CtcErrc::kUnsupportedVersion, "unsupported log-prob version " + std::to_string(version));
  }
  const auto flags = load_le<std::uint16_t>(p + 6);
  const auto frames = load_le<std::uint64_t>(p + 8);
  const auto vocab = load_le<std::uint64_t>(p + 16);
  const auto frame_duration = load_le<double>(p + 24);

  std::uint64_t count = 0;
  std::uint64_t payload = 0;
  if (__builtin_mul_overflow(frames, vocab, &count) || __builtin_mul_overflow(count, std::uint64_t{4}, &payload) ||
      payload > std::numeric_limits<std::size_t>::max() - kLogProbHeaderBytes) {
    throw CtcError(CtcErrc::kDimensionOverflow, "T*V overflows");
  }
  check_shape(frames, vocab, frame_duration);
  if (bytes.size() - kLogProbHeaderBytes < payload) {
    throw CtcError(CtcErrc::kTruncatedFile, "log-prob file declares " + std::to_string(frames) + " frames but is truncated");
  }

  std::vector<float> values(count);
  const auto* data = p + kLogProbHeaderBytes;
  for (std::size_t i = 0; i < count; ++i) {
    const float v = load_le<float>(data + 4 * i);
    if (std::isnan(v) || v > kMaxLogProb) {
      throw CtcError(CtcErrc::kInvalidValue, "value at index " + std::to_string(i) + " is not a log-probability");
    }
    values[i] = v;
  }
  const bool normalized = (flags & kFlagNormalized) != 0;
  if (normalized) {
    for (std::size_t t = 0; t < frames; ++t) {
      double peak = -std::numeric_limits<double>::infinity();
      for (std::size_t v = 0; v < vocab; ++v) peak = std::max(peak, static_cast<double>(values[t * vocab + v]));
      double sum = 0.0;
      for (std::size_t v = 0; v < vocab; ++v) sum += std::exp(values[t * vocab + v] - peak);
      const double lse = peak + std::log(sum);
      if (!(std::abs(lse) <= kNormalizationTolerance)) {
        throw CtcError(CtcErrc::kInvalidValue, "frame " + std::to_string(t) + " is flagged normalized but log-sum-exp is " + std::to_string(lse));
      }
    }
  }
  return LogProbMatrix(frames, vocab, frame_duration, std::move(values), normalized);
}

LogProbMatrix read_logprobs(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CtcError(CtcErrc::kIo, "cannot open " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_logprobs(std::as_bytes(std::span<const char>(raw)));
}

std::vector<std::byte> serialize_logprobs(const LogProbMatrix& matrix) {
  std::vector<std::byte> out;
  out.reserve(kLogProbHeaderBytes + matrix.values().size() * 4);
  for (char c : kMagic) out.push_back(static_cast<std::byte>(c));
  store_le<std::uint16_t>(out, kLogProbVersion);
  store_le<std::uint16_t>(out, matrix.normalized() ? kFlagNormalized : 0);
  store_le<std::uint64_t>(out, matrix.frames());
  store_le<std::uint64_t>(out, matrix.vocab_size());
  store_le<double>(out, matrix.frame_duration());
  for (float v : matrix.values()) store_le<float>(out, v);
  return out;
}

void write_logprobs(const std::filesystem::path& path, const LogProbMatrix& matrix) {
  const auto bytes = serialize_logprobs(matrix);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CtcError(CtcErrc::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace speechforge::ctcseg
