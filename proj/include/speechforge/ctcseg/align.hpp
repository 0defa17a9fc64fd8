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
#include <span>
#include <vector>

#include "speechforge/ctcseg/logprobs.hpp"
#include "speechforge/ctcseg/vocabulary.hpp"

namespace speechforge::ctcseg {

// Log-probabilities are clamped here before any arithmetic; -inf and
// anything smaller become this value.
inline constexpr double kLogProbFloor = -30.0;

struct AlignParams {
  std::size_t window_frames = 8000;
  std::vector<std::size_t> window_set{8000, 10000, 12000};
  std::size_t score_window_chars = 30;
  std::size_t boundary_tolerance_frames = 0;
  double score_threshold = -2.0;
  TokenId blank_index = 0;

  // Throws CtcError(kInvalidParams).
  void validate() const;
};

struct AlignedSegment {
  std::size_t utterance_index = 0;
  std::size_t start_frame = 0;
  std::size_t end_frame = 0;
  double start_time = 0.0;
  double end_time = 0.0;
  double score = 0.0;
  std::vector<double> char_log_probs;
  // the best path touched the trellis band edge inside this utterance
  bool failed = false;

  friend bool operator==(const AlignedSegment&, const AlignedSegment&) = default;
};

// Character-level result of one trellis pass over the concatenated text.
struct TrellisPath {
  double log_prob = 0.0;                 // best A[M][t*]
  std::size_t end_frame = 0;             // t*
  std::vector<std::size_t> char_frames;  // advance frame of each character
  std::vector<double> char_log_probs;    // clamped logP[frame][char]
  // per character: its column touched a band edge, or the band cut its
  // advance off every optimal path of the full trellis
  std::vector<bool> band_edge;
  bool feasible = true;                  // false if no path fits inside the band

  friend bool operator==(const TrellisPath&, const TrellisPath&) = default;
};

// Banded Viterbi over (characters x frames). Column m admits frames in a
// window of `window_frames` centred on the best frame of column m-1; a
// window >= T degenerates to the full trellis. With a narrower window the
// path is checked against the full-trellis optimum in O(T) extra memory.
TrellisPath trellis_path(const LogProbMatrix& matrix, std::span<const TokenId> chars, std::size_t window_frames,
                         TokenId blank = 0);

// Reference full-table DP (frame-major, no band). Kept for tests and the
// benchmark; must agree bit-for-bit with trellis_path when window >= T.
TrellisPath trellis_path_unbanded(const LogProbMatrix& matrix, std::span<const TokenId> chars, TokenId blank = 0);

// Minimum over all contiguous runs of min(window, n) characters of their
// mean log-probability.
double confidence_score(std::span<const double> char_log_probs, std::size_t window);

std::vector<AlignedSegment> segments_from_path(const TrellisPath& path, std::span<const TokenSequence> utterances,
                                               double frame_duration, std::size_t score_window_chars);

// One banded pass with params.window_frames.
std::vector<AlignedSegment> align(const LogProbMatrix& matrix, std::span<const TokenSequence> utterances,
                                  const AlignParams& params);

// align_unbanded is the serial reference path used by tests.
std::vector<AlignedSegment> align_unbanded(const LogProbMatrix& matrix, std::span<const TokenSequence> utterances,
                                           const AlignParams& params);

// One run per entry of params.window_set, in that order. Windows run as
// parallel OpenMP tasks when `parallel` is set (and no enclosing region is
// already active); results are identical either way.
std::vector<std::vector<AlignedSegment>> align_windows(const LogProbMatrix& matrix,
                                                       std::span<const TokenSequence> utterances,
                                                       const AlignParams& params, bool parallel = true);

// Keeps segments that are non-failed in every run and whose start/end
// frames agree across runs within `tolerance`. Values come from runs[0].
std::vector<AlignedSegment> consensus(std::span<const std::vector<AlignedSegment>> runs, std::size_t tolerance);

}  // namespace speechforge::ctcseg
