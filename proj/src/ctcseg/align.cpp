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

#include "speechforge/ctcseg/align.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <string>

#include <omp.h>

namespace speechforge::ctcseg {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double clamped(float v) { return v < kLogProbFloor ? kLogProbFloor : static_cast<double>(v); }

std::size_t first_argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

void check_inputs(const LogProbMatrix& matrix, std::span<const TokenId> chars, TokenId blank) {
  const auto vocab = static_cast<TokenId>(matrix.vocab_size());
  if (blank < 0 || blank >= vocab) throw CtcError(CtcErrc::kInvalidParams, "blank index outside the vocabulary");
  if (chars.empty()) throw CtcError(CtcErrc::kEmptyUtteranceList, "nothing to align");
  for (TokenId c : chars) {
    if (c < 0 || c >= vocab) throw CtcError(CtcErrc::kInvalidParams, "token id " + std::to_string(c) + " outside the vocabulary");
  }
  if (chars.size() > matrix.frames()) {
    throw CtcError(CtcErrc::kTextLongerThanAudio, std::to_string(chars.size()) + " characters cannot fit in " +
                                                      std::to_string(matrix.frames()) + " frames");
  }
}

// Follows advance decisions back from (M, end_frame). `advanced(m, t)` reports
// the decision stored for column m (1-based) at frame t.
template <typename Decision>
void backtrack(TrellisPath& path, std::span<const TokenId> chars, const LogProbMatrix& matrix, Decision advanced) {
  const std::size_t chars_count = chars.size();
  path.char_frames.assign(chars_count, 0);
  path.char_log_probs.assign(chars_count, 0.0);
  std::size_t m = chars_count;
  std::size_t t = path.end_frame;
  while (m >= 1) {
    if (advanced(m, t)) {
      path.char_frames[m - 1] = t;
      path.char_log_probs[m - 1] = clamped(matrix.at(t, static_cast<std::size_t>(chars[m - 1])));
      --m;
    }
    if (m == 0) break;
    --t;
  }
}

// Compares the banded path with the full trellis. Characters whose banded
// emission frame lies on no optimal path are marked; if the path is
// suboptimal but every emission is individually reachable, all are marked.
void mark_band_cuts(TrellisPath& path, const LogProbMatrix& matrix, std::span<const TokenId> chars,
                    std::size_t blank) {
  const std::size_t frames = matrix.frames();
  const std::size_t chars_count = chars.size();
  auto emit = [&](std::size_t t, std::size_t m) { return clamped(matrix.at(t, static_cast<std::size_t>(chars[m - 1]))); };
  auto hold = [&](std::size_t t, std::size_t m) { return std::max(clamped(matrix.at(t, blank)), emit(t, m)); };

  std::vector<double> before(chars_count, 0.0);
  std::vector<double> prev(frames, 0.0);
  std::vector<double> row(frames, kNegInf);
  for (std::size_t m = 1; m <= chars_count; ++m) {
    const std::size_t tm = path.char_frames[m - 1];
    before[m - 1] = m == 1 ? 0.0 : (tm == 0 ? kNegInf : prev[tm - 1]);
    for (std::size_t t = 0; t < frames; ++t) {
      const double from_prev = t == 0 ? (m == 1 ? 0.0 : kNegInf) : prev[t - 1];
      const double stay = t > 0 ? row[t - 1] + hold(t, m) : kNegInf;
      row[t] = std::max(stay, from_prev + emit(t, m));
    }
    std::swap(prev, row);
  }
  const double optimum = *std::max_element(prev.begin(), prev.end());
  const double tolerance = 1e-9 * std::max(1.0, std::abs(optimum));
  if (path.log_prob >= optimum - tolerance) return;

  // next holds the suffix scores of column m + 1; the last column may stop anywhere
  std::vector<double> next(frames, 0.0);
  bool marked = false;
  for (std::size_t m = chars_count; m >= 1; --m) {
    if (m < chars_count) {
      row[frames - 1] = kNegInf;
      for (std::size_t t = frames - 1; t-- > 0;) {
        row[t] = std::max(row[t + 1] + hold(t + 1, m), next[t + 1] + emit(t + 1, m + 1));
      }
    } else {
      std::fill(row.begin(), row.end(), 0.0);
    }
    const std::size_t tm = path.char_frames[m - 1];
    if (before[m - 1] + emit(tm, m) + row[tm] < optimum - tolerance) {
      path.band_edge[m - 1] = true;
      marked = true;
    }
    std::swap(next, row);
  }
  if (!marked) path.band_edge.assign(chars_count, true);
}

}  // namespace

void AlignParams::validate() const {
  if (window_frames < 2) throw CtcError(CtcErrc::kInvalidParams, "window_frames must be >= 2");
  if (window_set.empty()) throw CtcError(CtcErrc::kInvalidParams, "window_set must not be empty");
  for (std::size_t i = 0; i < window_set.size(); ++i) {
    if (window_set[i] < 2) throw CtcError(CtcErrc::kInvalidParams, "every window must be >= 2");
    if (i > 0 && window_set[i] <= window_set[i - 1]) {
      throw CtcError(CtcErrc::kInvalidParams, "window_set must be strictly ascending");
    }
  }
  if (score_window_chars < 1) throw CtcError(CtcErrc::kInvalidParams, "score_window_chars must be >= 1");
  if (!std::isfinite(score_threshold)) throw CtcError(CtcErrc::kInvalidParams, "score_threshold must be finite");
  if (blank_index < 0) throw CtcError(CtcErrc::kInvalidParams, "blank_index must be >= 0");
}

TrellisPath trellis_path(const LogProbMatrix& matrix, std::span<const TokenId> chars, std::size_t window_frames,
                         TokenId blank) {
  check_inputs(matrix, chars, blank);
  if (window_frames < 2) throw CtcError(CtcErrc::kInvalidParams, "window_frames must be >= 2");

  const std::size_t frames = matrix.frames();
  const std::size_t chars_count = chars.size();
  const std::size_t width = std::min(window_frames, frames);
  const auto blank_id = static_cast<std::size_t>(blank);

  std::vector<std::size_t> band_lo(chars_count);
  std::vector<std::uint8_t> advance(chars_count * width);
  std::vector<double> prev(width, 0.0);
  std::vector<double> cur(width, kNegInf);
  std::size_t prev_lo = 0;

  TrellisPath path;
  for (std::size_t m = 1; m <= chars_count; ++m) {
    const auto c = static_cast<std::size_t>(chars[m - 1]);

    std::size_t lo = 0;
    if (width < frames) {
      const std::size_t center = (m == 1) ? 0 : prev_lo + first_argmax(prev);
      const std::size_t half = width / 2;
      lo = std::min(center > half ? center - half : 0, frames - width);
    }
    band_lo[m - 1] = lo;

    std::uint8_t* decision = advance.data() + (m - 1) * width;
    for (std::size_t k = 0; k < width; ++k) {
      const std::size_t t = lo + k;
      double from_prev = kNegInf;
      if (m == 1) {
        from_prev = 0.0;  // untranscribed leading audio is free
      } else if (t >= 1 && t - 1 >= prev_lo && t - 1 < prev_lo + width) {
        from_prev = prev[t - 1 - prev_lo];
      }
      const double emit = clamped(matrix.at(t, c));
      const double hold = std::max(clamped(matrix.at(t, blank_id)), emit);
      const double adv = from_prev + emit;
      const double stay = k > 0 ? cur[k - 1] + hold : kNegInf;
      if (stay >= adv) {
        cur[k] = stay;
        decision[k] = 0;
      } else {
        cur[k] = adv;
        decision[k] = 1;
      }
    }
    std::swap(prev, cur);
    prev_lo = lo;

    if (*std::max_element(prev.begin(), prev.end()) == kNegInf) {
      path.feasible = false;
      path.log_prob = kNegInf;
      path.band_edge.assign(chars_count, true);
      return path;
    }
  }

  const std::size_t best = first_argmax(prev);
  path.log_prob = prev[best];
  path.end_frame = prev_lo + best;
  backtrack(path, chars, matrix, [&](std::size_t m, std::size_t t) {
    return advance[(m - 1) * width + (t - band_lo[m - 1])] != 0;
  });

  path.band_edge.assign(chars_count, false);
  if (width < frames) {
    for (std::size_t m = 1; m <= chars_count; ++m) {
      const std::size_t lo = band_lo[m - 1];
      const std::size_t first = path.char_frames[m - 1];
      const std::size_t last = (m < chars_count) ? path.char_frames[m] - 1 : path.end_frame;
      const bool lower = lo > 0 && first == lo;
      const bool upper = lo + width < frames && last == lo + width - 1;
      path.band_edge[m - 1] = lower || upper;
    }
    mark_band_cuts(path, matrix, chars, blank_id);
  }
  return path;
}

TrellisPath trellis_path_unbanded(const LogProbMatrix& matrix, std::span<const TokenId> chars, TokenId blank) {
  check_inputs(matrix, chars, blank);
  const std::size_t frames = matrix.frames();
  const std::size_t chars_count = chars.size();
  const auto blank_id = static_cast<std::size_t>(blank);

  // score[m][t], m = 0..M; row 0 is identically zero
  std::vector<double> score((chars_count + 1) * frames, kNegInf);
  std::vector<std::uint8_t> advance(chars_count * frames, 0);
  auto at = [&](std::size_t m, std::size_t t) -> double& { return score[m * frames + t]; };
  for (std::size_t t = 0; t < frames; ++t) at(0, t) = 0.0;

  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t m = 1; m <= chars_count; ++m) {
      const auto c = static_cast<std::size_t>(chars[m - 1]);
      double from_prev = kNegInf;
      if (t == 0) {
        if (m == 1) from_prev = 0.0;
      } else {
        from_prev = at(m - 1, t - 1);
      }
      const double emit = clamped(matrix.at(t, c));
      const double hold = std::max(clamped(matrix.at(t, blank_id)), emit);
      const double adv = from_prev + emit;
      const double stay = t > 0 ? at(m, t - 1) + hold : kNegInf;
      if (stay >= adv) {
        at(m, t) = stay;
      } else {
        at(m, t) = adv;
        advance[(m - 1) * frames + t] = 1;
      }
    }
  }

  TrellisPath path;
  const std::span<const double> last_row(score.data() + chars_count * frames, frames);
  const std::size_t best = first_argmax(last_row);
  path.log_prob = last_row[best];
  path.end_frame = best;
  backtrack(path, chars, matrix,
            [&](std::size_t m, std::size_t t) { return advance[(m - 1) * frames + t] != 0; });
  path.band_edge.assign(chars_count, false);
  return path;
}

double confidence_score(std::span<const double> char_log_probs, std::size_t window) {
  const std::size_t n = char_log_probs.size();
  if (n == 0) return 0.0;
  const std::size_t w = std::min(std::max<std::size_t>(window, 1), n);
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t start = 0; start + w <= n; ++start) {
    double sum = 0.0;
    for (std::size_t i = start; i < start + w; ++i) sum += char_log_probs[i];
    worst = std::min(worst, sum / static_cast<double>(w));
  }
  return worst;
}

std::vector<AlignedSegment> segments_from_path(const TrellisPath& path, std::span<const TokenSequence> utterances,
                                               double frame_duration, std::size_t score_window_chars) {
  std::vector<AlignedSegment> out;
  out.reserve(utterances.size());
  std::size_t offset = 0;
  for (std::size_t u = 0; u < utterances.size(); ++u) {
    const std::size_t n = utterances[u].size();
    AlignedSegment seg;
    seg.utterance_index = u;
    if (!path.feasible) {
      seg.failed = true;
      seg.score = kLogProbFloor;
    } else {
      seg.start_frame = path.char_frames[offset];
      seg.end_frame = path.char_frames[offset + n - 1];
      seg.char_log_probs.assign(path.char_log_probs.begin() + static_cast<std::ptrdiff_t>(offset),
                                path.char_log_probs.begin() + static_cast<std::ptrdiff_t>(offset + n));
      seg.score = confidence_score(seg.char_log_probs, score_window_chars);
      seg.failed = std::any_of(path.band_edge.begin() + static_cast<std::ptrdiff_t>(offset),
                               path.band_edge.begin() + static_cast<std::ptrdiff_t>(offset + n), [](bool b) { return b; });
    }
    seg.start_time = static_cast<double>(seg.start_frame) * frame_duration;
    seg.end_time = static_cast<double>(seg.end_frame + 1) * frame_duration;
    out.push_back(std::move(seg));
    offset += n;
  }
  return out;
}

namespace {

TokenSequence concatenate(std::span<const TokenSequence> utterances) {
  if (utterances.empty()) throw CtcError(CtcErrc::kEmptyUtteranceList, "no utterances to align");
  TokenSequence all;
  for (std::size_t u = 0; u < utterances.size(); ++u) {
    if (utterances[u].empty()) {
      throw CtcError(CtcErrc::kEmptyUtterance, "utterance " + std::to_string(u) + " has no tokens");
    }
    all.insert(all.end(), utterances[u].begin(), utterances[u].end());
  }
  return all;
}

}  // namespace

std::vector<AlignedSegment> align(const LogProbMatrix& matrix, std::span<const TokenSequence> utterances,
                                  const AlignParams& params) {
  params.validate();
  const auto chars = concatenate(utterances);
  const auto path = trellis_path(matrix, chars, params.window_frames, params.blank_index);
  return segments_from_path(path, utterances, matrix.frame_duration(), params.score_window_chars);
}

std::vector<AlignedSegment> align_unbanded(const LogProbMatrix& matrix, std::span<const TokenSequence> utterances,
                                           const AlignParams& params) {
  params.validate();
  const auto chars = concatenate(utterances);
  const auto path = trellis_path_unbanded(matrix, chars, params.blank_index);
  return segments_from_path(path, utterances, matrix.frame_duration(), params.score_window_chars);
}

std::vector<std::vector<AlignedSegment>> align_windows(const LogProbMatrix& matrix,
                                                       std::span<const TokenSequence> utterances,
                                                       const AlignParams& params, bool parallel) {
  params.validate();
  const auto chars = concatenate(utterances);
  check_inputs(matrix, chars, params.blank_index);

  const auto runs_count = static_cast<std::ptrdiff_t>(params.window_set.size());
  std::vector<std::vector<AlignedSegment>> runs(params.window_set.size());
  std::vector<std::exception_ptr> errors(params.window_set.size());
  const bool fork = parallel && !omp_in_parallel() && runs_count > 1;

#pragma omp parallel for schedule(static) if (fork)
  for (std::ptrdiff_t i = 0; i < runs_count; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    try {
      const auto path = trellis_path(matrix, chars, params.window_set[idx], params.blank_index);
      runs[idx] = segments_from_path(path, utterances, matrix.frame_duration(), params.score_window_chars);
    } catch (...) {
      errors[idx] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return runs;
}

std::vector<AlignedSegment> consensus(std::span<const std::vector<AlignedSegment>> runs, std::size_t tolerance) {
  std::vector<AlignedSegment> kept;
  if (runs.empty()) return kept;
  const std::size_t count = runs[0].size();
  for (const auto& run : runs) {
    if (run.size() != count) throw CtcError(CtcErrc::kMismatchedRunShapes, "alignment runs disagree on utterance count");
  }
  for (std::size_t i = 0; i < count; ++i) {
    bool ok = true;
    std::size_t start_lo = runs[0][i].start_frame;
    std::size_t start_hi = start_lo;
    std::size_t end_lo = runs[0][i].end_frame;
    std::size_t end_hi = end_lo;
    for (const auto& run : runs) {
      const auto& seg = run[i];
      if (seg.utterance_index != runs[0][i].utterance_index) {
        throw CtcError(CtcErrc::kMismatchedRunShapes, "alignment runs disagree on utterance order");
      }
      ok = ok && !seg.failed;
      start_lo = std::min(start_lo, seg.start_frame);
      start_hi = std::max(start_hi, seg.start_frame);
      end_lo = std::min(end_lo, seg.end_frame);
      end_hi = std::max(end_hi, seg.end_frame);
    }
    if (ok && start_hi - start_lo <= tolerance && end_hi - end_lo <= tolerance) kept.push_back(runs[0][i]);
  }
  return kept;
}

}  // namespace speechforge::ctcseg
