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
#include <utility>
#include <vector>

#include "speechforge/audio/clip.hpp"
#include "speechforge/ctcseg/align.hpp"

namespace speechforge::audio {

struct SignalOptions {
  double tail_window = 0.1;              // seconds
  double bandwidth_threshold_db = 50.0;  // below the spectral peak
  std::size_t welch_segment = 4096;      // capped at the clip length
};

struct SignalStats {
  int sample_rate = 0;
  double duration = 0.0;
  double peak_level = 0.0;  // dBFS
  double bandwidth = 0.0;   // Hz
  double tail_ma_ratio = 0.0;
};

inline constexpr double kSilenceDbfs = -120.0;

// 20*log10(max|x|), floored at kSilenceDbfs.
double peak_level_dbfs(std::span<const float> samples);

// mean|x| over the last `tail_samples` divided by mean|x| over everything;
// 0 for an all-zero clip.
double tail_ma_ratio(std::span<const float> samples, std::size_t tail_samples);

struct PowerSpectrum {
  std::vector<double> frequencies;  // Hz
  std::vector<double> power;        // one-sided density
};

// Welch estimate: Hann segments of min(segment, n) samples, 50% overlap,
// per-segment mean removed. Segment blocks are summed in parallel in a fixed
// order, so the result does not depend on the thread count.
PowerSpectrum welch_psd(std::span<const float> samples, int sample_rate, std::size_t segment);

// Highest frequency whose power is within threshold_db of the peak; 0 when
// the spectrum is identically zero.
double spectral_bandwidth(const PowerSpectrum& spectrum, double threshold_db);

// Throws AudioError(kEmptyClip).
SignalStats analyze_signal(const AudioClip& clip, const SignalOptions& options = {});

struct Spectrogram {
  std::size_t columns = 0;  // time frames
  std::size_t rows = 0;     // frequency bins
  std::vector<float> db;    // columns x rows, 20*log10(|X| + 1e-10)
  std::vector<double> time_axis;  // frame centres, seconds
  std::vector<double> freq_axis;  // Hz
  float at(std::size_t column, std::size_t row) const { return db[column * rows + row]; }
};

// Hann-windowed STFT. When more than max_columns frames would result the hop
// is widened until they fit. Columns are computed in parallel.
Spectrogram stft_spectrogram(std::span<const float> samples, int sample_rate, std::size_t window, std::size_t hop,
                             std::size_t max_columns);

struct ViewOptions {
  std::size_t max_points = 2000;
  double window = 0.025;  // seconds
  double hop = 0.010;     // seconds
  std::size_t max_columns = 1000;
};

struct RenderedViews {
  std::vector<std::pair<float, float>> envelope;  // (min, max) per bin
  Spectrogram spectrogram;
};

// Envelope bins split the samples as evenly as possible.
std::vector<std::pair<float, float>> waveform_envelope(std::span<const float> samples, std::size_t max_points);

RenderedViews render_views(const AudioClip& clip, const ViewOptions& options = {});

// Straight single-threaded versions, kept as the reference for tests and the
// benchmark.
namespace serial {
PowerSpectrum welch_psd(std::span<const float> samples, int sample_rate, std::size_t segment);
Spectrogram stft_spectrogram(std::span<const float> samples, int sample_rate, std::size_t window, std::size_t hop,
                             std::size_t max_columns);
}  // namespace serial

struct TimeSpan {
  double start = 0.0;
  double end = 0.0;
};

// Each output covers [start - padding, end + padding] clamped to the clip,
// using round(t * sample_rate) sample boundaries. Throws
// AudioError(kSegmentOutOfRange) for spans outside the clip.
std::vector<AudioClip> cut_segments(const AudioClip& clip, std::span<const TimeSpan> spans, double padding);
std::vector<AudioClip> cut_segments(const AudioClip& clip, std::span<const ctcseg::AlignedSegment> segments,
                                    double padding);

}  // namespace speechforge::audio
