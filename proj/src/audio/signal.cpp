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

#include "speechforge/audio/signal.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <string>

#include "speechforge/audio/fft.hpp"

namespace speechforge::audio {
namespace {

// Welch segments are summed in blocks of this many; the block layout is
// independent of the thread count.
constexpr std::size_t kWelchBlock = 32;

struct WelchPlan {
  std::size_t segment = 0;
  std::size_t hop = 0;
  std::size_t count = 0;
  std::vector<double> window;
  double scale = 0.0;
};

WelchPlan plan_welch(std::size_t n, int sample_rate, std::size_t segment) {
  WelchPlan plan;
  plan.segment = std::max<std::size_t>(1, std::min(segment, n));
  plan.hop = std::max<std::size_t>(1, plan.segment / 2);
  plan.count = (n - plan.segment) / plan.hop + 1;
  plan.window = hann_window(plan.segment);
  const double energy = std::inner_product(plan.window.begin(), plan.window.end(), plan.window.begin(), 0.0);
  plan.scale = 1.0 / (sample_rate * energy);
  return plan;
}

// Adds the one-sided periodogram of segment `index` into `acc`.
void accumulate_segment(std::span<const float> samples, const WelchPlan& plan, const RealFft& fft, std::size_t index,
                        std::vector<double>& buffer, std::vector<std::complex<double>>& spectrum,
                        std::vector<double>& acc) {
  const std::size_t start = index * plan.hop;
  double mean = 0.0;
  for (std::size_t i = 0; i < plan.segment; ++i) mean += samples[start + i];
  mean /= static_cast<double>(plan.segment);
  for (std::size_t i = 0; i < plan.segment; ++i) buffer[i] = (samples[start + i] - mean) * plan.window[i];
  fft.forward(buffer, spectrum);
  const std::size_t bins = spectrum.size();
  for (std::size_t k = 0; k < bins; ++k) {
    double p = std::norm(spectrum[k]) * plan.scale;
    const bool edge = k == 0 || (plan.segment % 2 == 0 && k == bins - 1);
    if (!edge) p *= 2.0;
    acc[k] += p;
  }
}

PowerSpectrum finish_welch(const WelchPlan& plan, int sample_rate, std::vector<double> sum) {
  PowerSpectrum out;
  out.power = std::move(sum);
  for (auto& p : out.power) p /= static_cast<double>(plan.count);
  out.frequencies.resize(out.power.size());
  for (std::size_t k = 0; k < out.frequencies.size(); ++k) {
    out.frequencies[k] = static_cast<double>(k) * sample_rate / static_cast<double>(plan.segment);
  }
  return out;
}

struct StftPlan {
  std::size_t window = 0;
  std::size_t hop = 0;
  std::size_t columns = 0;
};

StftPlan plan_stft(std::size_t n, std::size_t window, std::size_t hop, std::size_t max_columns) {
  StftPlan plan;
  plan.window = std::max<std::size_t>(1, window);
  plan.hop = std::max<std::size_t>(1, hop);
  const std::size_t cap = std::max<std::size_t>(1, max_columns);
  if (n <= plan.window) {
    plan.columns = 1;
    return plan;
  }
  const std::size_t span = n - plan.window;
  if (span / plan.hop + 1 > cap) plan.hop = cap == 1 ? span + 1 : (span + cap - 2) / (cap - 1);
  plan.columns = span / plan.hop + 1;
  return plan;
}

Spectrogram make_spectrogram_shell(const StftPlan& plan, int sample_rate) {
  Spectrogram s;
  s.columns = plan.columns;
  s.rows = plan.window / 2 + 1;
  s.db.assign(s.columns * s.rows, 0.0f);
  s.time_axis.resize(s.columns);
  for (std::size_t c = 0; c < s.columns; ++c) {
    s.time_axis[c] = (static_cast<double>(c * plan.hop) + plan.window / 2.0) / sample_rate;
  }
  s.freq_axis.resize(s.rows);
  for (std::size_t k = 0; k < s.rows; ++k) s.freq_axis[k] = static_cast<double>(k) * sample_rate / plan.window;
  return s;
}

void stft_column(std::span<const float> samples, const StftPlan& plan, const std::vector<double>& window,
                 const RealFft& fft, std::size_t column, std::vector<double>& buffer,
                 std::vector<std::complex<double>>& spectrum, Spectrogram& out) {
  const std::size_t start = column * plan.hop;
  for (std::size_t i = 0; i < plan.window; ++i) {
    const std::size_t idx = start + i;
    buffer[i] = idx < samples.size() ? samples[idx] * window[i] : 0.0;
  }
  fft.forward(buffer, spectrum);
  float* row = out.db.data() + column * out.rows;
  for (std::size_t k = 0; k < out.rows; ++k) row[k] = static_cast<float>(20.0 * std::log10(std::abs(spectrum[k]) + 1e-10));
}

}  // namespace

double peak_level_dbfs(std::span<const float> samples) {
  float peak = 0.0f;
  for (float s : samples) peak = std::max(peak, std::abs(s));
  if (peak <= 0.0f) return kSilenceDbfs;
  return std::max(kSilenceDbfs, 20.0 * std::log10(static_cast<double>(peak)));
}

double tail_ma_ratio(std::span<const float> samples, std::size_t tail_samples) {
  if (samples.empty()) return 0.0;
  const std::size_t tail = std::clamp<std::size_t>(tail_samples, 1, samples.size());
  double total = 0.0;
  for (float s : samples) total += std::abs(s);
  if (total == 0.0) return 0.0;
  double tail_sum = 0.0;
  for (std::size_t i = samples.size() - tail; i < samples.size(); ++i) tail_sum += std::abs(samples[i]);
  return (tail_sum / static_cast<double>(tail)) / (total / static_cast<double>(samples.size()));
}

PowerSpectrum welch_psd(std::span<const float> samples, int sample_rate, std::size_t segment) {
  if (samples.empty()) throw AudioError(AudioErrc::kEmptyClip, "cannot estimate the spectrum of an empty clip");
  const auto plan = plan_welch(samples.size(), sample_rate, segment);
  const RealFft fft(plan.segment);
  const std::size_t bins = fft.bins();
  const std::size_t blocks = (plan.count + kWelchBlock - 1) / kWelchBlock;
  std::vector<std::vector<double>> partial(blocks, std::vector<double>(bins, 0.0));

#pragma omp parallel
  {
    std::vector<double> buffer(plan.segment);
    std::vector<std::complex<double>> spectrum(bins);
#pragma omp for schedule(static)
    for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(blocks); ++b) {
      const auto first = static_cast<std::size_t>(b) * kWelchBlock;
      const auto last = std::min(plan.count, first + kWelchBlock);
      for (std::size_t s = first; s < last; ++s) {
        accumulate_segment(samples, plan, fft, s, buffer, spectrum, partial[static_cast<std::size_t>(b)]);
      }
    }
  }

  std::vector<double> sum(bins, 0.0);
  for (const auto& p : partial) {
    for (std::size_t k = 0; k < bins; ++k) sum[k] += p[k];
  }
  return finish_welch(plan, sample_rate, std::move(sum));
}

double spectral_bandwidth(const PowerSpectrum& spectrum, double threshold_db) {
  if (spectrum.power.empty()) return 0.0;
  const double peak = *std::max_element(spectrum.power.begin(), spectrum.power.end());
  if (!(peak > 0.0)) return 0.0;
  const double floor = peak * std::pow(10.0, -threshold_db / 10.0);
  for (std::size_t k = spectrum.power.size(); k-- > 0;) {
    if (spectrum.power[k] >= floor) return spectrum.frequencies[k];
  }
  return 0.0;
}

SignalStats analyze_signal(const AudioClip& clip, const SignalOptions& options) {
  if (clip.empty()) throw AudioError(AudioErrc::kEmptyClip, "cannot analyze an empty clip");
  SignalStats stats;
  stats.sample_rate = clip.sample_rate;
  stats.duration = clip.duration();
  stats.peak_level = peak_level_dbfs(clip.samples);
  const auto psd = welch_psd(clip.samples, clip.sample_rate, options.welch_segment);
  stats.bandwidth = spectral_bandwidth(psd, options.bandwidth_threshold_db);
  const auto tail = static_cast<std::size_t>(std::llround(options.tail_window * clip.sample_rate));
  stats.tail_ma_ratio = tail_ma_ratio(clip.samples, tail);
  return stats;
}

Spectrogram stft_spectrogram(std::span<const float> samples, int sample_rate, std::size_t window, std::size_t hop,
                             std::size_t max_columns) {
  if (samples.empty()) throw AudioError(AudioErrc::kEmptyClip, "cannot compute a spectrogram of an empty clip");
  const auto plan = plan_stft(samples.size(), window, hop, max_columns);
  auto out = make_spectrogram_shell(plan, sample_rate);
  const auto win = hann_window(plan.window);
  const RealFft fft(plan.window);

#pragma omp parallel
  {
    std::vector<double> buffer(plan.window);
    std::vector<std::complex<double>> spectrum(fft.bins());
#pragma omp for schedule(static)
    for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(plan.columns); ++c) {
      stft_column(samples, plan, win, fft, static_cast<std::size_t>(c), buffer, spectrum, out);
    }
  }
  return out;
}

namespace serial {

PowerSpectrum welch_psd(std::span<const float> samples, int sample_rate, std::size_t segment) {
  if (samples.empty()) throw AudioError(AudioErrc::kEmptyClip, "cannot estimate the spectrum of an empty clip");
  const auto plan = plan_welch(samples.size(), sample_rate, segment);
  const RealFft fft(plan.segment);
  std::vector<double> buffer(plan.segment);
  std::vector<std::complex<double>> spectrum(fft.bins());
  std::vector<double> sum(fft.bins(), 0.0);
  for (std::size_t s = 0; s < plan.count; ++s) accumulate_segment(samples, plan, fft, s, buffer, spectrum, sum);
  return finish_welch(plan, sample_rate, std::move(sum));
}

Spectrogram stft_spectrogram(std::span<const float> samples, int sample_rate, std::size_t window, std::size_t hop,
                             std::size_t max_columns) {
  if (samples.empty()) throw AudioError(AudioErrc::kEmptyClip, "cannot compute a spectrogram of an empty clip");
  const auto plan = plan_stft(samples.size(), window, hop, max_columns);
  auto out = make_spectrogram_shell(plan, sample_rate);
  const auto win = hann_window(plan.window);
  const RealFft fft(plan.window);
  std::vector<double> buffer(plan.window);
  std::vector<std::complex<double>> spectrum(fft.bins());
  for (std::size_t c = 0; c < plan.columns; ++c) stft_column(samples, plan, win, fft, c, buffer, spectrum, out);
  return out;
}

}  // namespace serial

std::vector<std::pair<float, float>> waveform_envelope(std::span<const float> samples, std::size_t max_points) {
  const std::size_t n = samples.size();
  const std::size_t bins = std::min(std::max<std::size_t>(max_points, 1), n);
  std::vector<std::pair<float, float>> out(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    const std::size_t first = b * n / bins;
    const std::size_t last = (b + 1) * n / bins;
    const auto [lo, hi] = std::minmax_element(samples.begin() + static_cast<std::ptrdiff_t>(first),
                                              samples.begin() + static_cast<std::ptrdiff_t>(last));
    out[b] = {*lo, *hi};
  }
  return out;
}

RenderedViews render_views(const AudioClip& clip, const ViewOptions& options) {
  if (clip.empty()) throw AudioError(AudioErrc::kEmptyClip, "cannot render an empty clip");
  RenderedViews views;
  views.envelope = waveform_envelope(clip.samples, options.max_points);
  const auto window = static_cast<std::size_t>(std::max<long long>(1, std::llround(options.window * clip.sample_rate)));
  const auto hop = static_cast<std::size_t>(std::max<long long>(1, std::llround(options.hop * clip.sample_rate)));
  views.spectrogram = stft_spectrogram(clip.samples, clip.sample_rate, window, hop, options.max_columns);
  return views;
}

std::vector<AudioClip> cut_segments(const AudioClip& clip, std::span<const TimeSpan> spans, double padding) {
  if (padding < 0.0) throw AudioError(AudioErrc::kInvalidArgument, "padding must be non-negative");
  const double rate = clip.sample_rate;
  const double duration = clip.duration();
  const double slack = 0.5 / rate;
  const auto n = static_cast<long long>(clip.samples.size());
  std::vector<AudioClip> out;
  out.reserve(spans.size());
  for (std::size_t i = 0; i < spans.size(); ++i) {
    const auto& span = spans[i];
    if (!(span.start >= 0.0) || !(span.end >= span.start) || span.end > duration + slack) {
      throw AudioError(AudioErrc::kSegmentOutOfRange, "segment " + std::to_string(i) + " [" + std::to_string(span.start) +
                                                          ", " + std::to_string(span.end) + "] lies outside the " +
                                                          std::to_string(duration) + " s clip");
    }
    const long long first = std::clamp(std::llround((span.start - padding) * rate), 0LL, n);
    const long long last = std::clamp(std::llround((span.end + padding) * rate), first, n);
    AudioClip piece;
    piece.sample_rate = clip.sample_rate;
    piece.samples.assign(clip.samples.begin() + first, clip.samples.begin() + last);
    const std::size_t base = clip.source ? clip.source->sample_offset : 0;
    piece.source = ClipSource{clip.source ? clip.source->path : std::filesystem::path{}, base + static_cast<std::size_t>(first)};
    out.push_back(std::move(piece));
  }
  return out;
}

std::vector<AudioClip> cut_segments(const AudioClip& clip, std::span<const ctcseg::AlignedSegment> segments,
                                    double padding) {
  std::vector<TimeSpan> spans;
  spans.reserve(segments.size());
  for (const auto& s : segments) spans.push_back({s.start_time, s.end_time});
  return cut_segments(clip, spans, padding);
}

}  // namespace speechforge::audio
