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

#include "synthetic.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "json.hpp"

namespace sftest {

namespace fs = std::filesystem;
using speechforge::ctcseg::LogProbMatrix;
using speechforge::ctcseg::Vocabulary;

Vocabulary letter_vocabulary() {
  std::vector<std::string> labels{"<blank>", "<space>"};
  for (char c = 'a'; c <= 'z'; ++c) labels.emplace_back(1, c);
  return Vocabulary::from_labels(labels);
}

namespace {

constexpr std::size_t kVocab = 28;

int token_of(char c) { return c == ' ' ? 1 : 2 + (c - 'a'); }

}  // namespace

std::string random_utterance(std::mt19937_64& rng, std::size_t min_words, std::size_t max_words) {
  std::uniform_int_distribution<std::size_t> words(min_words, max_words);
  std::uniform_int_distribution<int> length(2, 7);
  std::uniform_int_distribution<int> letter(0, 25);
  std::string text;
  const auto n = words(rng);
  for (std::size_t w = 0; w < n; ++w) {
    if (w > 0) text += ' ';
    const int len = length(rng);
    for (int i = 0; i < len; ++i) text += static_cast<char>('a' + letter(rng));
  }
  return text;
}

std::size_t frames_needed(const std::string& text) { return text.empty() ? 0 : 2 * text.size() - 1; }

SyntheticRecording make_recording(const std::vector<std::string>& texts, std::size_t frames,
                                  const SyntheticOptions& options, std::mt19937_64& rng) {
  // Per utterance: character frames and blank runs of 1..3 between them.
  std::uniform_int_distribution<int> run(1, 3);
  std::vector<std::vector<std::size_t>> runs(texts.size());
  std::size_t used = 0;
  for (std::size_t u = 0; u < texts.size(); ++u) {
    used += texts[u].size();
    for (std::size_t i = 1; i < texts[u].size(); ++i) {
      runs[u].push_back(static_cast<std::size_t>(run(rng)));
      used += runs[u].back();
    }
  }
  const std::size_t gaps = texts.size() + 1;
  if (used + gaps > frames) throw std::invalid_argument("synthetic texts do not fit the frame budget");

  // Leftover frames split over the gaps; every gap gets at least one frame.
  std::vector<double> weight(gaps);
  std::uniform_real_distribution<double> w(0.5, 1.5);
  double total = 0.0;
  for (auto& x : weight) total += (x = w(rng));
  std::vector<std::size_t> gap(gaps, 1);
  std::size_t spare = frames - used - gaps;
  std::size_t assigned = 0;
  for (std::size_t g = 0; g + 1 < gaps; ++g) {
    const auto extra = static_cast<std::size_t>(std::floor(static_cast<double>(spare) * weight[g] / total));
    gap[g] += extra;
    assigned += extra;
  }
  gap.back() += spare - assigned;

  std::vector<int> emit(frames, 0);  // token emitted at each frame; 0 = blank
  SyntheticRecording rec;
  std::size_t t = 0;
  for (std::size_t u = 0; u < texts.size(); ++u) {
    t += gap[u];
    PlantedUtterance p;
    p.text = texts[u];
    p.start_frame = t;
    for (std::size_t i = 0; i < texts[u].size(); ++i) {
      if (i > 0) t += runs[u][i - 1];
      emit[t] = token_of(texts[u][i]);
      p.end_frame = t;
      ++t;
    }
    rec.planted.push_back(p);
  }

  const float hit = static_cast<float>(std::log(options.correct_prob));
  const float miss = static_cast<float>(std::log((1.0 - options.correct_prob) / static_cast<double>(kVocab - 1)));
  std::vector<float> values(frames * kVocab, miss);
  for (std::size_t f = 0; f < frames; ++f) values[f * kVocab + static_cast<std::size_t>(emit[f])] = hit;
  rec.matrix = LogProbMatrix(frames, kVocab, options.frame_duration, std::move(values), true);

  // Audio: a tone while an utterance is being spoken, faint noise elsewhere.
  const auto samples = static_cast<std::size_t>(
      std::llround(static_cast<double>(frames) * options.frame_duration * options.sample_rate));
  rec.audio.sample_rate = options.sample_rate;
  rec.audio.samples.assign(samples, 0.0f);
  std::normal_distribution<float> noise(0.0f, 0.002f);
  for (auto& s : rec.audio.samples) s = noise(rng);
  std::uniform_real_distribution<double> pitch(150.0, 400.0);
  for (const auto& p : rec.planted) {
    const double f0 = pitch(rng);
    const auto a = static_cast<std::size_t>(static_cast<double>(p.start_frame) * options.frame_duration * options.sample_rate);
    const auto b = std::min(samples, static_cast<std::size_t>(static_cast<double>(p.end_frame + 1) *
                                                              options.frame_duration * options.sample_rate));
    for (std::size_t i = a; i < b; ++i) {
      rec.audio.samples[i] += static_cast<float>(0.3 * std::sin(2.0 * std::numbers::pi * f0 * static_cast<double>(i - a) /
                                                                options.sample_rate));
    }
  }

  for (std::size_t u = 0; u < texts.size(); ++u) {
    if (u > 0) rec.transcript += ' ';
    rec.transcript += texts[u] + '.';
  }
  rec.transcript += '\n';
  return rec;
}

SyntheticRecording make_recording(const SyntheticOptions& options, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::string> texts;
  for (std::size_t u = 0; u < options.utterances; ++u) {
    texts.push_back(random_utterance(rng, options.min_words, options.max_words));
  }
  return make_recording(texts, options.frames, options, rng);
}

SyntheticRecording concatenate(const SyntheticRecording& a, const SyntheticRecording& b) {
  if (a.matrix.vocab_size() != b.matrix.vocab_size() || a.audio.sample_rate != b.audio.sample_rate ||
      a.matrix.frame_duration() != b.matrix.frame_duration()) {
    throw std::invalid_argument("cannot concatenate recordings of different shapes");
  }
  SyntheticRecording out;
  std::vector<float> values(a.matrix.values().begin(), a.matrix.values().end());
  values.insert(values.end(), b.matrix.values().begin(), b.matrix.values().end());
  out.matrix = LogProbMatrix(a.matrix.frames() + b.matrix.frames(), a.matrix.vocab_size(), a.matrix.frame_duration(),
                             std::move(values), true);
  out.audio.sample_rate = a.audio.sample_rate;
  out.audio.samples = a.audio.samples;
  // Pad audio so b starts exactly at its first frame's time.
  const auto offset = static_cast<std::size_t>(
      std::llround(static_cast<double>(a.matrix.frames()) * a.matrix.frame_duration() * a.audio.sample_rate));
  out.audio.samples.resize(offset, 0.0f);
  out.audio.samples.insert(out.audio.samples.end(), b.audio.samples.begin(), b.audio.samples.end());
  out.planted = a.planted;
  for (auto p : b.planted) {
    p.start_frame += a.matrix.frames();
    p.end_frame += a.matrix.frames();
    out.planted.push_back(p);
  }
  out.transcript = a.transcript;
  if (!out.transcript.empty() && out.transcript.back() == '\n') out.transcript.back() = ' ';
  out.transcript += b.transcript;
  return out;
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("speechforge_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

CorpusLayout write_corpus(const fs::path& root, const std::vector<SyntheticRecording>& recordings) {
  CorpusLayout layout;
  layout.root = root;
  fs::create_directories(root / "text");
  fs::create_directories(root / "logprobs");
  fs::create_directories(root / "audio");
  letter_vocabulary().save(root / "vocab.txt");
  for (std::size_t i = 0; i < recordings.size(); ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "rec%03zu", i);
    layout.ids.emplace_back(id);
    std::ofstream(root / "text" / (layout.ids.back() + ".txt"), std::ios::binary) << recordings[i].transcript;
    speechforge::ctcseg::write_logprobs(root / "logprobs" / (layout.ids.back() + ".ctcl"), recordings[i].matrix);
    speechforge::audio::write_wav_pcm16(root / "audio" / (layout.ids.back() + ".wav"), recordings[i].audio);
  }
  layout.recordings = recordings;
  nlohmann::ordered_json config = {
      {"text_dir", "text"}, {"logprob_dir", "logprobs"}, {"audio_dir", "audio"},
      {"vocabulary", "vocab.txt"}, {"output_dir", "out"},
  };
  layout.config = root / "config.json";
  std::ofstream(layout.config) << config.dump(2) << '\n';
  return layout;
}

}  // namespace sftest
