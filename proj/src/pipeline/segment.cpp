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

#include <omp.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "speechforge/audio/clip.hpp"
#include "speechforge/audio/signal.hpp"
#include "speechforge/ctcseg/errors.hpp"
#include "speechforge/ctcseg/segments_io.hpp"
#include "speechforge/log.hpp"
#include "speechforge/pipeline/commands.hpp"
#include "speechforge/utf8.hpp"

namespace speechforge::pipeline {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PipelineError(PipelineErrc::kMissingInput, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string clip_name(const std::string& id, std::size_t utterance) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "_%04zu.wav", utterance);
  return id + buf;
}

void write_json_file(const fs::path& path, const ordered_json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw PipelineError(PipelineErrc::kIo, "cannot write " + path.string());
  out << doc.dump(2, ' ', false, ordered_json::error_handler_t::replace) << '\n';
}

void segment_into(RecordingResult& result, const InputTriple& input, const PipelineConfig& config,
                  const ctcseg::Vocabulary& vocabulary) {
  for (const auto* p : {&input.text, &input.logprobs, &input.audio}) {
    if (!fs::is_regular_file(*p)) throw PipelineError(PipelineErrc::kMissingInput, "missing input " + p->string());
  }
  const auto utterances = textnorm::normalize(read_text_file(input.text), config.normalization);

  std::vector<ctcseg::TokenSequence> sequences;
  std::vector<std::size_t> owner;  // sequence -> utterance index
  for (std::size_t u = 0; u < utterances.size(); ++u) {
    auto tokens = ctcseg::tokenize(utterances[u].text, vocabulary, ctcseg::TokenizeMode::kLenient);
    if (tokens.ids.empty()) {
      result.skipped.push_back({u, utterances[u].text, "no_tokens", std::nullopt});
      continue;
    }
    sequences.push_back(std::move(tokens.ids));
    owner.push_back(u);
  }

  const auto matrix = ctcseg::read_logprobs(input.logprobs);
  if (matrix.vocab_size() != vocabulary.size()) {
    throw ctcseg::CtcError(ctcseg::CtcErrc::kBadVocabulary,
                           "log-prob matrix has " + std::to_string(matrix.vocab_size()) + " columns but the vocabulary has " +
                               std::to_string(vocabulary.size()) + " tokens");
  }
  auto params = config.align;
  params.blank_index = vocabulary.blank_index();
  const auto runs = ctcseg::align_windows(matrix, sequences, params, /*parallel=*/false);
  const auto agreed = ctcseg::consensus(runs, params.boundary_tolerance_frames);

  std::vector<const ctcseg::AlignedSegment*> by_sequence(sequences.size(), nullptr);
  for (const auto& s : agreed) by_sequence[s.utterance_index] = &s;

  std::vector<ctcseg::AlignedSegment> accepted;
  std::vector<std::string> accepted_texts;
  for (std::size_t q = 0; q < sequences.size(); ++q) {
    const std::size_t u = owner[q];
    const auto* seg = by_sequence[q];
    if (seg == nullptr) {
      bool failed = false;
      for (const auto& run : runs) failed = failed || run[q].failed;
      result.skipped.push_back({u, utterances[u].text, failed ? "band_edge" : "no_consensus", std::nullopt});
      continue;
    }
    if (seg->score < params.score_threshold) {
      result.skipped.push_back({u, utterances[u].text, "below_threshold", seg->score});
      continue;
    }
    accepted.push_back(*seg);
    accepted.back().utterance_index = u;
    accepted_texts.push_back(utterances[u].text);
  }

  const auto source = audio::read_wav(input.audio);
  const auto clips = audio::cut_segments(source, accepted, config.padding);

  fs::create_directories(config.output_dir / "segments");
  fs::create_directories(config.output_dir / "clips");
  ctcseg::persist_segments(config.output_dir / "segments" / (input.id + ".txt"), accepted, accepted_texts);

  for (std::size_t i = 0; i < accepted.size(); ++i) {
    const auto& seg = accepted[i];
    const std::size_t u = seg.utterance_index;
    if (clips[i].empty()) {
      result.skipped.push_back({u, accepted_texts[i], "empty_clip", seg.score});
      continue;
    }
    const auto name = clip_name(input.id, u);
    audio::write_wav_pcm16(config.output_dir / "clips" / name, clips[i]);
    dataset::ManifestEntry entry("clips/" + name, clips[i].duration(), accepted_texts[i]);
    entry.set("score", seg.score);
    entry.set("recording", input.id);
    entry.set("utterance_index", u);
    entry.set("start_time", seg.start_time);
    entry.set("end_time", seg.end_time);
    entry.set("norm_flags", utterances[u].flags.names());
    const auto screen = dataset::char_rate_screen(std::span(&entry, 1), config.char_rate);
    dataset::annotate_char_rate(entry, screen.front());
    result.entries.push_back(std::move(entry));
  }
  std::sort(result.skipped.begin(), result.skipped.end(),
            [](const auto& a, const auto& b) { return a.utterance_index < b.utterance_index; });
}

}  // namespace

RecordingResult segment_recording(const InputTriple& input, const PipelineConfig& config,
                                  const ctcseg::Vocabulary& vocabulary) {
  RecordingResult result;
  result.id = input.id;
  try {
    segment_into(result, input, config, vocabulary);
  } catch (const std::exception& e) {
    result.entries.clear();
    result.skipped.clear();
    result.error = e.what();
    spdlog::warn("recording {} failed: {}", input.id, e.what());
  }
  return result;
}

SegmentSummary run_segment(const PipelineConfig& config) {
  config.validate(true);
  const auto vocabulary = ctcseg::Vocabulary::load(config.vocabulary);
  const auto inputs = config.discover_inputs();
  fs::create_directories(config.output_dir);

  std::vector<RecordingResult> results(inputs.size());
  const int n = static_cast<int>(inputs.size());
#pragma omp parallel for schedule(dynamic) num_threads(static_cast<int>(config.jobs))
  for (int i = 0; i < n; ++i) {
    results[static_cast<std::size_t>(i)] = segment_recording(inputs[static_cast<std::size_t>(i)], config, vocabulary);
  }

  SegmentSummary summary;
  summary.recordings = results.size();
  std::vector<dataset::ManifestEntry> manifest;
  ordered_json failed = ordered_json::array();
  std::ofstream skipped(config.output_dir / "skipped.jsonl", std::ios::binary);
  if (!skipped) throw PipelineError(PipelineErrc::kIo, "cannot write skipped.jsonl");
  double seconds = 0.0;
  for (const auto& r : results) {
    if (r.error) {
      summary.failed += 1;
      failed.push_back({{"id", r.id}, {"error", *r.error}});
      continue;
    }
    for (const auto& e : r.entries) {
      seconds += e.duration();
      manifest.push_back(e);
    }
    for (const auto& s : r.skipped) {
      ordered_json line = {{"recording", r.id}, {"utterance_index", s.utterance_index}, {"text", s.text},
                           {"reason", s.reason}};
      if (s.score) line["score"] = *s.score;
      skipped << line.dump(-1, ' ', false, ordered_json::error_handler_t::replace) << '\n';
      summary.skipped += 1;
    }
  }
  summary.segments = manifest.size();
  summary.hours = seconds / 3600.0;
  dataset::write_manifest(config.output_dir / "manifest.jsonl", manifest);

  write_json_file(config.output_dir / "summary.json", {{"recordings", summary.recordings},
                                                       {"segments", summary.segments},
                                                       {"skipped", summary.skipped},
                                                       {"hours", summary.hours},
                                                       {"failed", failed}});
  write_json_file(config.output_dir / "config.resolved.json", config.resolved_json());
  return summary;
}

}  // namespace speechforge::pipeline
