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
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "speechforge/ctcseg/vocabulary.hpp"
#include "speechforge/dataset/manifest.hpp"
#include "speechforge/pipeline/config.hpp"

namespace speechforge::pipeline {

struct SkippedUtterance {
  std::size_t utterance_index = 0;
  std::string text;
  std::string reason;  // no_tokens, band_edge, no_consensus, below_threshold, empty_clip
  std::optional<double> score;
};

struct RecordingResult {
  std::string id;
  std::vector<dataset::ManifestEntry> entries;  // utterance order
  std::vector<SkippedUtterance> skipped;
  std::optional<std::string> error;  // set when the recording failed as a whole
};

// Runs one recording end to end and writes its segments file and clips under
// config.output_dir. Never throws for input problems; they land in `error`.
RecordingResult segment_recording(const InputTriple& input, const PipelineConfig& config,
                                  const ctcseg::Vocabulary& vocabulary);

struct SegmentSummary {
  std::size_t recordings = 0;
  std::size_t failed = 0;
  std::size_t segments = 0;
  std::size_t skipped = 0;
  double hours = 0.0;
};

// Processes every discovered recording with up to config.jobs concurrent
// jobs, then writes manifest.jsonl, skipped.jsonl, summary.json and
// config.resolved.json. Output bytes do not depend on config.jobs.
SegmentSummary run_segment(const PipelineConfig& config);

struct AnalyzeOptions {
  std::filesystem::path manifest;
  std::filesystem::path audio_root;  // defaults to the manifest's directory
  std::filesystem::path output_dir;
  dataset::CharRateBounds char_rate;
  bool signal = true;
  std::size_t jobs = 1;
};

// Adds metric, char-rate and signal fields to one entry. Problems are
// recorded on the entry ("metrics_error", "audio_error").
void enrich_entry(dataset::ManifestEntry& entry, const AnalyzeOptions& options);

// Writes analyzed.jsonl, stats.json and stats.txt.
std::vector<dataset::ManifestEntry> run_analyze(const AnalyzeOptions& options);

std::string format_stats_report(const dataset::DatasetStats& stats,
                                std::span<const dataset::ManifestEntry> entries);

// Writes kept.jsonl, dropped.jsonl and filter_report.json.
dataset::FilterReport run_filter(const std::filesystem::path& manifest, std::span<const dataset::FilterRule> rules,
                                 const std::filesystem::path& output_dir);

std::filesystem::path resolve_audio(const std::filesystem::path& audio_root, const std::string& audio_filepath);

}  // namespace speechforge::pipeline
