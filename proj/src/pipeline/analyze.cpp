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

#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "speechforge/audio/clip.hpp"
#include "speechforge/audio/signal.hpp"
#include "speechforge/metrics/metrics.hpp"
#include "speechforge/pipeline/commands.hpp"
#include "speechforge/utf8.hpp"

namespace speechforge::pipeline {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

fs::path resolve_audio(const fs::path& audio_root, const std::string& audio_filepath) {
  fs::path p(audio_filepath);
  return p.is_absolute() ? p : audio_root / p;
}

void enrich_entry(dataset::ManifestEntry& entry, const AnalyzeOptions& options) {
  if (const auto hyp = entry.pred_text()) {
    try {
      const auto r = metrics::utterance_metrics(entry.text(), *hyp, entry.duration());
      entry.set("wer", r.wer);
      entry.set("cer", r.cer);
      entry.set("wmr", r.wmr);
      entry.set("accuracy", r.accuracy);
      entry.set("ins", r.insertions);
      entry.set("del", r.deletions);
      entry.set("sub", r.substitutions);
    } catch (const Error& e) {
      entry.set("metrics_error", std::string(e.what()));
    }
  }
  const auto screen = dataset::char_rate_screen(std::span(&entry, 1), options.char_rate);
  dataset::annotate_char_rate(entry, screen.front());

  if (!options.signal) return;
  const auto path = resolve_audio(options.audio_root, entry.audio_filepath());
  if (!fs::is_regular_file(path)) {
    entry.set("audio_error", "file not found: " + path.string());
    return;
  }
  try {
    const auto s = audio::analyze_signal(audio::read_wav(path));
    entry.set("sample_rate", s.sample_rate);
    entry.set("peak_level", s.peak_level);
    entry.set("bandwidth", s.bandwidth);
    entry.set("tail_ma_ratio", s.tail_ma_ratio);
  } catch (const Error& e) {
    entry.set("audio_error", std::string(e.what()));
  }
}

namespace {

std::string fixed(double v, int digits) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(digits) << v;
  return ss.str();
}

void histogram_lines(std::ostringstream& out, const char* title, const dataset::Histogram& h, const char* unit) {
  out << title << '\n';
  std::size_t peak = 1;
  for (auto c : h.counts) peak = std::max(peak, c);
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    if (h.counts[i] == 0) continue;
    const auto bar = (h.counts[i] * 40 + peak - 1) / peak;
    out << "  [" << fixed(h.edges[i], 2) << ", " << fixed(h.edges[i + 1], 2) << ") " << unit << "  "
        << std::setw(6) << h.counts[i] << "  " << std::string(bar, '#') << '\n';
  }
}

}  // namespace

std::string format_stats_report(const dataset::DatasetStats& stats, std::span<const dataset::ManifestEntry> entries) {
  std::ostringstream out;
  out << "entries          " << stats.entry_count << '\n';
  out << "total hours      " << fixed(stats.total_hours, 4) << '\n';
  out << "duration range   " << fixed(stats.min_duration, 3) << " - " << fixed(stats.max_duration, 3) << " s\n";
  out << "words            " << stats.word_count << '\n';
  out << "vocabulary       " << stats.vocabulary_size << '\n';
  out << "alphabet         ";
  for (char32_t c : stats.alphabet) out << (c == U' ' ? std::string("<space>") : utf8::encode(c)) << ' ';
  out << '\n';

  std::vector<metrics::ErrorReport> reports;
  std::map<std::string, std::size_t> flags;
  std::size_t audio_errors = 0;
  for (const auto& e : entries) {
    if (const auto* f = e.find("qa_flags"); f && f->is_array()) {
      for (const auto& name : *f) {
        if (name.is_string()) flags[name.get<std::string>()] += 1;
      }
    }
    if (e.has("audio_error")) audio_errors += 1;
    const auto hyp = e.pred_text();
    if (!hyp || e.has("metrics_error")) continue;
    reports.push_back(metrics::utterance_metrics(e.text(), *hyp));
  }
  if (!reports.empty()) {
    const auto c = metrics::aggregate_metrics(reports);
    out << "WER              " << fixed(100.0 * c.wer, 2) << " %\n";
    out << "CER              " << fixed(100.0 * c.cer, 2) << " %\n";
    out << "WMR              " << fixed(100.0 * c.wmr, 2) << " %\n";
  }
  for (const auto& [name, count] : flags) out << name << "  " << count << '\n';
  if (audio_errors > 0) out << "audio errors     " << audio_errors << '\n';
  out << '\n';
  histogram_lines(out, "duration", stats.duration_histogram, "s");
  histogram_lines(out, "character rate", stats.char_rate_histogram, "chars/s");
  histogram_lines(out, "word rate", stats.word_rate_histogram, "words/s");
  return out.str();
}

std::vector<dataset::ManifestEntry> run_analyze(const AnalyzeOptions& input) {
  AnalyzeOptions options = input;
  if (options.audio_root.empty()) options.audio_root = options.manifest.parent_path();
  if (options.jobs < 1) throw PipelineError(PipelineErrc::kInvalidConfig, "jobs must be at least 1");
  auto entries = dataset::read_manifest(options.manifest);

  const int n = static_cast<int>(entries.size());
#pragma omp parallel for schedule(dynamic) num_threads(static_cast<int>(options.jobs))
  for (int i = 0; i < n; ++i) enrich_entry(entries[static_cast<std::size_t>(i)], options);

  const auto stats = dataset::compute_stats(entries);
  fs::create_directories(options.output_dir);
  dataset::write_manifest(options.output_dir / "analyzed.jsonl", entries);

  ordered_json doc = dataset::stats_to_json(stats);
  std::vector<metrics::ErrorReport> reports;
  for (const auto& e : entries) {
    const auto hyp = e.pred_text();
    if (hyp && !e.has("metrics_error")) reports.push_back(metrics::utterance_metrics(e.text(), *hyp));
  }
  if (reports.empty()) {
    doc["corpus_metrics"] = nullptr;
  } else {
    const auto c = metrics::aggregate_metrics(reports);
    doc["corpus_metrics"] = {{"wer", c.wer}, {"cer", c.cer}, {"wmr", c.wmr}, {"accuracy", c.accuracy},
                             {"substitutions", c.substitutions}, {"deletions", c.deletions},
                             {"insertions", c.insertions}, {"ref_words", c.ref_len}};
  }
  {
    std::ofstream out(options.output_dir / "stats.json", std::ios::binary);
    if (!out) throw PipelineError(PipelineErrc::kIo, "cannot write stats.json");
    out << doc.dump(2, ' ', false, ordered_json::error_handler_t::replace) << '\n';
  }
  {
    std::ofstream out(options.output_dir / "stats.txt", std::ios::binary);
    if (!out) throw PipelineError(PipelineErrc::kIo, "cannot write stats.txt");
    out << format_stats_report(stats, entries);
  }
  return entries;
}

dataset::FilterReport run_filter(const fs::path& manifest, std::span<const dataset::FilterRule> rules,
                                 const fs::path& output_dir) {
  const auto entries = dataset::read_manifest(manifest);
  const auto result = dataset::apply_filters(entries, rules);
  fs::create_directories(output_dir);
  dataset::write_manifest(output_dir / "kept.jsonl", result.kept);
  dataset::write_manifest(output_dir / "dropped.jsonl", result.dropped);
  std::ofstream out(output_dir / "filter_report.json", std::ios::binary);
  if (!out) throw PipelineError(PipelineErrc::kIo, "cannot write filter_report.json");
  out << dataset::report_to_json(result.report).dump(2) << '\n';
  return result.report;
}

}  // namespace speechforge::pipeline
