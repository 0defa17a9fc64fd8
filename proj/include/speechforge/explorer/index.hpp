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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "speechforge/audio/signal.hpp"
#include "speechforge/dataset/manifest.hpp"
#include "speechforge/dataset/operations.hpp"
#include "speechforge/error.hpp"
#include "speechforge/metrics/metrics.hpp"

namespace speechforge::explorer {

enum class ExplorerErrc { kUnknownField, kBadPage, kBadRequest, kNotFound, kAudioMissing, kBindFailed };

using ExplorerError = CodedError<ExplorerErrc>;
using Json = nlohmann::ordered_json;

struct IndexedEntry {
  std::size_t id = 0;
  dataset::ManifestEntry entry;
  std::optional<metrics::ErrorReport> report;  // only when pred_text is present
  // Manifest record plus id and the computed metric fields. Lists, filters,
  // sorts and details all read from here.
  Json row;
};

struct SampleQuery {
  std::size_t page = 0;
  std::size_t page_size = 50;
  std::string sort = "id";
  bool descending = false;
  std::vector<dataset::FilterRule> filters;
};

struct SamplePage {
  std::size_t total = 0;
  std::vector<std::size_t> ids;
};

struct WordRow {
  std::string word;
  metrics::WordAccuracy accuracy;
};

struct WordQuery {
  std::string sort = "occurrences";
  bool descending = true;
  std::size_t page = 0;
  std::size_t page_size = 100;
};

inline constexpr std::size_t kMaxPageSize = 1000;

// Immutable after construction; all const members are safe to call from any
// number of threads.
class DatasetIndex {
 public:
  // Manifest errors propagate as dataset::DatasetError with the line number.
  // Relative audio paths resolve against audio_root, or the manifest's
  // directory when audio_root is empty.
  static DatasetIndex build(const std::filesystem::path& manifest, const std::filesystem::path& audio_root = {});
  static DatasetIndex from_entries(std::vector<dataset::ManifestEntry> entries,
                                   const std::filesystem::path& audio_root);

  std::size_t size() const { return entries_.size(); }
  const IndexedEntry& at(std::size_t id) const;  // ExplorerError(kNotFound)
  const dataset::DatasetStats& stats() const { return stats_; }
  const std::optional<metrics::ErrorReport>& corpus_report() const { return corpus_; }
  const std::vector<WordRow>& words() const { return words_; }
  double load_seconds() const { return load_seconds_; }

  std::filesystem::path audio_path(std::size_t id) const;

  // Throws ExplorerError(kUnknownField) for sort/filter fields no entry has,
  // kBadPage for page_size outside [1, kMaxPageSize], and kBadRequest when a
  // filter is incompatible with the field's type.
  SamplePage query(const SampleQuery& query) const;

  Json stats_json() const;
  Json list_item(std::size_t id) const;
  // Reads the audio on demand; a missing or broken file gives "audio_error".
  Json detail(std::size_t id) const;
  std::string audio_bytes(std::size_t id) const;  // ExplorerError(kAudioMissing)
  audio::RenderedViews views(std::size_t id, const audio::ViewOptions& options) const;
  Json words_json(const WordQuery& query) const;

 private:
  bool known_field(const std::string& field) const;
  const std::vector<std::size_t>& sorted(const std::string& field, bool descending) const;

  std::vector<IndexedEntry> entries_;
  std::filesystem::path audio_root_;
  dataset::DatasetStats stats_;
  std::optional<metrics::ErrorReport> corpus_;
  std::vector<WordRow> words_;
  std::map<std::string, std::vector<std::size_t>> ascending_;
  std::map<std::string, std::vector<std::size_t>> descending_;
  std::vector<std::string> fields_;
  double load_seconds_ = 0.0;
};

Json views_json(const audio::RenderedViews& views);
Json report_json(const metrics::ErrorReport& report);

}  // namespace speechforge::explorer
