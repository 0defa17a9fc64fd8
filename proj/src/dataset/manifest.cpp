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

#include "speechforge/dataset/manifest.hpp"

#include <cmath>
#include <fstream>

namespace speechforge::dataset {
namespace {

std::string where(std::size_t line) { return line > 0 ? "line " + std::to_string(line) + ": " : std::string(); }

}  // namespace

ManifestEntry::ManifestEntry(std::string audio_filepath, double duration, std::string text) {
  record_["audio_filepath"] = std::move(audio_filepath);
  record_["duration"] = duration;
  record_["text"] = std::move(text);
}

ManifestEntry ManifestEntry::from_record(Record record, std::size_t line, bool allow_empty_text) {
  if (!record.is_object()) throw DatasetError(DatasetErrc::kMalformedLine, where(line) + "not a JSON object", line);
  for (const char* key : {"audio_filepath", "duration", "text"}) {
    if (!record.contains(key)) {
      throw DatasetError(DatasetErrc::kMissingRequiredField, where(line) + "missing required field '" + key + "'", line);
    }
  }
  const auto& path = record["audio_filepath"];
  if (!path.is_string() || path.get_ref<const std::string&>().empty()) {
    throw DatasetError(DatasetErrc::kInvalidField, where(line) + "audio_filepath must be a non-empty string", line);
  }
  const auto& duration = record["duration"];
  if (!duration.is_number() || !(duration.get<double>() > 0.0) || !std::isfinite(duration.get<double>())) {
    throw DatasetError(DatasetErrc::kInvalidField, where(line) + "duration must be a positive number", line);
  }
  const auto& text = record["text"];
  if (!text.is_string()) throw DatasetError(DatasetErrc::kInvalidField, where(line) + "text must be a string", line);
  if (!allow_empty_text && text.get_ref<const std::string&>().empty()) {
    throw DatasetError(DatasetErrc::kInvalidField, where(line) + "text is empty", line);
  }
  if (record.contains("pred_text") && !record["pred_text"].is_string()) {
    throw DatasetError(DatasetErrc::kInvalidField, where(line) + "pred_text must be a string", line);
  }
  return ManifestEntry(std::move(record));
}

const Record* ManifestEntry::find(std::string_view field) const {
  const auto it = record_.find(field);
  return it == record_.end() ? nullptr : &*it;
}

std::optional<double> ManifestEntry::number(std::string_view field) const {
  const auto* v = find(field);
  if (v == nullptr || !v->is_number()) return std::nullopt;
  return v->get<double>();
}

std::optional<std::string> ManifestEntry::string_field(std::string_view field) const {
  const auto* v = find(field);
  if (v == nullptr || !v->is_string()) return std::nullopt;
  return v->get<std::string>();
}

std::vector<ManifestEntry> read_manifest(std::istream& in, const ReadOptions& options) {
  std::vector<ManifestEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    Record record;
    try {
      record = Record::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DatasetError(DatasetErrc::kMalformedLine, where(line_no) + e.what(), line_no);
    }
    entries.push_back(ManifestEntry::from_record(std::move(record), line_no, options.allow_empty_text));
  }
  return entries;
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path, const ReadOptions& options) {
  std::ifstream in(path);
  if (!in) throw DatasetError(DatasetErrc::kIo, "cannot open manifest " + path.string());
  return read_manifest(in, options);
}

std::string serialize_entry(const ManifestEntry& entry) {
  return entry.record().dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

void write_manifest(std::ostream& out, std::span<const ManifestEntry> entries) {
  for (const auto& e : entries) out << serialize_entry(e) << '\n';
}

void write_manifest(const std::filesystem::path& path, std::span<const ManifestEntry> entries) {
  std::ofstream out(path);
  if (!out) throw DatasetError(DatasetErrc::kIo, "cannot write manifest " + path.string());
  write_manifest(out, entries);
}

}  // namespace speechforge::dataset
