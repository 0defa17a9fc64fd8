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
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "speechforge/error.hpp"

namespace speechforge::dataset {

enum class DatasetErrc {
  kIo,
  kMalformedLine,
  kMissingRequiredField,
  kInvalidField,
  kEmptyDataset,
  kIncompatibleRule,
  kBadRule,
  kMissingGroupKey,
  kKExceedsGroups,
  kInvalidArgument,
};

class DatasetError : public CodedError<DatasetErrc> {
 public:
  DatasetError(DatasetErrc code, const std::string& message, std::size_t line = 0)
      : CodedError(code, message), line_(line) {}

  // 1-based manifest line (or entry position) the error refers to; 0 if none.
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

using Record = nlohmann::ordered_json;

// One manifest line. The whole JSON object is kept, key order included, so
// fields this library does not know about survive a read/write cycle.
class ManifestEntry {
 public:
  ManifestEntry() = default;
  ManifestEntry(std::string audio_filepath, double duration, std::string text);
  // Validates required fields; `line` is only used for error messages.
  static ManifestEntry from_record(Record record, std::size_t line = 0, bool allow_empty_text = false);

  const Record& record() const { return record_; }

  std::string audio_filepath() const { return record_.at("audio_filepath").get<std::string>(); }
  double duration() const { return record_.at("duration").get<double>(); }
  std::string text() const { return record_.at("text").get<std::string>(); }
  std::optional<std::string> pred_text() const { return string_field("pred_text"); }
  std::optional<double> score() const { return number("score"); }

  bool has(std::string_view field) const { return record_.contains(field); }
  std::optional<double> number(std::string_view field) const;
  std::optional<std::string> string_field(std::string_view field) const;
  const Record* find(std::string_view field) const;

  template <typename T>
  void set(std::string_view field, T&& value) {
    record_[std::string(field)] = std::forward<T>(value);
  }
  void erase(std::string_view field) { record_.erase(std::string(field)); }

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;

 private:
  explicit ManifestEntry(Record record) : record_(std::move(record)) {}
  Record record_ = Record::object();
};

struct ReadOptions {
  bool allow_empty_text = false;
};

std::vector<ManifestEntry> read_manifest(std::istream& in, const ReadOptions& options = {});
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path, const ReadOptions& options = {});

std::string serialize_entry(const ManifestEntry& entry);
void write_manifest(std::ostream& out, std::span<const ManifestEntry> entries);
void write_manifest(const std::filesystem::path& path, std::span<const ManifestEntry> entries);

}  // namespace speechforge::dataset
