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
#include <map>
#include <memory>
#include <optional>
#include <regex>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "speechforge/dataset/manifest.hpp"

namespace speechforge::dataset {

struct Histogram {
  std::vector<double> edges;  // counts.size() + 1 edges
  std::vector<std::size_t> counts;
};

// Fixed-width bins from 0 up to max(values) rounded up to the bin width.
// When that needs more than max_bins bins the width is scaled up.
Histogram make_histogram(std::span<const double> values, double bin_width, std::size_t max_bins = 200);

struct DatasetStats {
  std::size_t entry_count = 0;
  double total_hours = 0.0;
  double min_duration = 0.0;
  double max_duration = 0.0;
  std::u32string alphabet;  // sorted code points
  std::size_t vocabulary_size = 0;
  std::size_t word_count = 0;
  Histogram duration_histogram;
  Histogram char_rate_histogram;
  Histogram word_rate_histogram;
};

// Throws DatasetError(kEmptyDataset).
DatasetStats compute_stats(std::span<const ManifestEntry> entries);
nlohmann::ordered_json stats_to_json(const DatasetStats& stats);

enum class FilterOp { kLess, kLessEqual, kGreater, kGreaterEqual, kEqual, kNotEqual, kMatches, kContains };
enum class FilterAction { kDrop, kFlag };

std::string_view to_string(FilterOp op);
// Accepts symbols (<, <=, >, >=, =, ==, !=, ~) and words (lt, le, gt, ge,
// eq, ne, matches, contains).
std::optional<FilterOp> parse_filter_op(std::string_view text);

struct FilterRule {
  std::string field;
  FilterOp op = FilterOp::kGreater;
  std::variant<double, std::string> value = 0.0;
  FilterAction action = FilterAction::kDrop;

  // "field:op:value"; the value is numeric when it parses as a number.
  static FilterRule parse(std::string_view rule_text, FilterAction action = FilterAction::kDrop);
  static FilterRule from_json(const nlohmann::ordered_json& doc);
  nlohmann::ordered_json to_json() const;
  std::string describe() const;

  // Throws DatasetError(kIncompatibleRule) when op and value types clash or
  // the regex does not compile.
  void validate() const;

  // nullopt when the record lacks the field (or it is null); throws
  // DatasetError(kIncompatibleRule) when the field's type does not suit op.
  std::optional<bool> evaluate(const Record& record) const;

 private:
  mutable std::shared_ptr<const std::regex> regex_;
};

std::vector<FilterRule> load_rules(const std::filesystem::path& path);
std::vector<FilterRule> rules_from_json(const nlohmann::ordered_json& doc);

struct RuleReport {
  std::string rule;
  std::size_t fired = 0;
  std::size_t skipped = 0;  // entries missing the field
};

struct FilterReport {
  std::vector<RuleReport> rules;
  std::size_t kept = 0;
  std::size_t dropped = 0;
  std::size_t flagged = 0;
  double kept_hours = 0.0;
  double dropped_hours = 0.0;
};

nlohmann::ordered_json report_to_json(const FilterReport& report);

struct FilterResult {
  std::vector<ManifestEntry> kept;
  std::vector<ManifestEntry> dropped;
  FilterReport report;
};

// Any firing drop rule removes the entry. Flag rules append their
// description to the entry's "filter_flags" array instead.
FilterResult apply_filters(std::span<const ManifestEntry> entries, std::span<const FilterRule> rules);

struct CharRateBounds {
  double high = 30.0;  // >= high: extra words suspected
  double low = 5.0;    // <= low: missing words suspected
};

enum class CharRateFlag { kSuspectExtraWords, kSuspectMissingWords };
std::string_view to_string(CharRateFlag flag);

struct CharRateAnnotation {
  double char_rate = 0.0;
  std::optional<CharRateFlag> flag;
};

std::vector<CharRateAnnotation> char_rate_screen(std::span<const ManifestEntry> entries,
                                                 const CharRateBounds& bounds = {});
// Writes "char_rate" and appends any flag to the "qa_flags" array.
void annotate_char_rate(ManifestEntry& entry, const CharRateAnnotation& annotation);

// Greedy longest-group-first packing into the currently lightest fold (lowest
// index on ties). Entries keep their input order within a fold.
std::vector<std::vector<ManifestEntry>> kfold_split(std::span<const ManifestEntry> entries, std::size_t k,
                                                    std::string_view group_field);

}  // namespace speechforge::dataset
