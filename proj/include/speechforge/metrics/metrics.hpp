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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "speechforge/error.hpp"

namespace speechforge::metrics {

enum class MetricsErrc { kEmptyReference, kEmptyInput };
using MetricsError = CodedError<MetricsErrc>;

enum class EditKind { kMatch, kSubstitute, kDelete, kInsert };

std::string_view to_string(EditKind kind);

// Index-level edit script step; ref/hyp indices are set as the kind implies.
struct EditStep {
  EditKind kind;
  std::size_t ref = 0;
  std::size_t hyp = 0;
};

struct EditCounts {
  std::size_t matches = 0;
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;
  std::size_t errors() const { return substitutions + deletions + insertions; }
  friend bool operator==(const EditCounts&, const EditCounts&) = default;
};

// Levenshtein-minimal script with unit costs. Among optimal scripts the
// backtrace prefers match > substitute > delete > insert at every cell.
template <typename Token>
std::vector<EditStep> edit_script(std::span<const Token> ref, std::span<const Token> hyp);

EditCounts count_steps(std::span<const EditStep> steps);

struct DiffOp {
  EditKind kind;
  std::optional<std::string> ref;
  std::optional<std::string> hyp;
  friend bool operator==(const DiffOp&, const DiffOp&) = default;
};

using DiffOps = std::vector<DiffOp>;

DiffOps edit_alignment(std::span<const std::string> ref, std::span<const std::string> hyp);
// Word-level diff of two whitespace-tokenized texts.
DiffOps word_diff(std::string_view ref_text, std::string_view hyp_text);

struct ErrorReport {
  // word level
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;
  std::size_t matches = 0;
  std::size_t ref_len = 0;
  std::size_t hyp_len = 0;
  // character level, whitespace-collapsed text including interior spaces
  std::size_t char_errors = 0;
  std::size_t char_ref_len = 0;

  double wer = 0.0;
  double cer = 0.0;
  double wmr = 0.0;       // 2 * matches / (ref_len + hyp_len)
  double accuracy = 0.0;  // matches / ref_len
  std::optional<double> char_rate;

  // Recomputes the rate fields from the counts.
  void update_rates();
};

// Throws MetricsError(kEmptyReference) when the reference has no words.
ErrorReport utterance_metrics(std::string_view ref_text, std::string_view hyp_text,
                              std::optional<double> duration = std::nullopt);

// Micro-average: counts are summed, rates recomputed. char_rate is dropped.
ErrorReport aggregate_metrics(std::span<const ErrorReport> reports);

struct TextPair {
  std::string ref;
  std::string hyp;
};

// One report per pair, computed in parallel. Output order matches input.
std::vector<ErrorReport> corpus_metrics(std::span<const TextPair> pairs);

namespace serial {
std::vector<ErrorReport> corpus_metrics(std::span<const TextPair> pairs);
}  // namespace serial

struct WordAccuracy {
  std::size_t occurrences = 0;
  std::size_t matched = 0;
  double accuracy = 0.0;
  friend bool operator==(const WordAccuracy&, const WordAccuracy&) = default;
};

std::map<std::string, WordAccuracy> word_accuracy_table(std::span<const TextPair> pairs);

// "characters per second" of a transcript: code points / duration.
double char_rate(std::string_view text, double duration);

}  // namespace speechforge::metrics
