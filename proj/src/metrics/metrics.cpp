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

#include "speechforge/metrics/metrics.hpp"

#include <algorithm>
#include <cstdint>
#include <exception>
#include <string>

#include "speechforge/utf8.hpp"

namespace speechforge::metrics {
namespace {

enum : std::uint8_t { kFromDiagMatch, kFromDiagSub, kFromUp, kFromLeft };

std::u32string collapse_spaces(std::string_view text) {
  std::u32string out;
  for (const auto& word : utf8::split_words(text)) {
    if (!out.empty()) out.push_back(U' ');
    out += utf8::decode(word);
  }
  return out;
}

}  // namespace

std::string_view to_string(EditKind kind) {
  switch (kind) {
    case EditKind::kMatch:
      return "match";
    case EditKind::kSubstitute:
      return "substitute";
    case EditKind::kDelete:
      return "delete";
    case EditKind::kInsert:
      return "insert";
  }
  return "unknown";
}

template <typename Token>
std::vector<EditStep> edit_script(std::span<const Token> ref, std::span<const Token> hyp) {
  const std::size_t n = ref.size();
  const std::size_t m = hyp.size();
  const std::size_t cols = m + 1;
  std::vector<std::size_t> dist((n + 1) * cols);
  std::vector<std::uint8_t> from((n + 1) * cols, kFromLeft);
  for (std::size_t j = 0; j <= m; ++j) dist[j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    dist[i * cols] = i;
    from[i * cols] = kFromUp;
  }
  // The stored choice is the first option, in preference order, that attains
  // the cell minimum; following it reproduces a preference-ordered backtrace.
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t diag = dist[(i - 1) * cols + (j - 1)];
      const std::size_t up = dist[(i - 1) * cols + j] + 1;
      const std::size_t left = dist[i * cols + (j - 1)] + 1;
      const bool same = ref[i - 1] == hyp[j - 1];
      const std::size_t via_diag = same ? diag : diag + 1;
      const std::size_t best = std::min({via_diag, up, left});
      std::uint8_t choice = kFromLeft;
      if (via_diag == best) {
        choice = same ? kFromDiagMatch : kFromDiagSub;
      } else if (up == best) {
        choice = kFromUp;
      }
      dist[i * cols + j] = best;
      from[i * cols + j] = choice;
    }
  }

  std::vector<EditStep> steps;
  steps.reserve(std::max(n, m));
  std::size_t i = n;
  std::size_t j = m;
  while (i > 0 || j > 0) {
    switch (from[i * cols + j]) {
      case kFromDiagMatch:
        steps.push_back({EditKind::kMatch, i - 1, j - 1});
        --i;
        --j;
        break;
      case kFromDiagSub:
        steps.push_back({EditKind::kSubstitute, i - 1, j - 1});
        --i;
        --j;
        break;
      case kFromUp:
        steps.push_back({EditKind::kDelete, i - 1, j});
        --i;
        break;
      default:
        steps.push_back({EditKind::kInsert, i, j - 1});
        --j;
        break;
    }
  }
  std::reverse(steps.begin(), steps.end());
  return steps;
}

template std::vector<EditStep> edit_script<std::string>(std::span<const std::string>, std::span<const std::string>);
template std::vector<EditStep> edit_script<char32_t>(std::span<const char32_t>, std::span<const char32_t>);
template std::vector<EditStep> edit_script<int>(std::span<const int>, std::span<const int>);

EditCounts count_steps(std::span<const EditStep> steps) {
  EditCounts c;
  for (const auto& s : steps) {
    switch (s.kind) {
      case EditKind::kMatch:
        ++c.matches;
        break;
      case EditKind::kSubstitute:
        ++c.substitutions;
        break;
      case EditKind::kDelete:
        ++c.deletions;
        break;
      case EditKind::kInsert:
        ++c.insertions;
        break;
    }
  }
  return c;
}

DiffOps edit_alignment(std::span<const std::string> ref, std::span<const std::string> hyp) {
  DiffOps ops;
  for (const auto& s : edit_script(ref, hyp)) {
    DiffOp op{s.kind, std::nullopt, std::nullopt};
    if (s.kind != EditKind::kInsert) op.ref = ref[s.ref];
    if (s.kind != EditKind::kDelete) op.hyp = hyp[s.hyp];
    ops.push_back(std::move(op));
  }
  return ops;
}

DiffOps word_diff(std::string_view ref_text, std::string_view hyp_text) {
  const auto ref = utf8::split_words(ref_text);
  const auto hyp = utf8::split_words(hyp_text);
  return edit_alignment(ref, hyp);
}

void ErrorReport::update_rates() {
  const double n = static_cast<double>(ref_len);
  wer = ref_len > 0 ? static_cast<double>(substitutions + deletions + insertions) / n : 0.0;
  accuracy = ref_len > 0 ? static_cast<double>(matches) / n : 0.0;
  cer = char_ref_len > 0 ? static_cast<double>(char_errors) / static_cast<double>(char_ref_len) : 0.0;
  const std::size_t denom = ref_len + hyp_len;
  wmr = denom > 0 ? 2.0 * static_cast<double>(matches) / static_cast<double>(denom) : 1.0;
}

ErrorReport utterance_metrics(std::string_view ref_text, std::string_view hyp_text, std::optional<double> duration) {
  const auto ref = utf8::split_words(ref_text);
  const auto hyp = utf8::split_words(hyp_text);
  if (ref.empty()) throw MetricsError(MetricsErrc::kEmptyReference, "reference has no words");

  ErrorReport r;
  const auto words = count_steps(edit_script<std::string>(ref, hyp));
  r.substitutions = words.substitutions;
  r.deletions = words.deletions;
  r.insertions = words.insertions;
  r.matches = words.matches;
  r.ref_len = ref.size();
  r.hyp_len = hyp.size();

  const auto ref_chars = collapse_spaces(ref_text);
  const auto hyp_chars = collapse_spaces(hyp_text);
  r.char_errors = count_steps(edit_script<char32_t>(ref_chars, hyp_chars)).errors();
  r.char_ref_len = ref_chars.size();
  r.update_rates();
  if (duration && *duration > 0.0) r.char_rate = char_rate(ref_text, *duration);
  return r;
}

ErrorReport aggregate_metrics(std::span<const ErrorReport> reports) {
  if (reports.empty()) throw MetricsError(MetricsErrc::kEmptyInput, "no reports to aggregate");
  if (reports.size() == 1) return reports.front();
  ErrorReport total;
  for (const auto& r : reports) {
    total.substitutions += r.substitutions;
    total.deletions += r.deletions;
    total.insertions += r.insertions;
    total.matches += r.matches;
    total.ref_len += r.ref_len;
    total.hyp_len += r.hyp_len;
    total.char_errors += r.char_errors;
    total.char_ref_len += r.char_ref_len;
  }
  total.update_rates();
  return total;
}

std::vector<ErrorReport> corpus_metrics(std::span<const TextPair> pairs) {
  std::vector<ErrorReport> out(pairs.size());
  std::vector<std::exception_ptr> errors(pairs.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(pairs.size()); ++i) {
    const auto idx = static_cast<std::size_t>(i);
    try {
      out[idx] = utterance_metrics(pairs[idx].ref, pairs[idx].hyp);
    } catch (...) {
      errors[idx] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

namespace serial {

std::vector<ErrorReport> corpus_metrics(std::span<const TextPair> pairs) {
  std::vector<ErrorReport> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(utterance_metrics(p.ref, p.hyp));
  return out;
}

}  // namespace serial

std::map<std::string, WordAccuracy> word_accuracy_table(std::span<const TextPair> pairs) {
  std::map<std::string, WordAccuracy> table;
  for (const auto& p : pairs) {
    const auto ref = utf8::split_words(p.ref);
    const auto hyp = utf8::split_words(p.hyp);
    for (const auto& w : ref) ++table[w].occurrences;
    for (const auto& s : edit_script<std::string>(ref, hyp)) {
      if (s.kind == EditKind::kMatch) ++table[ref[s.ref]].matched;
    }
  }
  for (auto& [word, row] : table) {
    row.accuracy = row.occurrences > 0 ? static_cast<double>(row.matched) / static_cast<double>(row.occurrences) : 0.0;
  }
  return table;
}

double char_rate(std::string_view text, double duration) {
  return static_cast<double>(utf8::length(text)) / duration;
}

}  // namespace speechforge::metrics
