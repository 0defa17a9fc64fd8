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

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "speechforge/error.hpp"

namespace speechforge::textnorm {

enum class TextNormErrc { kEmptyDocument, kInvalidConfig, kConfigIo };
using TextNormError = CodedError<TextNormErrc>;

using DigitLexicon = std::map<char32_t, std::string>;
// Ordered (pattern, replacement) pairs; patterns are literal strings.
using SubstitutionTable = std::vector<std::pair<std::string, std::string>>;
using TransliterationTable = std::map<char32_t, std::string>;

// Which transforms touched an utterance. Downstream filters use these to
// drop segments whose text was guessed rather than read.
enum class Flag : std::uint8_t {
  kHadDigits = 1 << 0,
  kHadTransliteration = 1 << 1,
  kHadSubstitution = 1 << 2,
  kHadOovDrop = 1 << 3,
};

class Flags {
 public:
  constexpr Flags() = default;
  constexpr explicit Flags(std::uint8_t bits) : bits_(bits) {}

  constexpr bool has(Flag f) const { return (bits_ & static_cast<std::uint8_t>(f)) != 0; }
  constexpr void set(Flag f) { bits_ |= static_cast<std::uint8_t>(f); }
  constexpr Flags& operator|=(Flags o) {
    bits_ |= o.bits_;
    return *this;
  }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr std::uint8_t bits() const { return bits_; }
  friend constexpr bool operator==(Flags, Flags) = default;

  // Stable names ("HAD_DIGITS", ...) in bit order.
  std::vector<std::string> names() const;

 private:
  std::uint8_t bits_ = 0;
};

struct SourceSpan {
  std::size_t begin = 0;  // byte offset, inclusive
  std::size_t end = 0;    // byte offset, exclusive
  friend bool operator==(const SourceSpan&, const SourceSpan&) = default;
};

struct NormalizationConfig {
  DigitLexicon digit_lexicon;
  SubstitutionTable substitutions;
  TransliterationTable transliteration;
  std::u32string sentence_end_marks = U".!?…";
  std::u32string alphabet;

  bool expands_digits() const { return !digit_lexicon.empty(); }
  bool in_alphabet(char32_t c) const;
  bool is_end_mark(char32_t c) const;

  // Throws TextNormError(kInvalidConfig) when an invariant is violated.
  void validate() const;

  static NormalizationConfig from_json(const nlohmann::ordered_json& doc);
  nlohmann::ordered_json to_json() const;
  static NormalizationConfig load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

struct NormalizedUtterance {
  std::string text;
  SourceSpan source_span;
  Flags flags;
};

struct Sentence {
  std::string text;
  SourceSpan source_span;
  friend bool operator==(const Sentence&, const Sentence&) = default;
};

// Replaces every maximal run of ASCII digits with the space-joined spoken
// word of each digit ("19" -> "one nine"). The expansion is separated by a
// space from any adjacent non-space character.
std::string expand_numbers(std::string_view text, const DigitLexicon& lexicon);

// Single left-to-right pass; at each position the longest matching pattern
// wins (earlier table entry on equal length). Replacements are not rescanned.
std::string apply_substitutions(std::string_view text, const SubstitutionTable& table);

std::string transliterate(std::string_view text, const TransliterationTable& table);

// Splits after each maximal run of end marks. Fragments are trimmed;
// whitespace-only fragments are dropped. Spans index into `text`.
std::vector<Sentence> split_sentences(std::string_view text, std::u32string_view marks);

// substitutions -> digits -> transliteration -> lowercase -> out-of-alphabet
// drop -> sentence split. Utterances without any alphabet letter are dropped.
// Throws TextNormError(kEmptyDocument) if nothing alignable remains.
std::vector<NormalizedUtterance> normalize(std::string_view raw, const NormalizationConfig& config);

}  // namespace speechforge::textnorm
