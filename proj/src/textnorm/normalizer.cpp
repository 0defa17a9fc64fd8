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

#include "speechforge/textnorm/normalizer.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "speechforge/utf8.hpp"

namespace speechforge::textnorm {
namespace {

using nlohmann::ordered_json;

// One character of the working text plus the raw-text bytes it stands for.
struct Glyph {
  char32_t ch;
  std::size_t begin;
  std::size_t end;
  Flags flags;
};

using Glyphs = std::vector<Glyph>;

Glyphs to_glyphs(std::string_view text) {
  Glyphs out;
  for (const auto& cp : utf8::decode_with_offsets(text)) out.push_back({cp.value, cp.byte_begin, cp.byte_end, {}});
  return out;
}

std::string to_string(const Glyphs& glyphs, std::size_t first, std::size_t last) {
  std::string out;
  for (std::size_t i = first; i < last; ++i) utf8::append(out, glyphs[i].ch);
  return out;
}

std::string to_string(const Glyphs& glyphs) { return to_string(glyphs, 0, glyphs.size()); }

void emit(Glyphs& out, std::u32string_view text, std::size_t begin, std::size_t end, Flags flags) {
  for (char32_t c : text) out.push_back({c, begin, end, flags});
}

bool is_ascii_digit(char32_t c) { return c >= U'0' && c <= U'9'; }

Glyphs substitute(const Glyphs& in, const SubstitutionTable& table) {
  if (table.empty()) return in;
  struct Rule {
    std::u32string pattern;
    std::u32string replacement;
  };
  std::vector<Rule> rules;
  for (const auto& [pattern, replacement] : table) rules.push_back({utf8::decode(pattern), utf8::decode(replacement)});
  // longest first, table order on ties
  std::stable_sort(rules.begin(), rules.end(),
                   [](const Rule& a, const Rule& b) { return a.pattern.size() > b.pattern.size(); });

  Glyphs out;
  out.reserve(in.size());
  std::size_t i = 0;
  while (i < in.size()) {
    const Rule* hit = nullptr;
    for (const auto& rule : rules) {
      const auto n = rule.pattern.size();
      if (n == 0 || i + n > in.size()) continue;
      bool match = true;
      for (std::size_t k = 0; k < n && match; ++k) match = in[i + k].ch == rule.pattern[k];
      if (match) {
        hit = &rule;
        break;
      }
    }
    if (hit == nullptr) {
      out.push_back(in[i]);
      ++i;
      continue;
    }
    const auto n = hit->pattern.size();
    Flags flags;
    for (std::size_t k = 0; k < n; ++k) flags |= in[i + k].flags;
    flags.set(Flag::kHadSubstitution);
    emit(out, hit->replacement, in[i].begin, in[i + n - 1].end, flags);
    i += n;
  }
  return out;
}

Glyphs expand_digits(const Glyphs& in, const DigitLexicon& lexicon) {
  Glyphs out;
  out.reserve(in.size());
  std::size_t i = 0;
  while (i < in.size()) {
    if (!is_ascii_digit(in[i].ch)) {
      out.push_back(in[i]);
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < in.size() && is_ascii_digit(in[j].ch)) ++j;

    std::u32string spoken;
    for (std::size_t k = i; k < j; ++k) {
      const auto it = lexicon.find(in[k].ch);
      if (it == lexicon.end()) {
        throw TextNormError(TextNormErrc::kInvalidConfig, "digit lexicon has no entry for '" + utf8::encode(in[k].ch) + "'");
      }
      if (!spoken.empty()) spoken.push_back(U' ');
      spoken += utf8::decode(it->second);
    }
    if (!out.empty() && !utf8::is_space(out.back().ch)) spoken.insert(spoken.begin(), U' ');
    if (j < in.size() && !utf8::is_space(in[j].ch)) spoken.push_back(U' ');

    Flags flags;
    for (std::size_t k = i; k < j; ++k) flags |= in[k].flags;
    flags.set(Flag::kHadDigits);
    emit(out, spoken, in[i].begin, in[j - 1].end, flags);
    i = j;
  }
  return out;
}

Glyphs transliterate_glyphs(const Glyphs& in, const TransliterationTable& table) {
  if (table.empty()) return in;
  Glyphs out;
  out.reserve(in.size());
  for (const auto& g : in) {
    const auto it = table.find(g.ch);
    if (it == table.end()) {
      out.push_back(g);
      continue;
    }
    Flags flags = g.flags;
    flags.set(Flag::kHadTransliteration);
    emit(out, utf8::decode(it->second), g.begin, g.end, flags);
  }
  return out;
}

// Half-open glyph ranges, one per sentence, trimmed of whitespace.
std::vector<std::pair<std::size_t, std::size_t>> sentence_ranges(const Glyphs& glyphs,
                                                                 std::u32string_view marks) {
  auto is_mark = [&](char32_t c) { return marks.find(c) != std::u32string_view::npos; };
  std::vector<std::pair<std::size_t, std::size_t>> raw;
  std::size_t start = 0;
  std::size_t i = 0;
  while (i < glyphs.size()) {
    if (!is_mark(glyphs[i].ch)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < glyphs.size() && is_mark(glyphs[j].ch)) ++j;
    // never cut through characters produced from one source character
    while (j < glyphs.size() && glyphs[j].begin < glyphs[j - 1].end) ++j;
    raw.emplace_back(start, j);
    start = j;
    i = j;
  }
  if (start < glyphs.size()) raw.emplace_back(start, glyphs.size());

  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (auto [a, b] : raw) {
    while (a < b && utf8::is_space(glyphs[a].ch)) ++a;
    while (b > a && utf8::is_space(glyphs[b - 1].ch)) --b;
    if (a < b) out.emplace_back(a, b);
  }
  return out;
}

SourceSpan span_of(const Glyphs& glyphs, std::size_t first, std::size_t last) {
  SourceSpan span{glyphs[first].begin, glyphs[first].end};
  for (std::size_t i = first; i < last; ++i) span.end = std::max(span.end, glyphs[i].end);
  return span;
}

char32_t single_code_point(const std::string& key, const char* what) {
  const auto cps = utf8::decode(key);
  if (cps.size() != 1) {
    throw TextNormError(TextNormErrc::kInvalidConfig,
                        std::string(what) + " key must be a single character, got '" + key + "'");
  }
  return cps[0];
}

}  // namespace

std::vector<std::string> Flags::names() const {
  std::vector<std::string> out;
  if (has(Flag::kHadDigits)) out.emplace_back("HAD_DIGITS");
  if (has(Flag::kHadTransliteration)) out.emplace_back("HAD_TRANSLITERATION");
  if (has(Flag::kHadSubstitution)) out.emplace_back("HAD_SUBSTITUTION");
  if (has(Flag::kHadOovDrop)) out.emplace_back("HAD_OOV_DROP");
  return out;
}

bool NormalizationConfig::in_alphabet(char32_t c) const { return alphabet.find(c) != std::u32string::npos; }

bool NormalizationConfig::is_end_mark(char32_t c) const {
  return sentence_end_marks.find(c) != std::u32string::npos;
}

void NormalizationConfig::validate() const {
  if (expands_digits()) {
    if (digit_lexicon.size() != 10) {
      throw TextNormError(TextNormErrc::kInvalidConfig, "digit lexicon must cover exactly the digits 0-9");
    }
    for (char32_t d = U'0'; d <= U'9'; ++d) {
      if (!digit_lexicon.contains(d)) {
        throw TextNormError(TextNormErrc::kInvalidConfig, "digit lexicon is missing '" + utf8::encode(d) + "'");
      }
    }
  }
  for (const auto& [pattern, replacement] : substitutions) {
    if (pattern.empty()) throw TextNormError(TextNormErrc::kInvalidConfig, "substitution pattern is empty");
  }
  if (alphabet.empty()) throw TextNormError(TextNormErrc::kInvalidConfig, "alphabet is empty");
  if (!in_alphabet(U' ')) throw TextNormError(TextNormErrc::kInvalidConfig, "alphabet must contain the space character");
}

NormalizationConfig NormalizationConfig::from_json(const ordered_json& doc) {
  if (!doc.is_object()) throw TextNormError(TextNormErrc::kInvalidConfig, "normalization config must be an object");
  NormalizationConfig config;
  try {
    if (doc.contains("digit_lexicon")) {
      for (const auto& [key, value] : doc.at("digit_lexicon").items()) {
        config.digit_lexicon[single_code_point(key, "digit_lexicon")] = value.get<std::string>();
      }
    }
    if (doc.contains("substitutions")) {
      for (const auto& pair : doc.at("substitutions")) {
        if (!pair.is_array() || pair.size() != 2) {
          throw TextNormError(TextNormErrc::kInvalidConfig, "each substitution must be a [pattern, replacement] pair");
        }
        config.substitutions.emplace_back(pair[0].get<std::string>(), pair[1].get<std::string>());
      }
    }
    if (doc.contains("transliteration")) {
      for (const auto& [key, value] : doc.at("transliteration").items()) {
        config.transliteration[single_code_point(key, "transliteration")] = value.get<std::string>();
      }
    }
    if (doc.contains("sentence_end_marks")) {
      config.sentence_end_marks = utf8::decode(doc.at("sentence_end_marks").get<std::string>());
    }
    config.alphabet = utf8::decode(doc.at("alphabet").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw TextNormError(TextNormErrc::kInvalidConfig, std::string("normalization config: ") + e.what());
  }
  config.validate();
  return config;
}

ordered_json NormalizationConfig::to_json() const {
  ordered_json doc = ordered_json::object();
  doc["digit_lexicon"] = ordered_json::object();
  for (const auto& [digit, word] : digit_lexicon) doc["digit_lexicon"][utf8::encode(digit)] = word;
  doc["substitutions"] = ordered_json::array();
  for (const auto& [pattern, replacement] : substitutions) doc["substitutions"].push_back({pattern, replacement});
  doc["transliteration"] = ordered_json::object();
  for (const auto& [from, to] : transliteration) doc["transliteration"][utf8::encode(from)] = to;
  doc["sentence_end_marks"] = utf8::encode(sentence_end_marks);
  doc["alphabet"] = utf8::encode(alphabet);
  return doc;
}

NormalizationConfig NormalizationConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw TextNormError(TextNormErrc::kConfigIo, "cannot open normalization config " + path.string());
  ordered_json doc;
  try {
    doc = ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw TextNormError(TextNormErrc::kInvalidConfig, path.string() + ": " + e.what());
  }
  return from_json(doc);
}

void NormalizationConfig::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw TextNormError(TextNormErrc::kConfigIo, "cannot write " + path.string());
  out << to_json().dump(2) << '\n';
}

std::string expand_numbers(std::string_view text, const DigitLexicon& lexicon) {
  return to_string(expand_digits(to_glyphs(text), lexicon));
}

std::string apply_substitutions(std::string_view text, const SubstitutionTable& table) {
  return to_string(substitute(to_glyphs(text), table));
}

std::string transliterate(std::string_view text, const TransliterationTable& table) {
  return to_string(transliterate_glyphs(to_glyphs(text), table));
}

std::vector<Sentence> split_sentences(std::string_view text, std::u32string_view marks) {
  const auto glyphs = to_glyphs(text);
  std::vector<Sentence> out;
  for (const auto& [a, b] : sentence_ranges(glyphs, marks)) {
    const auto span = span_of(glyphs, a, b);
    out.push_back({std::string(text.substr(span.begin, span.end - span.begin)), span});
  }
  return out;
}

std::vector<NormalizedUtterance> normalize(std::string_view raw, const NormalizationConfig& config) {
  auto glyphs = to_glyphs(raw);
  glyphs = substitute(glyphs, config.substitutions);
  if (config.expands_digits()) glyphs = expand_digits(glyphs, config.digit_lexicon);
  glyphs = transliterate_glyphs(glyphs, config.transliteration);
  for (auto& g : glyphs) g.ch = utf8::to_lower(g.ch);

  // Whitespace folds to a single space; anything else outside the alphabet
  // and the end marks is removed. End marks attach to the preceding word.
  Glyphs kept;
  kept.reserve(glyphs.size());
  std::vector<std::size_t> dropped_at;
  for (auto g : glyphs) {
    if (utf8::is_space(g.ch)) g.ch = U' ';
    if (g.ch != U' ' && !config.in_alphabet(g.ch) && !config.is_end_mark(g.ch)) {
      dropped_at.push_back(g.begin);
      continue;
    }
    if (g.ch == U' ' && !kept.empty() && kept.back().ch == U' ') continue;
    if (config.is_end_mark(g.ch) && !kept.empty() && kept.back().ch == U' ') kept.pop_back();
    kept.push_back(g);
  }

  std::vector<NormalizedUtterance> out;
  for (const auto& [a, b] : sentence_ranges(kept, config.sentence_end_marks)) {
    bool has_letter = false;
    Flags flags;
    for (std::size_t i = a; i < b; ++i) {
      flags |= kept[i].flags;
      has_letter = has_letter || (kept[i].ch != U' ' && config.in_alphabet(kept[i].ch));
    }
    if (!has_letter) continue;
    out.push_back({to_string(kept, a, b), span_of(kept, a, b), flags});
  }
  if (out.empty()) throw TextNormError(TextNormErrc::kEmptyDocument, "document has no alignable content");

  for (std::size_t offset : dropped_at) {
    auto it = std::find_if(out.begin(), out.end(), [&](const auto& u) { return offset < u.source_span.end; });
    if (it == out.end()) it = std::prev(out.end());
    it->flags.set(Flag::kHadOovDrop);
  }
  return out;
}

}  // namespace speechforge::textnorm
