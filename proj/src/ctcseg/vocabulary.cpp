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

#include "speechforge/ctcseg/vocabulary.hpp"

#include <fstream>

#include "speechforge/utf8.hpp"

namespace speechforge::ctcseg {

Vocabulary Vocabulary::from_labels(std::vector<std::string> labels) {
  Vocabulary vocab;
  if (labels.size() < 2) throw CtcError(CtcErrc::kBadVocabulary, "vocabulary needs at least two tokens");
  std::optional<TokenId> blank;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto id = static_cast<TokenId>(i);
    const std::string& label = labels[i];
    if (label == kBlankLiteral) {
      if (blank) throw CtcError(CtcErrc::kBadVocabulary, "vocabulary declares <blank> twice");
      blank = id;
      continue;
    }
    char32_t c = 0;
    if (label == kSpaceLiteral) {
      c = U' ';
    } else {
      const auto cps = utf8::decode(label);
      if (cps.size() != 1) {
        throw CtcError(CtcErrc::kBadVocabulary, "token " + std::to_string(i) + " is not a single character: '" + label + "'");
      }
      c = cps[0];
    }
    if (!vocab.ids_.emplace(c, id).second) {
      throw CtcError(CtcErrc::kBadVocabulary, "duplicate token '" + label + "'");
    }
  }
  if (!blank) throw CtcError(CtcErrc::kBadVocabulary, "vocabulary has no <blank> token");
  vocab.blank_ = *blank;
  vocab.labels_ = std::move(labels);
  return vocab;
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CtcError(CtcErrc::kIo, "cannot open vocabulary " + path.string());
  std::vector<std::string> labels;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    labels.push_back(line);
  }
  // a trailing empty line is the file's final newline, not a token
  while (!labels.empty() && labels.back().empty()) labels.pop_back();
  return from_labels(std::move(labels));
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw CtcError(CtcErrc::kIo, "cannot write vocabulary " + path.string());
  for (const auto& label : labels_) out << label << '\n';
}

std::optional<TokenId> Vocabulary::find(char32_t c) const {
  const auto it = ids_.find(c);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

Tokenized tokenize(std::string_view text, const Vocabulary& vocab, TokenizeMode mode) {
  Tokenized out;
  const auto cps = utf8::decode(text);
  out.ids.reserve(cps.size());
  for (std::size_t i = 0; i < cps.size(); ++i) {
    if (const auto id = vocab.find(cps[i])) {
      out.ids.push_back(*id);
      continue;
    }
    if (mode == TokenizeMode::kStrict) {
      throw OovCharacterError(i, cps[i],
                              "character '" + utf8::encode(cps[i]) + "' at position " + std::to_string(i) + " is not in the vocabulary");
    }
    out.dropped.emplace_back(i, cps[i]);
  }
  return out;
}

}  // namespace speechforge::ctcseg
