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

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "speechforge/ctcseg/errors.hpp"

namespace speechforge::ctcseg {

using TokenId = int;
using TokenSequence = std::vector<TokenId>;

// Character vocabulary of the acoustic model. Every token except the blank
// is a single code point; "<space>" in files denotes U' '.
class Vocabulary {
 public:
  static constexpr std::string_view kBlankLiteral = "<blank>";
  static constexpr std::string_view kSpaceLiteral = "<space>";

  // `labels` uses the file literals; exactly one entry must be "<blank>".
  static Vocabulary from_labels(std::vector<std::string> labels);
  static Vocabulary load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::size_t size() const { return labels_.size(); }
  TokenId blank_index() const { return blank_; }
  const std::string& label(TokenId id) const { return labels_.at(static_cast<std::size_t>(id)); }
  std::optional<TokenId> find(char32_t c) const;

 private:
  std::vector<std::string> labels_;
  std::unordered_map<char32_t, TokenId> ids_;
  TokenId blank_ = 0;
};

enum class TokenizeMode { kStrict, kLenient };

struct Tokenized {
  TokenSequence ids;
  // (code point index, character) of every character the vocabulary lacks
  std::vector<std::pair<std::size_t, char32_t>> dropped;
};

// Strict mode throws CtcError(kOovCharacter) at the first unknown character.
Tokenized tokenize(std::string_view text, const Vocabulary& vocab, TokenizeMode mode = TokenizeMode::kStrict);

}  // namespace speechforge::ctcseg
