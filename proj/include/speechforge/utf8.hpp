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
#include <string>
#include <string_view>
#include <vector>

namespace speechforge::utf8 {

// A decoded code point together with the byte range it came from.
struct CodePoint {
  char32_t value;
  std::size_t byte_begin;
  std::size_t byte_end;
};

// Malformed sequences decode to U+FFFD, one per offending byte.
std::vector<CodePoint> decode_with_offsets(std::string_view text);
std::u32string decode(std::string_view text);

void append(std::string& out, char32_t cp);
std::string encode(std::u32string_view text);
std::string encode(char32_t cp);

std::size_t length(std::string_view text);

bool is_space(char32_t cp);
char32_t to_lower(char32_t cp);
std::string to_lower(std::string_view text);

// Splits on maximal runs of whitespace; empty tokens are never produced.
std::vector<std::string> split_words(std::string_view text);

}  // namespace speechforge::utf8
