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

#include "speechforge/error.hpp"

namespace speechforge::ctcseg {

enum class CtcErrc {
  kBadMagic,
  kUnsupportedVersion,
  kTruncatedFile,
  kDimensionOverflow,
  kInvalidHeader,
  kInvalidValue,
  kIo,
  kBadVocabulary,
  kOovCharacter,
  kTextLongerThanAudio,
  kEmptyUtteranceList,
  kEmptyUtterance,
  kInvalidParams,
  kMismatchedRunShapes,
  kMalformedLine,
};

using CtcError = CodedError<CtcErrc>;

class OovCharacterError : public CtcError {
 public:
  OovCharacterError(std::size_t position, char32_t character, const std::string& message)
      : CtcError(CtcErrc::kOovCharacter, message), position_(position), character_(character) {}

  std::size_t position() const noexcept { return position_; }
  char32_t character() const noexcept { return character_; }

 private:
  std::size_t position_;
  char32_t character_;
};

class MalformedLineError : public CtcError {
 public:
  MalformedLineError(std::size_t line, const std::string& message)
      : CtcError(CtcErrc::kMalformedLine, message), line_(line) {}

  // 1-based
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace speechforge::ctcseg
