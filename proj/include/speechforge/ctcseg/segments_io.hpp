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
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "speechforge/ctcseg/align.hpp"

namespace speechforge::ctcseg {

// One line of a segments file: "start end score | text", six decimals.
struct SegmentRecord {
  double start_time = 0.0;
  double end_time = 0.0;
  double score = 0.0;
  std::string text;
  friend bool operator==(const SegmentRecord&, const SegmentRecord&) = default;
};

std::string format_segment_line(const SegmentRecord& record);

void write_segments(std::ostream& out, std::span<const SegmentRecord> records);
// Throws CtcError(kInvalidParams) when segments and texts differ in length.
void persist_segments(const std::filesystem::path& path, std::span<const AlignedSegment> segments,
                      std::span<const std::string> texts);

// Throws MalformedLineError with the 1-based line number.
std::vector<SegmentRecord> read_segments(std::istream& in);
std::vector<SegmentRecord> load_segments(const std::filesystem::path& path);

}  // namespace speechforge::ctcseg
