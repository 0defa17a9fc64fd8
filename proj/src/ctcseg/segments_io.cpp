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

#include "speechforge/ctcseg/segments_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace speechforge::ctcseg {
namespace {

bool parse_double(std::string_view token, double& out) {
  const auto* first = token.data();
  const auto* last = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

}  // namespace

std::string format_segment_line(const SegmentRecord& record) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%.6f %.6f %.6f | ", record.start_time, record.end_time, record.score);
  return std::string(buf) + record.text;
}

void write_segments(std::ostream& out, std::span<const SegmentRecord> records) {
  for (const auto& r : records) out << format_segment_line(r) << '\n';
}

void persist_segments(const std::filesystem::path& path, std::span<const AlignedSegment> segments,
                      std::span<const std::string> texts) {
  if (segments.size() != texts.size()) {
    throw CtcError(CtcErrc::kInvalidParams, "segments and texts differ in length");
  }
  std::vector<SegmentRecord> records;
  records.reserve(segments.size());
  for (std::size_t i = 0; i < segments.size(); ++i) {
    records.push_back({segments[i].start_time, segments[i].end_time, segments[i].score, texts[i]});
  }
  std::ofstream out(path);
  if (!out) throw CtcError(CtcErrc::kIo, "cannot write " + path.string());
  write_segments(out, records);
}

std::vector<SegmentRecord> read_segments(std::istream& in) {
  std::vector<SegmentRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto bar = line.find(" | ");
    if (bar == std::string::npos) throw MalformedLineError(line_no, "line " + std::to_string(line_no) + ": missing '|' separator");

    std::istringstream head(line.substr(0, bar));
    std::string a, b, c, extra;
    SegmentRecord record;
    if (!(head >> a >> b >> c) || (head >> extra) || !parse_double(a, record.start_time) ||
        !parse_double(b, record.end_time) || !parse_double(c, record.score)) {
      throw MalformedLineError(line_no, "line " + std::to_string(line_no) + ": expected 'start end score | text'");
    }
    record.text = line.substr(bar + 3);
    out.push_back(std::move(record));
  }
  return out;
}

std::vector<SegmentRecord> load_segments(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CtcError(CtcErrc::kIo, "cannot open " + path.string());
  return read_segments(in);
}

}  // namespace speechforge::ctcseg
