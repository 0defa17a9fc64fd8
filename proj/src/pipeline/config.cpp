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

#include "speechforge/pipeline/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>

namespace speechforge::pipeline {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

textnorm::NormalizationConfig default_normalization() {
  textnorm::NormalizationConfig c;
  const char* words[] = {"zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine"};
  for (char32_t d = U'0'; d <= U'9'; ++d) c.digit_lexicon[d] = words[d - U'0'];
  c.alphabet = U" abcdefghijklmnopqrstuvwxyz'";
  return c;
}

std::string path_string(const fs::path& p) { return p.generic_string(); }

}  // namespace

std::vector<std::size_t> parse_window_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto comma = text.find(',', start);
    if (comma == std::string::npos) comma = text.size();
    const std::string_view piece = std::string_view(text).substr(start, comma - start);
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(piece.data(), piece.data() + piece.size(), v);
    if (piece.empty() || ec != std::errc() || ptr != piece.data() + piece.size()) {
      throw PipelineError(PipelineErrc::kInvalidConfig, "window list must be comma-separated integers, got '" + text + "'");
    }
    out.push_back(v);
    start = comma + 1;
  }
  return out;
}

PipelineConfig PipelineConfig::defaults() {
  PipelineConfig c;
  c.normalization = default_normalization();
  c.filter_rules = {dataset::FilterRule::parse("cer:>:0.10")};
  c.output_dir = "out";
  return c;
}

PipelineConfig PipelineConfig::from_json(const ordered_json& doc, const fs::path& base) {
  if (!doc.is_object()) throw PipelineError(PipelineErrc::kInvalidConfig, "config must be a JSON object");
  PipelineConfig c = defaults();
  try {
    if (doc.contains("text_dir")) c.text_dir = resolve(base, doc["text_dir"].get<std::string>());
    if (doc.contains("logprob_dir")) c.logprob_dir = resolve(base, doc["logprob_dir"].get<std::string>());
    if (doc.contains("audio_dir")) c.audio_dir = resolve(base, doc["audio_dir"].get<std::string>());
    if (doc.contains("vocabulary")) c.vocabulary = resolve(base, doc["vocabulary"].get<std::string>());
    if (doc.contains("output_dir")) c.output_dir = resolve(base, doc["output_dir"].get<std::string>());
    if (doc.contains("ui_dir")) c.ui_dir = resolve(base, doc["ui_dir"].get<std::string>());
    if (doc.contains("inputs")) {
      for (const auto& item : doc["inputs"]) {
        c.inputs.push_back({item.at("id").get<std::string>(), resolve(base, item.at("text").get<std::string>()),
                            resolve(base, item.at("logprobs").get<std::string>()),
                            resolve(base, item.at("audio").get<std::string>())});
      }
    }
    if (doc.contains("normalization")) {
      const auto& n = doc["normalization"];
      c.normalization = n.is_string() ? textnorm::NormalizationConfig::load(resolve(base, n.get<std::string>()))
                                      : textnorm::NormalizationConfig::from_json(n);
    }
    if (doc.contains("align")) {
      const auto& a = doc["align"];
      if (a.contains("window_set")) c.align.window_set = a["window_set"].get<std::vector<std::size_t>>();
      // window_frames is the first window; an echoed value must agree with it
      if (a.contains("window_frames") && !c.align.window_set.empty() &&
          a["window_frames"].get<std::size_t>() != c.align.window_set.front()) {
        throw PipelineError(PipelineErrc::kInvalidConfig, "align.window_frames must equal the first entry of window_set");
      }
      if (a.contains("score_window_chars")) c.align.score_window_chars = a["score_window_chars"].get<std::size_t>();
      if (a.contains("boundary_tolerance_frames")) {
        c.align.boundary_tolerance_frames = a["boundary_tolerance_frames"].get<std::size_t>();
      }
      if (a.contains("score_threshold")) c.align.score_threshold = a["score_threshold"].get<double>();
    }
    if (doc.contains("filter_rules")) c.filter_rules = dataset::rules_from_json(doc["filter_rules"]);
    if (doc.contains("char_rate")) {
      const auto& r = doc["char_rate"];
      if (r.contains("high")) c.char_rate.high = r["high"].get<double>();
      if (r.contains("low")) c.char_rate.low = r["low"].get<double>();
    }
    if (doc.contains("padding")) c.padding = doc["padding"].get<double>();
    if (doc.contains("jobs")) c.jobs = doc["jobs"].get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw PipelineError(PipelineErrc::kInvalidConfig, std::string("config: ") + e.what());
  } catch (const textnorm::TextNormError& e) {
    throw PipelineError(PipelineErrc::kInvalidConfig, std::string("config normalization: ") + e.what());
  } catch (const dataset::DatasetError& e) {
    throw PipelineError(PipelineErrc::kInvalidConfig, std::string("config filter_rules: ") + e.what());
  }
  if (!c.align.window_set.empty()) c.align.window_frames = c.align.window_set.front();
  return c;
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw PipelineError(PipelineErrc::kConfigIo, "cannot open config " + path.string());
  ordered_json doc;
  try {
    doc = ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw PipelineError(PipelineErrc::kInvalidConfig, "config " + path.string() + ": " + e.what());
  }
  return from_json(doc, path.parent_path());
}

ordered_json PipelineConfig::resolved_json() const {
  ordered_json doc;
  doc["text_dir"] = path_string(text_dir);
  doc["logprob_dir"] = path_string(logprob_dir);
  doc["audio_dir"] = path_string(audio_dir);
  doc["inputs"] = ordered_json::array();
  for (const auto& t : inputs) {
    doc["inputs"].push_back({{"id", t.id},
                             {"text", path_string(t.text)},
                             {"logprobs", path_string(t.logprobs)},
                             {"audio", path_string(t.audio)}});
  }
  doc["vocabulary"] = path_string(vocabulary);
  doc["output_dir"] = path_string(output_dir);
  doc["ui_dir"] = path_string(ui_dir);
  doc["normalization"] = normalization.to_json();
  doc["align"] = {{"window_frames", align.window_frames},
                  {"window_set", align.window_set},
                  {"score_window_chars", align.score_window_chars},
                  {"boundary_tolerance_frames", align.boundary_tolerance_frames},
                  {"score_threshold", align.score_threshold}};
  doc["filter_rules"] = ordered_json::array();
  for (const auto& r : filter_rules) doc["filter_rules"].push_back(r.to_json());
  doc["char_rate"] = {{"high", char_rate.high}, {"low", char_rate.low}};
  doc["padding"] = padding;
  doc["jobs"] = jobs;
  return doc;
}

void PipelineConfig::validate(bool check_paths) const {
  const auto fail = [](const std::string& m) { throw PipelineError(PipelineErrc::kInvalidConfig, m); };
  if (jobs < 1) fail("jobs must be at least 1");
  if (!(padding >= 0.0)) fail("padding must be non-negative");
  if (!(char_rate.low < char_rate.high)) fail("char_rate.low must be below char_rate.high");
  try {
    align.validate();
    normalization.validate();
  } catch (const Error& e) {
    fail(e.what());
  }
  if (!check_paths) return;
  if (vocabulary.empty() || !fs::is_regular_file(vocabulary)) fail("vocabulary file not found: " + vocabulary.string());
  if (inputs.empty()) {
    for (const auto* dir : {&text_dir, &logprob_dir, &audio_dir}) {
      if (dir->empty() || !fs::is_directory(*dir)) fail("input directory not found: '" + dir->string() + "'");
    }
  } else {
    std::set<std::string> ids;
    for (const auto& t : inputs) {
      if (t.id.empty() || !ids.insert(t.id).second) fail("input ids must be unique and non-empty");
    }
  }
}

std::vector<InputTriple> PipelineConfig::discover_inputs() const {
  if (!inputs.empty()) {
    auto out = inputs;
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    return out;
  }
  std::vector<InputTriple> out;
  for (const auto& entry : fs::directory_iterator(text_dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
    const auto id = entry.path().stem().string();
    out.push_back({id, entry.path(), logprob_dir / (id + ".ctcl"), audio_dir / (id + ".wav")});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return out;
}

}  // namespace speechforge::pipeline
