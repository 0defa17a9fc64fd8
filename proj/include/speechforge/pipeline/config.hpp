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
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "speechforge/ctcseg/align.hpp"
#include "speechforge/dataset/operations.hpp"
#include "speechforge/error.hpp"
#include "speechforge/textnorm/normalizer.hpp"

namespace speechforge::pipeline {

enum class PipelineErrc { kInvalidConfig, kConfigIo, kMissingInput, kIo };
using PipelineError = CodedError<PipelineErrc>;

struct InputTriple {
  std::string id;
  std::filesystem::path text;
  std::filesystem::path logprobs;
  std::filesystem::path audio;
};

struct PipelineConfig {
  // Triples are discovered by basename across these directories unless
  // `inputs` lists them explicitly.
  std::filesystem::path text_dir;
  std::filesystem::path logprob_dir;
  std::filesystem::path audio_dir;
  std::vector<InputTriple> inputs;
  std::filesystem::path vocabulary;
  std::filesystem::path output_dir;
  std::filesystem::path ui_dir;

  textnorm::NormalizationConfig normalization;
  ctcseg::AlignParams align;
  std::vector<dataset::FilterRule> filter_rules;
  dataset::CharRateBounds char_rate;
  double padding = 0.0;  // seconds added on both sides of each cut
  std::size_t jobs = 1;

  static PipelineConfig defaults();
  // Relative paths resolve against base_dir. Keys not present keep defaults.
  static PipelineConfig from_json(const nlohmann::ordered_json& doc, const std::filesystem::path& base_dir = {});
  static PipelineConfig load(const std::filesystem::path& path);

  // Every field, defaults included.
  nlohmann::ordered_json resolved_json() const;

  // Checks value invariants. With check_paths, also that referenced inputs
  // exist. Throws PipelineError(kInvalidConfig).
  void validate(bool check_paths) const;

  std::vector<InputTriple> discover_inputs() const;
};

// "8000,10000,12000" -> {8000, 10000, 12000}; throws PipelineError.
std::vector<std::size_t> parse_window_list(const std::string& text);

}  // namespace speechforge::pipeline
