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

// Independent slow references used by the tests. None of these share code
// with the library implementations they check.

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "speechforge/ctcseg/logprobs.hpp"

namespace sftest {

struct BruteAlignment {
  double log_prob = 0.0;
  std::size_t end_frame = 0;
  std::vector<std::size_t> char_frames;
  bool feasible = false;
};

// Enumerates every end frame and every set of advance frames.
BruteAlignment brute_force_alignment(const speechforge::ctcseg::LogProbMatrix& matrix, std::span<const int> chars,
                                     int blank);

struct EditOracle {
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;
  std::size_t matches = 0;
  std::size_t distance = 0;
};

// Memoized top-down recursion over prefixes; the script is read backward
// from the end preferring match, substitute, delete, insert.
EditOracle edit_oracle(const std::vector<std::string>& ref, const std::vector<std::string>& hyp);

// O(n^2) one-sided DFT of a real sequence (bins 0..n/2).
std::vector<std::complex<double>> naive_dft(std::span<const double> x);

// Welch average built on naive_dft: periodic Hann, hop = segment / 2,
// per-segment mean removal. Returns one-sided power per bin (unscaled).
std::vector<double> naive_welch(std::span<const float> samples, std::size_t segment);

// Highest bin index whose power is within threshold_db of the peak.
std::size_t naive_bandwidth_bin(std::span<const double> power, double threshold_db);

}  // namespace sftest
