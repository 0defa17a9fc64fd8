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

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace speechforge::audio {

// Real-to-complex forward DFT of a fixed length, backed by FFTW. Plans are
// created under a global lock; forward() is safe to call concurrently.
class RealFft {
 public:
  explicit RealFft(std::size_t n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;
  RealFft(RealFft&& other) noexcept;
  RealFft& operator=(RealFft&& other) noexcept;

  std::size_t size() const { return n_; }
  std::size_t bins() const { return n_ / 2 + 1; }

  // in.size() == size(), out.size() == bins(). `in` is not modified.
  void forward(std::span<const double> in, std::span<std::complex<double>> out) const;

 private:
  std::size_t n_ = 0;
  void* plan_ = nullptr;
};

// Periodic Hann window; a length-1 window is {1}.
std::vector<double> hann_window(std::size_t n);

}  // namespace speechforge::audio
