// Copyright 2026 The dclssr Authors.
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
#include <span>
#include <vector>

namespace dcls::fft {

using Complex = std::complex<double>;

/// Row-major complex grid. Frequency (0, 0) is at index (0, 0); no fftshift.
class ComplexGrid {
 public:
  ComplexGrid() = default;
  ComplexGrid(int height, int width, Complex fill = {});

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return data_.size(); }

  Complex& at(int y, int x) { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  Complex at(int y, int x) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  Complex& operator[](std::size_t i) { return data_[i]; }
  Complex operator[](std::size_t i) const { return data_[i]; }

  std::span<Complex> data() { return data_; }
  std::span<const Complex> data() const { return data_; }

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<Complex> data_;
};

/// Unnormalized forward DFT (sign -1).
ComplexGrid forward(const ComplexGrid& in);
ComplexGrid forward_real(std::span<const double> plane, int height, int width);

/// Inverse DFT scaled by 1 / (height * width), so inverse(forward(x)) == x.
ComplexGrid inverse(const ComplexGrid& in);

/// Real part of the inverse transform. If `max_imag` is given it receives the
/// largest discarded imaginary magnitude.
std::vector<double> inverse_real(const ComplexGrid& in, double* max_imag = nullptr);

}  // namespace dcls::fft
