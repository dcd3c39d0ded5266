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

#include <span>
#include <vector>

namespace dcls {

/// Square, odd-sized 2D blur kernel stored row-major. Index (size/2, size/2)
/// is the center pixel (offset (0, 0)).
///
/// Synthesized kernels are nonnegative and sum to one. Reformulated and
/// estimated kernels may carry small negative side lobes, so nonnegativity is
/// not enforced by the type.
class BlurKernel {
 public:
  BlurKernel() = default;
  /// Zero kernel of the given odd size.
  explicit BlurKernel(int size);
  BlurKernel(int size, std::vector<double> weights);

  static BlurKernel delta(int size);

  int size() const { return size_; }
  int radius() const { return size_ / 2; }
  bool empty() const { return size_ == 0; }

  double& operator()(int row, int col) { return weights_[row * size_ + col]; }
  double operator()(int row, int col) const { return weights_[row * size_ + col]; }

  /// Weight at offset (dv, du) from the center; zero outside the support.
  double at_offset(int dv, int du) const;

  double center() const { return (*this)(radius(), radius()); }
  double sum() const;
  double max() const;
  double min() const;

  /// Divides by the weight sum. Throws if the sum is (numerically) zero.
  void normalize();
  BlurKernel normalized() const;

  /// Center-aligned crop (new_size < size) or zero pad (new_size > size).
  BlurKernel resized(int new_size) const;

  std::span<double> weights() { return weights_; }
  std::span<const double> weights() const { return weights_; }

  bool operator==(const BlurKernel& other) const = default;

 private:
  int size_ = 0;
  std::vector<double> weights_;
};

/// Largest absolute elementwise difference; kernels are center-aligned first.
double max_abs_diff(const BlurKernel& a, const BlurKernel& b);

}  // namespace dcls
