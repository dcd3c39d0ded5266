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

#include "dcls/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dcls/common.hpp"

namespace dcls {

BlurKernel::BlurKernel(int size) : size_(size) {
  require(size >= 1 && size % 2 == 1, "kernel size must be a positive odd integer, got ", size);
  weights_.assign(static_cast<std::size_t>(size) * size, 0.0);
}

BlurKernel::BlurKernel(int size, std::vector<double> weights) : BlurKernel(size) {
  require(weights.size() == weights_.size(), "kernel of size ", size, " needs ", weights_.size(),
          " weights, got ", weights.size());
  weights_ = std::move(weights);
}

BlurKernel BlurKernel::delta(int size) {
  BlurKernel k(size);
  k(k.radius(), k.radius()) = 1.0;
  return k;
}

double BlurKernel::at_offset(int dv, int du) const {
  const int r = radius();
  if (std::abs(dv) > r || std::abs(du) > r) return 0.0;
  return (*this)(dv + r, du + r);
}

double BlurKernel::sum() const { return std::accumulate(weights_.begin(), weights_.end(), 0.0); }

double BlurKernel::max() const { return *std::ranges::max_element(weights_); }

double BlurKernel::min() const { return *std::ranges::min_element(weights_); }

void BlurKernel::normalize() {
  const double s = sum();
  if (!(std::abs(s) > 1e-300) || !std::isfinite(s))
    throw InvalidArgument("cannot normalize a kernel whose weights sum to zero");
  for (double& w : weights_) w /= s;
}

BlurKernel BlurKernel::normalized() const {
  BlurKernel k = *this;
  k.normalize();
  return k;
}

BlurKernel BlurKernel::resized(int new_size) const {
  BlurKernel out(new_size);
  const int r = out.radius();
  for (int dv = -r; dv <= r; ++dv)
    for (int du = -r; du <= r; ++du) out(dv + r, du + r) = at_offset(dv, du);
  return out;
}

double max_abs_diff(const BlurKernel& a, const BlurKernel& b) {
  const int size = std::max(a.size(), b.size());
  const BlurKernel pa = a.resized(size);
  const BlurKernel pb = b.resized(size);
  double m = 0.0;
  for (std::size_t i = 0; i < pa.weights().size(); ++i)
    m = std::max(m, std::abs(pa.weights()[i] - pb.weights()[i]));
  return m;
}

}  // namespace dcls
