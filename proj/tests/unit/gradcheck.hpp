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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "dcls/autograd.hpp"
#include "dcls/rng.hpp"

namespace dcls::testing {

/// Relative error ||numeric - analytic|| / max(||numeric||, ||analytic||) per
/// input, using central differences on up to `max_entries` randomly chosen
/// elements of each input. An input whose gradient is (near) zero by
/// construction is measured against 1e-3 of the largest gradient norm over
/// all inputs instead, so roundoff does not read as a 100% error.
inline std::vector<double> gradient_errors(
    const std::function<nn::Var(const std::vector<nn::Var>&)>& f, std::vector<nn::Var> inputs,
    double step, std::size_t max_entries = 60, std::uint64_t seed = 1) {
  for (auto& v : inputs) v.zero_grad();
  nn::backward(f(inputs));
  std::vector<double> diffs, scales;
  Rng rng(seed);
  for (auto& in : inputs) {
    const std::size_t n = in.value().size();
    std::vector<std::size_t> idx;
    if (n <= max_entries) {
      for (std::size_t i = 0; i < n; ++i) idx.push_back(i);
    } else {
      for (std::size_t i = 0; i < max_entries; ++i) idx.push_back(rng.below(n));
    }
    const nn::Tensor analytic = in.grad().size() == n ? in.grad() : nn::Tensor(in.shape());
    double num2 = 0.0, ana2 = 0.0, diff2 = 0.0;
    for (std::size_t i : idx) {
      double& x = in.mutable_value().data[i];
      const double keep = x;
      nn::NoGradGuard guard;
      x = keep + step;
      const double up = f(inputs).value().data[0];
      x = keep - step;
      const double down = f(inputs).value().data[0];
      x = keep;
      const double numeric = (up - down) / (2.0 * step);
      num2 += numeric * numeric;
      ana2 += analytic.data[i] * analytic.data[i];
      diff2 += (numeric - analytic.data[i]) * (numeric - analytic.data[i]);
    }
    diffs.push_back(std::sqrt(diff2));
    scales.push_back(std::sqrt(std::max(num2, ana2)));
  }
  double largest = 0.0;
  for (double s : scales) largest = std::max(largest, s);
  std::vector<double> errors;
  for (std::size_t i = 0; i < diffs.size(); ++i)
    errors.push_back(diffs[i] / std::max({scales[i], 1e-3 * largest, 1e-300}));
  return errors;
}

inline nn::Tensor random_tensor(nn::Shape shape, std::uint64_t seed, double lo = -1.0,
                                double hi = 1.0) {
  Rng rng(seed);
  nn::Tensor t(shape);
  for (double& v : t.data) v = rng.uniform(lo, hi);
  return t;
}

}  // namespace dcls::testing
