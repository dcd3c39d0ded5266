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

#include <cstdint>
#include <string>
#include <vector>

#include "dcls/autograd.hpp"
#include "dcls/rng.hpp"

/// Differentiable layers on NCHW tensors. Convolutions are stride 1 with zero
/// "same" padding and odd square filters; weights are shaped
/// {out, in, k, k}, biases {1, out, 1, 1}, dense weights {out, in, 1, 1}.
namespace dcls::nn {

Var conv2d(const Var& x, const Var& weight, const Var& bias);
Var relu(const Var& x);
Var sigmoid(const Var& x);
Var add(const Var& a, const Var& b);
/// c * x.
Var mul(const Var& x, double c);
/// x[n,c,:,:] * s[n,c,0,0].
Var scale_channels(const Var& x, const Var& s);
Var concat_channels(const Var& a, const Var& b);
/// Mean over H and W, producing {n, c, 1, 1}.
Var global_avg_pool(const Var& x);
/// Dense layer on {n, in, 1, 1} inputs.
Var linear(const Var& x, const Var& weight, const Var& bias);
/// Same element order, new shape.
Var reshape(const Var& x, Shape shape);
/// {n, c*s*s, h, w} -> {n, c, h*s, w*s} with
/// out[n, c, h*s + i, w*s + j] = in[n, c*s*s + i*s + j, h, w].
Var pixel_shuffle(const Var& x, int scale);
/// Per-sample full (size-growing) 2D convolution of single-channel maps:
/// {n,1,A,A} and {n,1,B,B} -> {n,1,A+B-1,A+B-1}.
Var full_conv(const Var& a, const Var& b);
/// Divides every sample by the sum of its elements.
Var normalize_sum(const Var& x);
/// Mean absolute difference over all elements, a {1,1,1,1} scalar.
Var l1_loss(const Var& a, const Var& b);
/// sum(x * w) for a fixed tensor w of the same shape, a {1,1,1,1} scalar.
Var inner(const Var& x, const Tensor& w);
/// Per-channel DCLS deconvolution of each sample. features {n,L,h,w},
/// kernel {n,1,K,K}, filters {n,L,f,f}.
Var dcls_deconv(const Var& features, const Var& kernel, const Var& filters);

/// Named learnable tensors in registration order.
class ParameterSet {
 public:
  Var add(const std::string& name, Tensor init);
  std::size_t size() const { return vars_.size(); }
  const std::string& name(std::size_t i) const { return names_[i]; }
  Var& operator[](std::size_t i) { return vars_[i]; }
  const Var& operator[](std::size_t i) const { return vars_[i]; }
  std::size_t scalar_count() const;
  void zero_grad();
  /// Index of `name`, or size() when absent.
  std::size_t find(const std::string& name) const;

 private:
  std::vector<std::string> names_;
  std::vector<Var> vars_;
};

/// U(-b, b) with b = gain * sqrt(3 / fan_in). The default gain sqrt(2) is
/// He-uniform for layers followed by a ReLU.
Tensor he_uniform(Shape shape, int fan_in, Rng& rng, double gain = 1.4142135623730951);

}  // namespace dcls::nn
