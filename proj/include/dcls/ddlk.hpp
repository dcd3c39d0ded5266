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
#include <vector>

#include "dcls/image.hpp"
#include "dcls/kernel.hpp"
#include "dcls/nn.hpp"

/// Dynamic deep linear kernel estimation.
///
/// A small convolutional trunk summarizes the LR image into a global
/// descriptor; one dense head per layer emits the taps of a linear filter h_i.
/// The filters are never interleaved with nonlinearities, so the stack
/// collapses exactly into one kernel delta * h_1 * ... * h_r, which is then
/// normalized to sum to one.
namespace dcls::ddlk {

struct FilterStack {
  std::vector<BlurKernel> filters;

  /// 1 + sum(size_i - 1).
  int receptive_field() const;
  void validate() const;
};

/// Full (size-growing) sequential convolution of the stack, normalized to
/// sum to one. Throws InvalidArgument on an empty stack and NumericalError
/// when the collapsed kernel sums to zero.
BlurKernel collapse_filters(const FilterStack& stack);

/// Collapse without the final normalization.
BlurKernel collapse_unnormalized(const FilterStack& stack);

/// Mean absolute difference; `target` is center-cropped or padded to the size
/// of `estimate` first.
double kernel_loss(const BlurKernel& estimate, const BlurKernel& target);

struct EstimatorConfig {
  std::vector<int> layer_sizes{11, 7, 5, 1};
  int trunk_layers = 5;
  int feature_width = 64;
  int in_channels = 3;

  int kernel_size() const;
  void validate() const;
};

/// Filters and collapsed kernel for a batch. filters[i] is {n, 1, s_i, s_i};
/// kernel is {n, 1, K, K} and sums to one per sample.
struct EstimatorOutput {
  std::vector<nn::Var> filters;
  nn::Var kernel;
};

class KernelEstimator {
 public:
  /// Registers parameters under `prefix` in `params`. Heads start at zero
  /// weight with a delta bias, so the untrained estimate is a delta.
  KernelEstimator(const EstimatorConfig& cfg, nn::ParameterSet& params, Rng& rng,
                  const std::string& prefix = "estimator.");

  const EstimatorConfig& config() const { return cfg_; }
  /// Receptive field of the conditioning trunk; inputs must be at least this large.
  int trunk_receptive_field() const { return 1 + 2 * cfg_.trunk_layers; }

  EstimatorOutput forward(const nn::Var& y) const;

  /// Single-image conveniences over forward().
  FilterStack generate_filters(const Image& y) const;
  BlurKernel estimate_kernel(const Image& y) const;

 private:
  EstimatorConfig cfg_;
  std::vector<nn::Var> conv_w_;
  std::vector<nn::Var> conv_b_;
  std::vector<nn::Var> head_w_;
  std::vector<nn::Var> head_b_;
};

/// Image <-> {1, C, H, W} tensor.
nn::Tensor to_tensor(const Image& img);
Image from_tensor(const nn::Tensor& t, int sample = 0);
/// Batch of same-shaped images as one tensor.
nn::Tensor stack_images(const std::vector<Image>& images);

nn::Tensor kernel_tensor(const BlurKernel& k);
BlurKernel kernel_from_tensor(const nn::Tensor& t, int sample = 0);

}  // namespace dcls::ddlk
