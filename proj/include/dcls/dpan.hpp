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

#include <string>
#include <vector>

#include "dcls/ddlk.hpp"
#include "dcls/image.hpp"
#include "dcls/kernel.hpp"
#include "dcls/nn.hpp"
#include "dcls/spectral.hpp"

/// Reconstruction network: feature extraction, per-image smooth filter
/// prediction, per-channel DCLS deconvolution in feature space, dual-path
/// attention groups and pixel-shuffle upsampling.
namespace dcls::dpan {

struct DpanConfig {
  int in_channels = 3;
  int out_channels = 3;
  int scale = 4;
  /// Feature channels L, which is also the width of the deblurred path.
  int width = 64;
  /// Channels of the primitive path after channel reduction.
  int cr_width = 16;
  int groups = 5;
  int blocks_per_group = 10;
  int extractor_layers = 3;
  int smooth_size = 3;
  int ca_reduction = 16;

  void validate() const;
};

/// Both paths of the dual-path trunk.
struct DualPath {
  nn::Var deblurred;
  nn::Var primitive;
};

class Dpan {
 public:
  Dpan(const DpanConfig& cfg, nn::ParameterSet& params, Rng& rng,
       const std::string& prefix = "dpan.");

  const DpanConfig& config() const { return cfg_; }

  /// G y, {n, width, h, w}.
  nn::Var extract_features(const nn::Var& y) const;
  /// Per-image smooth filters, {n, width, f, f}.
  nn::Var predict_smooth_filters(const nn::Var& features) const;
  /// Channel reduction of the raw features into the primitive path.
  nn::Var reduce_channels(const nn::Var& features) const;
  /// Squeeze-excite gate of one block on a {n, width, h, w} map, {n, width, 1, 1}.
  nn::Var channel_attention(int group, int block, const nn::Var& t) const;
  DualPath dpab_forward(int group, int block, const DualPath& in) const;
  DualPath group_forward(int group, const DualPath& in) const;
  /// Trunk, fusion and pixel-shuffle upsampling to {n, out, s h, s w}.
  nn::Var reconstruct(const nn::Var& deblurred, const nn::Var& primitive) const;

  /// Full pass given an estimated kernel {n, 1, K, K}.
  nn::Var forward(const nn::Var& y, const nn::Var& kernel) const;
  /// Same pass with an externally supplied smooth-filter bank {n, width, f, f}.
  nn::Var forward(const nn::Var& y, const nn::Var& kernel, const nn::Var& bank) const;

  /// Zeroes the weight and bias of the last conv in both paths of every
  /// block, turning each block into an identity map.
  void zero_block_outputs();

 private:
  struct Conv {
    nn::Var w, b;
  };
  struct Block {
    Conv d1, d2, p1, p2;
    nn::Var ca_w1, ca_b1, ca_w2, ca_b2;
  };
  struct Group {
    std::vector<Block> blocks;
    Conv d_tail, p_tail;
  };

  Conv make_conv(nn::ParameterSet& params, Rng& rng, const std::string& name, int in, int out,
                 int k, double gain) const;
  static nn::Var apply(const Conv& c, const nn::Var& x) { return nn::conv2d(x, c.w, c.b); }
  nn::Var run(const nn::Var& features, const nn::Var& kernel, const nn::Var& bank) const;

  DpanConfig cfg_;
  std::string prefix_;
  std::vector<Conv> extractor_;
  nn::Var smooth_w_, smooth_b_;
  Conv reduce_;
  std::vector<Group> groups_;
  Conv fuse_, upsample_, output_;
};

/// Estimator plus reconstruction network with joint parameters.
struct ModelConfig {
  ddlk::EstimatorConfig estimator;
  DpanConfig dpan;
};

struct ModelOutput {
  nn::Var image;
  nn::Var kernel;
};

class DclsModel {
 public:
  explicit DclsModel(const ModelConfig& cfg, std::uint64_t seed = 0);

  const ModelConfig& config() const { return cfg_; }
  nn::ParameterSet& params() { return params_; }
  const nn::ParameterSet& params() const { return params_; }
  const ddlk::KernelEstimator& estimator() const { return estimator_; }
  const Dpan& dpan() const { return dpan_; }

  ModelOutput forward(const nn::Var& y) const;

  /// Inference on one LR image: SR output and estimated kernel.
  std::pair<Image, BlurKernel> super_resolve(const Image& y) const;

 private:
  ModelConfig cfg_;
  nn::ParameterSet params_;
  Rng init_rng_;
  ddlk::KernelEstimator estimator_;
  Dpan dpan_;
};

}  // namespace dcls::dpan
