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

#include "dcls/ddlk.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dcls/common.hpp"

namespace dcls::ddlk {

int FilterStack::receptive_field() const {
  int rf = 1;
  for (const auto& f : filters) rf += f.size() - 1;
  return rf;
}

void FilterStack::validate() const {
  require(!filters.empty(), "filter stack is empty");
  for (const auto& f : filters) {
    require(f.size() >= 1 && f.size() % 2 == 1, "filter sizes must be odd, got ", f.size());
    for (double w : f.weights()) require(std::isfinite(w), "filter stack has non-finite taps");
  }
}

BlurKernel collapse_unnormalized(const FilterStack& stack) {
  stack.validate();
  BlurKernel acc = BlurKernel::delta(1);
  for (const auto& f : stack.filters) {
    const int a = acc.size(), b = f.size(), c = a + b - 1;
    BlurKernel next(c);
    for (int i = 0; i < a; ++i)
      for (int j = 0; j < a; ++j)
        for (int p = 0; p < b; ++p)
          for (int q = 0; q < b; ++q) next(i + p, j + q) += acc(i, j) * f(p, q);
    acc = std::move(next);
  }
  return acc;
}

BlurKernel collapse_filters(const FilterStack& stack) {
  BlurKernel k = collapse_unnormalized(stack);
  if (!(std::abs(k.sum()) > 1e-12))
    throw NumericalError("collapsed kernel sums to zero, cannot normalize");
  k.normalize();
  return k;
}

double kernel_loss(const BlurKernel& estimate, const BlurKernel& target) {
  require(!estimate.empty() && !target.empty(), "kernel_loss of an empty kernel");
  const BlurKernel t = target.resized(estimate.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < t.weights().size(); ++i)
    acc += std::abs(estimate.weights()[i] - t.weights()[i]);
  return acc / static_cast<double>(t.weights().size());
}

int EstimatorConfig::kernel_size() const {
  int rf = 1;
  for (int s : layer_sizes) rf += s - 1;
  return rf;
}

void EstimatorConfig::validate() const {
  require(!layer_sizes.empty(), "estimator needs at least one filter layer");
  for (int s : layer_sizes) require(s >= 1 && s % 2 == 1, "estimator layer sizes must be odd");
  require(trunk_layers >= 1, "estimator trunk needs at least one conv layer");
  require(feature_width >= 1, "estimator feature width must be positive");
  require(in_channels >= 1, "estimator input channels must be positive");
}

KernelEstimator::KernelEstimator(const EstimatorConfig& cfg, nn::ParameterSet& params, Rng& rng,
                                 const std::string& prefix)
    : cfg_(cfg) {
  cfg_.validate();
  const int w = cfg_.feature_width;
  for (int l = 0; l < cfg_.trunk_layers; ++l) {
    const int in = l == 0 ? cfg_.in_channels : w;
    const std::string base = prefix + "trunk." + std::to_string(l);
    conv_w_.push_back(params.add(base + ".weight", nn::he_uniform({w, in, 3, 3}, in * 9, rng)));
    conv_b_.push_back(params.add(base + ".bias", nn::Tensor({1, w, 1, 1})));
  }
  for (std::size_t i = 0; i < cfg_.layer_sizes.size(); ++i) {
    const int s = cfg_.layer_sizes[i];
    const std::string base = prefix + "head." + std::to_string(i);
    nn::Tensor bias({1, s * s, 1, 1});
    bias.data[(s / 2) * s + s / 2] = 1.0;
    head_w_.push_back(params.add(base + ".weight", nn::Tensor({s * s, w, 1, 1})));
    head_b_.push_back(params.add(base + ".bias", std::move(bias)));
  }
}

EstimatorOutput KernelEstimator::forward(const nn::Var& y) const {
  const nn::Shape& ys = y.shape();
  require(ys[1] == cfg_.in_channels, "estimator expects ", cfg_.in_channels, " channels, got ",
          ys[1]);
  require(ys[2] >= trunk_receptive_field() && ys[3] >= trunk_receptive_field(), "image ", ys[2],
          "x", ys[3], " is smaller than the estimator receptive field ", trunk_receptive_field());
  nn::Var h = y;
  for (std::size_t l = 0; l < conv_w_.size(); ++l) h = nn::relu(nn::conv2d(h, conv_w_[l], conv_b_[l]));
  const nn::Var desc = nn::global_avg_pool(h);

  EstimatorOutput out;
  nn::Var acc;
  for (std::size_t i = 0; i < head_w_.size(); ++i) {
    const int s = cfg_.layer_sizes[i];
    nn::Var f = nn::reshape(nn::linear(desc, head_w_[i], head_b_[i]), {ys[0], 1, s, s});
    out.filters.push_back(f);
    acc = i == 0 ? f : nn::full_conv(acc, f);
  }
  out.kernel = nn::normalize_sum(acc);
  return out;
}

FilterStack KernelEstimator::generate_filters(const Image& y) const {
  nn::NoGradGuard guard;
  const EstimatorOutput out = forward(nn::constant(to_tensor(y)));
  FilterStack stack;
  for (const auto& f : out.filters) stack.filters.push_back(kernel_from_tensor(f.value()));
  return stack;
}

BlurKernel KernelEstimator::estimate_kernel(const Image& y) const {
  nn::NoGradGuard guard;
  return kernel_from_tensor(forward(nn::constant(to_tensor(y))).kernel.value());
}

nn::Tensor to_tensor(const Image& img) {
  return nn::Tensor({1, img.channels(), img.height(), img.width()},
                    std::vector<double>(img.data().begin(), img.data().end()));
}

Image from_tensor(const nn::Tensor& t, int sample) {
  require(sample >= 0 && sample < t.n(), "sample index out of range");
  Image img(t.c(), t.h(), t.w());
  const std::size_t per = t.sample_size();
  std::copy_n(t.data.begin() + sample * per, per, img.data().begin());
  return img;
}

nn::Tensor stack_images(const std::vector<Image>& images) {
  require(!images.empty(), "cannot stack an empty batch");
  const Image& first = images.front();
  nn::Tensor t({static_cast<int>(images.size()), first.channels(), first.height(), first.width()});
  for (std::size_t i = 0; i < images.size(); ++i) {
    require(images[i].same_shape(first), "batch images must share one shape");
    std::ranges::copy(images[i].data(), t.data.begin() + i * first.size());
  }
  return t;
}

nn::Tensor kernel_tensor(const BlurKernel& k) {
  return nn::Tensor({1, 1, k.size(), k.size()},
                    std::vector<double>(k.weights().begin(), k.weights().end()));
}

BlurKernel kernel_from_tensor(const nn::Tensor& t, int sample) {
  require(t.c() == 1 && t.h() == t.w(), "kernel tensor must be {n, 1, K, K}");
  require(sample >= 0 && sample < t.n(), "sample index out of range");
  const std::size_t per = t.sample_size();
  return BlurKernel(t.h(), std::vector<double>(t.data.begin() + sample * per,
                                               t.data.begin() + (sample + 1) * per));
}

}  // namespace dcls::ddlk
