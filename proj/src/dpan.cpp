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

#include "dcls/dpan.hpp"

#include <algorithm>

#include "dcls/common.hpp"

namespace dcls::dpan {

void DpanConfig::validate() const {
  require(in_channels >= 1 && out_channels >= 1, "channel counts must be positive");
  require(scale >= 1 && scale <= 4, "scale must be in 1..4, got ", scale);
  require(width >= 1, "width must be positive");
  require(cr_width >= 1 && cr_width <= width, "cr_width must be in [1, width], got ", cr_width);
  require(groups >= 1 && blocks_per_group >= 1, "groups and blocks must be >= 1");
  require(extractor_layers >= 1, "extractor needs at least one layer");
  require(smooth_size >= 1 && smooth_size % 2 == 1, "smooth filter size must be odd");
  require(ca_reduction >= 1, "channel attention reduction must be >= 1");
}

Dpan::Conv Dpan::make_conv(nn::ParameterSet& params, Rng& rng, const std::string& name, int in,
                           int out, int k, double gain) const {
  Conv c;
  c.w = params.add(prefix_ + name + ".weight", nn::he_uniform({out, in, k, k}, in * k * k, rng, gain));
  c.b = params.add(prefix_ + name + ".bias", nn::Tensor({1, out, 1, 1}));
  return c;
}

Dpan::Dpan(const DpanConfig& cfg, nn::ParameterSet& params, Rng& rng, const std::string& prefix)
    : cfg_(cfg), prefix_(prefix) {
  cfg_.validate();
  const int w = cfg_.width, cr = cfg_.cr_width;
  // Branch-final convs start small so every residual unit begins close to
  // the identity.
  constexpr double kRelu = 1.4142135623730951;
  constexpr double kBranch = 0.1;
  for (int l = 0; l < cfg_.extractor_layers; ++l)
    extractor_.push_back(make_conv(params, rng, "extract." + std::to_string(l),
                                   l == 0 ? cfg_.in_channels : w, w, 3,
                                   l + 1 < cfg_.extractor_layers ? kRelu : 1.0));

  const int f = cfg_.smooth_size;
  smooth_w_ = params.add(prefix_ + "smooth.weight", nn::Tensor({w * f * f, w, 1, 1}));
  nn::Tensor bias({1, w * f * f, 1, 1});
  const BlurKernel p = f >= 3 ? spectral::laplacian_filter().resized(f) : BlurKernel::delta(1);
  for (int c = 0; c < w; ++c)
    std::ranges::copy(p.weights(), bias.data.begin() + c * f * f);
  smooth_b_ = params.add(prefix_ + "smooth.bias", std::move(bias));

  reduce_ = make_conv(params, rng, "reduce", w, cr, 1, 1.0);
  const int hidden = std::max(1, w / cfg_.ca_reduction);
  for (int g = 0; g < cfg_.groups; ++g) {
    Group group;
    const std::string gp = "group." + std::to_string(g);
    for (int b = 0; b < cfg_.blocks_per_group; ++b) {
      const std::string bp = gp + ".block." + std::to_string(b);
      Block blk;
      blk.d1 = make_conv(params, rng, bp + ".deblurred.0", w + cr, w, 3, kRelu);
      blk.d2 = make_conv(params, rng, bp + ".deblurred.1", w, w, 3, kBranch);
      blk.p1 = make_conv(params, rng, bp + ".primitive.0", cr, cr, 3, kRelu);
      blk.p2 = make_conv(params, rng, bp + ".primitive.1", cr, cr, 3, kBranch);
      blk.ca_w1 = params.add(prefix_ + bp + ".attention.0.weight",
                             nn::he_uniform({hidden, w, 1, 1}, w, rng));
      blk.ca_b1 = params.add(prefix_ + bp + ".attention.0.bias", nn::Tensor({1, hidden, 1, 1}));
      blk.ca_w2 = params.add(prefix_ + bp + ".attention.1.weight",
                             nn::he_uniform({w, hidden, 1, 1}, hidden, rng, 1.0));
      blk.ca_b2 = params.add(prefix_ + bp + ".attention.1.bias", nn::Tensor({1, w, 1, 1}));
      group.blocks.push_back(std::move(blk));
    }
    group.d_tail = make_conv(params, rng, gp + ".deblurred.tail", w, w, 3, kBranch);
    group.p_tail = make_conv(params, rng, gp + ".primitive.tail", cr, cr, 3, kBranch);
    groups_.push_back(std::move(group));
  }
  const int s = cfg_.scale;
  fuse_ = make_conv(params, rng, "fuse", w + cr, w, 3, 1.0);
  upsample_ = make_conv(params, rng, "upsample", w, w * s * s, 3, 1.0);
  output_ = make_conv(params, rng, "output", w, cfg_.out_channels, 3, 1.0);
}

nn::Var Dpan::extract_features(const nn::Var& y) const {
  require(y.shape()[1] == cfg_.in_channels, "DPAN expects ", cfg_.in_channels,
          " input channels, got ", y.shape()[1]);
  nn::Var h = y;
  for (std::size_t l = 0; l < extractor_.size(); ++l) {
    h = apply(extractor_[l], h);
    if (l + 1 < extractor_.size()) h = nn::relu(h);
  }
  return h;
}

nn::Var Dpan::predict_smooth_filters(const nn::Var& features) const {
  const int f = cfg_.smooth_size;
  const nn::Var flat = nn::linear(nn::global_avg_pool(features), smooth_w_, smooth_b_);
  return nn::reshape(flat, {features.shape()[0], cfg_.width, f, f});
}

nn::Var Dpan::reduce_channels(const nn::Var& features) const { return apply(reduce_, features); }

nn::Var Dpan::channel_attention(int group, int block, const nn::Var& t) const {
  const Block& b = groups_.at(group).blocks.at(block);
  const nn::Var h = nn::relu(nn::linear(nn::global_avg_pool(t), b.ca_w1, b.ca_b1));
  return nn::sigmoid(nn::linear(h, b.ca_w2, b.ca_b2));
}

DualPath Dpan::dpab_forward(int group, int block, const DualPath& in) const {
  const Block& b = groups_.at(group).blocks.at(block);
  require(in.deblurred.shape()[1] == cfg_.width, "deblurred path must carry ", cfg_.width,
          " channels");
  require(in.primitive.shape()[1] == cfg_.cr_width, "primitive path must carry ", cfg_.cr_width,
          " channels");
  nn::Var t = apply(b.d2, nn::relu(apply(b.d1, nn::concat_channels(in.deblurred, in.primitive))));
  DualPath out;
  out.deblurred = nn::add(in.deblurred, nn::scale_channels(t, channel_attention(group, block, t)));
  out.primitive = nn::add(in.primitive, apply(b.p2, nn::relu(apply(b.p1, in.primitive))));
  return out;
}

DualPath Dpan::group_forward(int group, const DualPath& in) const {
  DualPath h = in;
  for (int b = 0; b < cfg_.blocks_per_group; ++b) h = dpab_forward(group, b, h);
  const Group& g = groups_.at(group);
  return {nn::add(in.deblurred, apply(g.d_tail, h.deblurred)),
          nn::add(in.primitive, apply(g.p_tail, h.primitive))};
}

nn::Var Dpan::reconstruct(const nn::Var& deblurred, const nn::Var& primitive) const {
  DualPath h{deblurred, primitive};
  for (int g = 0; g < cfg_.groups; ++g) h = group_forward(g, h);
  nn::Var fused = apply(fuse_, nn::concat_channels(h.deblurred, h.primitive));
  nn::Var up = nn::pixel_shuffle(apply(upsample_, fused), cfg_.scale);
  return apply(output_, up);
}

nn::Var Dpan::forward(const nn::Var& y, const nn::Var& kernel) const {
  const nn::Var features = extract_features(y);
  return run(features, kernel, predict_smooth_filters(features));
}

nn::Var Dpan::forward(const nn::Var& y, const nn::Var& kernel, const nn::Var& bank) const {
  return run(extract_features(y), kernel, bank);
}

nn::Var Dpan::run(const nn::Var& features, const nn::Var& kernel, const nn::Var& bank) const {
  const nn::Var deblurred = nn::dcls_deconv(features, kernel, bank);
  return reconstruct(deblurred, reduce_channels(features));
}

void Dpan::zero_block_outputs() {
  for (auto& g : groups_)
    for (auto& b : g.blocks)
      for (Conv* c : {&b.d2, &b.p2}) {
        std::ranges::fill(c->w.mutable_value().data, 0.0);
        std::ranges::fill(c->b.mutable_value().data, 0.0);
      }
}

DclsModel::DclsModel(const ModelConfig& cfg, std::uint64_t seed)
    : cfg_(cfg),
      init_rng_(seed),
      estimator_(cfg.estimator, params_, init_rng_),
      dpan_(cfg.dpan, params_, init_rng_) {
  require(cfg_.estimator.in_channels == cfg_.dpan.in_channels,
          "estimator and DPAN must read the same number of channels");
}

ModelOutput DclsModel::forward(const nn::Var& y) const {
  ModelOutput out;
  out.kernel = estimator_.forward(y).kernel;
  out.image = dpan_.forward(y, out.kernel);
  return out;
}

std::pair<Image, BlurKernel> DclsModel::super_resolve(const Image& y) const {
  nn::NoGradGuard guard;
  const ModelOutput out = forward(nn::constant(ddlk::to_tensor(y)));
  return {ddlk::from_tensor(out.image.value()), ddlk::kernel_from_tensor(out.kernel.value())};
}

}  // namespace dcls::dpan
