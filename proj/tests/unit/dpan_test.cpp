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

#include <gtest/gtest.h>

#include <cmath>

#include "dcls/common.hpp"
#include "dcls/kernelgen.hpp"
#include "dcls/spectral.hpp"
#include "gradcheck.hpp"
#include "test_support.hpp"

namespace dcls::dpan {
namespace {

using testing::random_tensor;

DpanConfig tiny(int scale = 2) {
  DpanConfig cfg;
  cfg.scale = scale;
  cfg.width = 8;
  cfg.cr_width = 4;
  cfg.groups = 2;
  cfg.blocks_per_group = 2;
  cfg.ca_reduction = 4;
  return cfg;
}

nn::Var delta_kernels(int n, int size) {
  nn::Tensor k({n, 1, size, size});
  for (int i = 0; i < n; ++i) k.at(i, 0, size / 2, size / 2) = 1.0;
  return nn::constant(std::move(k));
}

TEST(Dpan, OutputIsScaleTimesInput) {
  for (int s : {2, 3, 4}) {
    nn::ParameterSet ps;
    Rng rng(s);
    const Dpan net(tiny(s), ps, rng);
    const nn::Var y = nn::constant(random_tensor({2, 3, 7, 9}, 1, 0.0, 1.0));
    const nn::Var out = net.forward(y, delta_kernels(2, 5));
    EXPECT_EQ(out.shape(), (nn::Shape{2, 3, 7 * s, 9 * s})) << "s=" << s;
  }
}

TEST(Dpan, ExtractorIsLinearAtZeroAndDeterministic) {
  nn::ParameterSet ps;
  Rng rng(3);
  const Dpan net(tiny(), ps, rng);
  const nn::Tensor f = net.extract_features(nn::constant(nn::Tensor({1, 3, 6, 6}))).value();
  EXPECT_EQ(f.shape, (nn::Shape{1, 8, 6, 6}));
  for (double v : f.data) EXPECT_EQ(v, 0.0);
  const nn::Var y = nn::constant(random_tensor({1, 3, 6, 6}, 4));
  EXPECT_EQ(net.extract_features(y).value().data, net.extract_features(y).value().data);
}

TEST(Dpan, SmoothHeadStartsAtLaplacian) {
  nn::ParameterSet ps;
  Rng rng(5);
  const Dpan net(tiny(), ps, rng);
  const nn::Var feats = net.extract_features(nn::constant(random_tensor({2, 3, 6, 6}, 6)));
  const nn::Tensor bank = net.predict_smooth_filters(feats).value();
  ASSERT_EQ(bank.shape, (nn::Shape{2, 8, 3, 3}));
  const BlurKernel p = spectral::laplacian_filter();
  for (int n = 0; n < 2; ++n)
    for (int c = 0; c < 8; ++c)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) EXPECT_EQ(bank.at(n, c, i, j), p(i, j));
}

TEST(Dpan, SmoothHeadGradientMatchesFiniteDifferences) {
  nn::ParameterSet ps;
  Rng rng(7);
  const Dpan net(tiny(), ps, rng);
  nn::Var w = ps[ps.find("dpan.smooth.weight")];
  const nn::Var b = ps[ps.find("dpan.smooth.bias")];
  Rng prng(8);
  for (double& v : w.mutable_value().data) v = prng.uniform(-0.1, 0.1);
  const nn::Var y = nn::constant(random_tensor({1, 3, 8, 8}, 9, 0.0, 1.0));
  const nn::Var k = nn::constant(ddlk::kernel_tensor(kernelgen::make_isotropic_gaussian(5, 1.0)));
  const nn::Tensor probe = random_tensor({1, 3, 16, 16}, 10);
  const auto errs = testing::gradient_errors(
      [&](const std::vector<nn::Var>&) { return nn::inner(net.forward(y, k), probe); }, {w, b},
      1e-6, 40);
  for (double e : errs) EXPECT_LE(e, 1e-4);
}

TEST(FeatureDeconv, DeltaAndZeroBankIsIdentity) {
  const nn::Tensor f = random_tensor({1, 8, 10, 10}, 11);
  const nn::Tensor y =
      nn::dcls_deconv(nn::constant(f), delta_kernels(1, 7), nn::constant(nn::Tensor({1, 8, 3, 3})))
          .value();
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_NEAR(y.data[i], f.data[i], 1e-12);
}

TEST(FeatureDeconv, RecoversBlurredFeatures) {
  // Features built as k * R on a circulant grid, then deconvolved with the
  // true kernel and a small regularizer.
  const int L = 4;
  const BlurKernel k = kernelgen::make_isotropic_gaussian(7, 0.8);
  const Image r = testing::random_image(L, 16, 16, 12);
  const Image blurred = spectral::circular_convolve(r, k);
  nn::Tensor bank({1, L, 3, 3});
  const BlurKernel p = spectral::laplacian_filter();
  for (int c = 0; c < L; ++c)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) bank.at(0, c, i, j) = 1e-4 * p(i, j);
  const nn::Tensor out =
      nn::dcls_deconv(nn::constant(ddlk::to_tensor(blurred)), nn::constant(ddlk::kernel_tensor(k)),
                      nn::constant(bank))
          .value();
  EXPECT_LE(testing::relative_l2(out.data, ddlk::to_tensor(r).data), 0.02);
}

TEST(Dpab, ZeroFinalLayersPassThrough) {
  nn::ParameterSet ps;
  Rng rng(13);
  Dpan net(tiny(), ps, rng);
  net.zero_block_outputs();
  const DualPath in{nn::constant(random_tensor({2, 8, 5, 6}, 14)),
                    nn::constant(random_tensor({2, 4, 5, 6}, 15))};
  for (int g = 0; g < 2; ++g)
    for (int b = 0; b < 2; ++b) {
      const DualPath out = net.dpab_forward(g, b, in);
      EXPECT_EQ(out.deblurred.value().data, in.deblurred.value().data);
      EXPECT_EQ(out.primitive.value().data, in.primitive.value().data);
    }
}

TEST(Dpab, RejectsChannelMismatch) {
  nn::ParameterSet ps;
  Rng rng(16);
  const Dpan net(tiny(), ps, rng);
  const nn::Var d = nn::constant(nn::Tensor({1, 8, 4, 4}));
  EXPECT_THROW(net.dpab_forward(0, 0, {d, nn::constant(nn::Tensor({1, 3, 4, 4}))}),
               InvalidArgument);
  EXPECT_THROW(net.dpab_forward(0, 0, {nn::constant(nn::Tensor({1, 4, 4, 4})), d}),
               InvalidArgument);
}

TEST(ChannelAttention, UniformInputsGetEqualWeights) {
  nn::ParameterSet ps;
  Rng rng(17);
  const Dpan net(tiny(), ps, rng);
  // All-zero features: every gate sits at sigmoid(0).
  const nn::Tensor zero_gate = net.channel_attention(0, 0, nn::constant(nn::Tensor({1, 8, 4, 4}))).value();
  for (double v : zero_gate.data) EXPECT_DOUBLE_EQ(v, 0.5);

  // Channel-symmetric weights with a uniform map: equal gates, and permuting
  // channels of the input leaves them unchanged.
  nn::ParameterSet ps2;
  Rng rng2(18);
  const Dpan sym(tiny(), ps2, rng2);
  for (const char* name : {"dpan.group.1.block.1.attention.0.weight",
                           "dpan.group.1.block.1.attention.1.weight"})
    std::ranges::fill(ps2[ps2.find(name)].mutable_value().data, 0.3);
  nn::Tensor t({1, 8, 4, 4}, 0.7);
  const nn::Tensor gate = sym.channel_attention(1, 1, nn::constant(t)).value();
  for (double v : gate.data) EXPECT_DOUBLE_EQ(v, gate.data[0]);
  EXPECT_GT(gate.data[0], 0.5);
  nn::Tensor mixed({1, 8, 4, 4});
  for (int c = 0; c < 8; ++c)
    for (int i = 0; i < 16; ++i) mixed.data[c * 16 + i] = 0.1 * ((c * 5) % 8);
  nn::Tensor permuted({1, 8, 4, 4});
  for (int c = 0; c < 8; ++c)
    for (int i = 0; i < 16; ++i) permuted.data[c * 16 + i] = mixed.data[((c + 3) % 8) * 16 + i];
  const nn::Tensor g1 = sym.channel_attention(1, 1, nn::constant(mixed)).value();
  const nn::Tensor g2 = sym.channel_attention(1, 1, nn::constant(permuted)).value();
  for (int c = 0; c < 8; ++c) EXPECT_NEAR(g1.data[c], g2.data[c], 1e-15);
}

TEST(Dpan, FullScaleParameterInventory) {
  nn::ParameterSet ps;
  Rng rng(19);
  const Dpan net(DpanConfig{}, ps, rng);
  // 3 extractor convs, smooth head, reduction, 50 blocks of 4 convs plus
  // attention, 5 pairs of group tails, then fuse/upsample/output.
  EXPECT_EQ(ps.size(), 3u * 2 + 2 + 2 + 50u * 12 + 5u * 4 + 3u * 2);
  auto shape = [&](const std::string& n) {
    const std::size_t i = ps.find("dpan." + n);
    EXPECT_LT(i, ps.size()) << n;
    return i < ps.size() ? ps[i].shape() : nn::Shape{};
  };
  EXPECT_EQ(shape("extract.0.weight"), (nn::Shape{64, 3, 3, 3}));
  EXPECT_EQ(shape("smooth.weight"), (nn::Shape{64 * 9, 64, 1, 1}));
  EXPECT_EQ(shape("reduce.weight"), (nn::Shape{16, 64, 1, 1}));
  EXPECT_EQ(shape("group.4.block.9.deblurred.0.weight"), (nn::Shape{64, 80, 3, 3}));
  EXPECT_EQ(shape("group.4.block.9.deblurred.1.weight"), (nn::Shape{64, 64, 3, 3}));
  EXPECT_EQ(shape("group.4.block.9.primitive.0.weight"), (nn::Shape{16, 16, 3, 3}));
  EXPECT_EQ(shape("group.4.block.9.attention.0.weight"), (nn::Shape{4, 64, 1, 1}));
  EXPECT_EQ(shape("group.4.block.9.attention.1.weight"), (nn::Shape{64, 4, 1, 1}));
  EXPECT_EQ(shape("group.4.deblurred.tail.weight"), (nn::Shape{64, 64, 3, 3}));
  EXPECT_EQ(shape("fuse.weight"), (nn::Shape{64, 80, 3, 3}));
  EXPECT_EQ(shape("upsample.weight"), (nn::Shape{64 * 16, 64, 3, 3}));
  EXPECT_EQ(shape("output.weight"), (nn::Shape{3, 64, 3, 3}));
  EXPECT_EQ(ps.find("dpan.group.5.block.0.deblurred.0.weight"), ps.size());
}

ModelConfig toy_model() {
  ModelConfig cfg;
  cfg.estimator.layer_sizes = {5, 3, 1};
  cfg.estimator.trunk_layers = 2;
  cfg.estimator.feature_width = 4;
  cfg.dpan = tiny(2);
  cfg.dpan.width = 4;
  cfg.dpan.cr_width = 2;
  cfg.dpan.groups = 1;
  cfg.dpan.blocks_per_group = 1;
  cfg.dpan.ca_reduction = 2;
  return cfg;
}

TEST(DclsModel, DeterministicForward) {
  const DclsModel a(toy_model(), 21), b(toy_model(), 21);
  const Image y = testing::random_image(3, 12, 12, 22);
  const auto [xa, ka] = a.super_resolve(y);
  const auto [xb, kb] = b.super_resolve(y);
  EXPECT_EQ(xa, xb);
  EXPECT_EQ(ka, kb);
  EXPECT_EQ(xa, a.super_resolve(y).first);
  EXPECT_EQ(xa.height(), 24);
  EXPECT_EQ(ka.size(), 7);
}

TEST(DclsModel, EndToEndGradients) {
  DclsModel model(toy_model(), 23);
  nn::ParameterSet& ps = model.params();
  // Move off the identity-like initialization so every path is exercised.
  Rng prng(24);
  for (std::size_t i = 0; i < ps.size(); ++i)
    for (double& v : ps[i].mutable_value().data) v += prng.uniform(-0.05, 0.05);
  nn::Var y = nn::param(random_tensor({1, 3, 12, 12}, 25, 0.0, 1.0));
  const nn::Tensor probe = random_tensor({1, 3, 24, 24}, 26);
  const nn::Tensor kprobe = random_tensor({1, 1, 7, 7}, 27);
  std::vector<nn::Var> inputs{y};
  for (std::size_t i = 0; i < ps.size(); ++i) inputs.push_back(ps[i]);
  const auto errs = testing::gradient_errors(
      [&](const std::vector<nn::Var>& v) {
        const ModelOutput out = model.forward(v[0]);
        return nn::add(nn::inner(out.image, probe), nn::inner(out.kernel, kprobe));
      },
      inputs, 1e-6, 12);
  ASSERT_EQ(errs.size(), inputs.size());
  EXPECT_LE(errs[0], 1e-3) << "input";
  for (std::size_t i = 1; i < errs.size(); ++i) EXPECT_LE(errs[i], 1e-3) << ps.name(i - 1);
}

}  // namespace
}  // namespace dcls::dpan
