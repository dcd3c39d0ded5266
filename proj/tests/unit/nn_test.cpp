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

#include "dcls/nn.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "dcls/common.hpp"
#include "dcls/ddlk.hpp"
#include "dcls/spectral.hpp"
#include "gradcheck.hpp"
#include "test_support.hpp"

namespace dcls::nn {
namespace {

using testing::gradient_errors;
using testing::random_tensor;

Var weighted(const Var& out, std::uint64_t seed) {
  return inner(out, random_tensor(out.shape(), seed));
}

TEST(Conv2d, MatchesDirectLoops) {
  const Tensor x = random_tensor({2, 3, 6, 5}, 1);
  const Tensor w = random_tensor({4, 3, 3, 3}, 2);
  const Tensor b = random_tensor({1, 4, 1, 1}, 3);
  const Tensor y = conv2d(constant(x), constant(w), constant(b)).value();
  for (int n = 0; n < 2; ++n)
    for (int o = 0; o < 4; ++o)
      for (int yy = 0; yy < 6; ++yy)
        for (int xx = 0; xx < 5; ++xx) {
          double acc = b.data[o];
          for (int c = 0; c < 3; ++c)
            for (int ky = 0; ky < 3; ++ky)
              for (int kx = 0; kx < 3; ++kx) {
                const int sy = yy + ky - 1, sx = xx + kx - 1;
                if (sy < 0 || sy >= 6 || sx < 0 || sx >= 5) continue;
                acc += w.at(o, c, ky, kx) * x.at(n, c, sy, sx);
              }
          EXPECT_NEAR(y.at(n, o, yy, xx), acc, 1e-12);
        }
}

TEST(Conv2d, Gradients) {
  for (int k : {1, 3, 5}) {
    auto errs = gradient_errors(
        [&](const std::vector<Var>& v) { return weighted(conv2d(v[0], v[1], v[2]), 9); },
        {param(random_tensor({2, 2, 7, 6}, 4)), param(random_tensor({3, 2, k, k}, 5)),
         param(random_tensor({1, 3, 1, 1}, 6))},
        1e-6);
    for (double e : errs) EXPECT_LE(e, 1e-6) << "k=" << k;
  }
}

TEST(Conv2d, RejectsChannelMismatch) {
  EXPECT_THROW(conv2d(constant(Tensor({1, 2, 4, 4})), constant(Tensor({1, 3, 3, 3})), Var()),
               InvalidArgument);
}

TEST(Elementwise, Gradients) {
  // Inputs kept away from the ReLU kink.
  Tensor x = random_tensor({2, 3, 4, 4}, 7);
  for (double& v : x.data) v += v > 0 ? 0.1 : -0.1;
  auto errs = gradient_errors(
      [](const std::vector<Var>& v) {
        Var h = add(relu(v[0]), mul(sigmoid(v[1]), -1.5));
        h = scale_channels(h, v[2]);
        return weighted(concat_channels(h, v[1]), 11);
      },
      {param(x), param(random_tensor({2, 3, 4, 4}, 8)), param(random_tensor({2, 3, 1, 1}, 9))},
      1e-6);
  for (double e : errs) EXPECT_LE(e, 1e-7);
}

TEST(Pooling, LinearAndReshapeGradients) {
  auto errs = gradient_errors(
      [](const std::vector<Var>& v) {
        Var p = global_avg_pool(v[0]);
        Var l = linear(p, v[1], v[2]);
        return weighted(reshape(l, {2, 2, 3, 1}), 12);
      },
      {param(random_tensor({2, 4, 5, 3}, 13)), param(random_tensor({6, 4, 1, 1}, 14)),
       param(random_tensor({1, 6, 1, 1}, 15))},
      1e-6);
  for (double e : errs) EXPECT_LE(e, 1e-7);
}

TEST(PixelShuffle, FollowsIndexFormula) {
  const int s = 3, c = 2, h = 2, w = 3;
  Tensor t({1, c * s * s, h, w});
  for (std::size_t i = 0; i < t.size(); ++i) t.data[i] = static_cast<double>(i);
  const Tensor y = pixel_shuffle(constant(t), s).value();
  ASSERT_EQ(y.shape, (Shape{1, c, h * s, w * s}));
  for (int ch = 0; ch < c; ++ch)
    for (int yy = 0; yy < h; ++yy)
      for (int xx = 0; xx < w; ++xx)
        for (int i = 0; i < s; ++i)
          for (int j = 0; j < s; ++j)
            EXPECT_EQ(y.at(0, ch, yy * s + i, xx * s + j), t.at(0, ch * s * s + i * s + j, yy, xx));
  auto errs = gradient_errors(
      [](const std::vector<Var>& v) { return weighted(pixel_shuffle(v[0], 2), 16); },
      {param(random_tensor({2, 8, 3, 2}, 17))}, 1e-6);
  EXPECT_LE(errs[0], 1e-8);
}

TEST(FullConv, MatchesCollapseAndHasGradients) {
  const BlurKernel a = testing::random_filter(3, 18), b = testing::random_filter(5, 19);
  const Tensor y = full_conv(constant(ddlk::kernel_tensor(a)), constant(ddlk::kernel_tensor(b))).value();
  const BlurKernel ref = ddlk::collapse_unnormalized({{a, b}});
  ASSERT_EQ(y.h(), 7);
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y.data[i], ref.weights()[i], 1e-14);
  auto errs = gradient_errors(
      [](const std::vector<Var>& v) { return weighted(normalize_sum(full_conv(v[0], v[1])), 20); },
      {param(random_tensor({2, 1, 3, 3}, 21, 0.1, 1.0)),
       param(random_tensor({2, 1, 5, 5}, 22, 0.1, 1.0))},
      1e-6);
  for (double e : errs) EXPECT_LE(e, 1e-7);
}

TEST(NormalizeSum, RejectsZeroSum) {
  EXPECT_THROW(normalize_sum(constant(Tensor({1, 1, 3, 3}))), NumericalError);
}

TEST(L1Loss, ValueAndGradients) {
  const Tensor a({1, 1, 2, 2}, {0.5, -1.0, 2.0, 0.0});
  const Tensor b({1, 1, 2, 2}, {0.0, 1.0, 2.5, 0.25});
  EXPECT_DOUBLE_EQ(l1_loss(constant(a), constant(b)).value().data[0],
                   (0.5 + 2.0 + 0.5 + 0.25) / 4.0);
  auto errs = gradient_errors([](const std::vector<Var>& v) { return l1_loss(v[0], v[1]); },
                              {param(a), param(b)}, 1e-6);
  for (double e : errs) EXPECT_LE(e, 1e-8);
}

TEST(DclsDeconv, IdentityForDeltaKernelAndZeroBank) {
  const Tensor f = random_tensor({2, 4, 8, 8}, 23);
  Tensor k({2, 1, 5, 5});
  k.at(0, 0, 2, 2) = k.at(1, 0, 2, 2) = 1.0;
  const Tensor y = dcls_deconv(constant(f), constant(k), constant(Tensor({2, 4, 3, 3}))).value();
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y.data[i], f.data[i], 1e-12);
}

TEST(DclsDeconv, GradientsForFeaturesKernelAndFilters) {
  auto errs = gradient_errors(
      [](const std::vector<Var>& v) { return weighted(dcls_deconv(v[0], v[1], v[2]), 24); },
      {param(random_tensor({2, 3, 8, 9}, 25)), param(random_tensor({2, 1, 5, 5}, 26, 0.1, 1.0)),
       param(random_tensor({2, 3, 3, 3}, 27, -0.5, 0.5))},
      1e-6);
  for (double e : errs) EXPECT_LE(e, 1e-4);
}

TEST(Autograd, AccumulatesAcrossSharedUses) {
  Var x = param(Tensor({1, 1, 1, 2}, {1.5, -2.0}));
  Var y = add(x, add(x, x));
  backward(inner(y, Tensor({1, 1, 1, 2}, {1.0, 2.0})));
  EXPECT_DOUBLE_EQ(x.grad().data[0], 3.0);
  EXPECT_DOUBLE_EQ(x.grad().data[1], 6.0);
}

TEST(Autograd, NoGradGuardSkipsGraph) {
  Var x = param(Tensor({1, 1, 1, 1}, 2.0));
  {
    NoGradGuard guard;
    EXPECT_FALSE(add(x, x).requires_grad());
  }
  EXPECT_TRUE(add(x, x).requires_grad());
  EXPECT_FALSE(add(constant(Tensor({1, 1, 1, 1})), constant(Tensor({1, 1, 1, 1}))).requires_grad());
}

TEST(ParameterSet, NamesAreUnique) {
  ParameterSet ps;
  ps.add("a", Tensor({1, 1, 1, 2}));
  EXPECT_THROW(ps.add("a", Tensor({1, 1, 1, 1})), InvalidArgument);
  EXPECT_EQ(ps.find("a"), 0u);
  EXPECT_EQ(ps.find("b"), 1u);
  EXPECT_EQ(ps.scalar_count(), 2u);
}

}  // namespace
}  // namespace dcls::nn
