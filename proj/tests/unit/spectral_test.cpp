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

#include "dcls/spectral.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <vector>

#include "dcls/common.hpp"
#include "dcls/degrade.hpp"
#include "dcls/kernelgen.hpp"
#include "dcls/rng.hpp"
#include "test_support.hpp"

namespace dcls::spectral {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using testing::random_filter;
using testing::random_image;
using testing::random_kernel;

// Dense matrix of circular convolution with `k` on an h x w grid, acting on
// row-major flattened planes.
MatrixXd circulant(const BlurKernel& k, int h, int w) {
  const int n = h * w;
  const int r = k.radius();
  MatrixXd m = MatrixXd::Zero(n, n);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int dv = -r; dv <= r; ++dv)
        for (int du = -r; du <= r; ++du) {
          const int yy = ((y - dv) % h + h) % h;
          const int xx = ((x - du) % w + w) % w;
          m(y * w + x, yy * w + xx) += k.at_offset(dv, du);
        }
  return m;
}

VectorXd to_vec(std::span<const double> s) {
  return Eigen::Map<const VectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
}

double max_abs(const VectorXd& a, std::span<const double> b) {
  double m = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

TEST(Psf2Otf, DeltaIsAllOnes) {
  const ComplexGrid otf = psf2otf(BlurKernel::delta(5), 8, 10);
  for (const auto& v : otf.data()) {
    EXPECT_NEAR(v.real(), 1.0, 1e-14);
    EXPECT_NEAR(v.imag(), 0.0, 1e-14);
  }
}

TEST(Psf2Otf, DcEqualsSumAndMatchesExplicitDft) {
  const BlurKernel k = random_filter(5, 3);
  const int h = 7, w = 9;
  const ComplexGrid otf = psf2otf(k, h, w);
  EXPECT_NEAR(otf.at(0, 0).real(), k.sum(), 1e-12);
  const int r = k.radius();
  for (int fy = 0; fy < h; ++fy)
    for (int fx = 0; fx < w; ++fx) {
      fft::Complex acc = 0.0;
      for (int dv = -r; dv <= r; ++dv)
        for (int du = -r; du <= r; ++du) {
          const double ph = -2.0 * std::numbers::pi * (double(fy * dv) / h + double(fx * du) / w);
          acc += k.at_offset(dv, du) * std::polar(1.0, ph);
        }
      EXPECT_NEAR(std::abs(otf.at(fy, fx) - acc), 0.0, 1e-12);
    }
}

TEST(Psf2Otf, RejectsOversizedKernel) {
  EXPECT_THROW(psf2otf(BlurKernel::delta(9), 8, 16), InvalidArgument);
}

TEST(CircularConvolve, MatchesDirectOracle) {
  const Image x = random_image(2, 12, 15, 4);
  const BlurKernel k = random_filter(7, 5);
  const Image a = circular_convolve(x, k);
  const Image b = testing::direct_circular_convolve(x, k);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a.data()[i], b.data()[i], 1e-12);
}

TEST(Cls, MatchesNormalEquations) {
  const int h = 8, w = 8;
  const BlurKernel k = random_kernel(5, 7);
  const ClsConfig cfg{.smooth_filter = laplacian_filter(), .lambda = 50.0};
  const Image y = random_image(1, h, w, 8);
  const MatrixXd K = circulant(k, h, w);
  const MatrixXd P = circulant(cfg.smooth_filter, h, w);
  const MatrixXd A = K.transpose() * K + P.transpose() * P / cfg.lambda;
  const VectorXd expected = A.ldlt().solve(K.transpose() * to_vec(y.data()));
  const Image got = apply_deconv(cls_operator(k, cfg, h, w), y);
  EXPECT_LE(max_abs(expected, got.data()), 1e-9);
}

TEST(Wiener, MatchesNormalEquationsAndEqualsScaledDeltaCls) {
  const int h = 8, w = 6;
  const BlurKernel k = random_kernel(3, 9);
  const double nsr = 0.03;
  const Image y = random_image(1, h, w, 10);
  const MatrixXd K = circulant(k, h, w);
  const MatrixXd A = K.transpose() * K + nsr * MatrixXd::Identity(h * w, h * w);
  const VectorXd expected = A.ldlt().solve(K.transpose() * to_vec(y.data()));
  const Image got = apply_deconv(wiener_operator(k, nsr, h, w), y);
  EXPECT_LE(max_abs(expected, got.data()), 1e-9);

  // Delta smooth filter scaled so |P|^2 / lambda == nsr.
  BlurKernel p = BlurKernel::delta(1);
  p(0, 0) = std::sqrt(nsr * 100.0);
  const Image via_cls = apply_deconv(cls_operator(k, {.smooth_filter = p, .lambda = 100.0}, h, w), y);
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got.data()[i], via_cls.data()[i], 1e-12);
}

TEST(Wiener, SingularWithoutRegularizer) {
  // Box kernel of width 2 along x (padded to 3) has a zero at the Nyquist column.
  BlurKernel box(3, {0, 0, 0, 0, 0.5, 0.5, 0, 0, 0});
  EXPECT_THROW(wiener_operator(box, 0.0, 8, 8), SingularOperator);
  EXPECT_NO_THROW(wiener_operator(box, 1e-3, 8, 8));
}

TEST(Dcls, MatchesPerChannelNormalEquations) {
  const int h = 6, w = 8, L = 3;
  const BlurKernel k = random_kernel(5, 12);
  SmoothFilterBank bank;
  for (int i = 0; i < L; ++i) bank.filters.push_back(random_filter(3, 20 + i));
  const Image f = random_image(L, h, w, 13);
  const auto ops = dcls_operator(k, bank, h, w);
  ASSERT_EQ(static_cast<int>(ops.size()), L);
  const MatrixXd K = circulant(k, h, w);
  for (int i = 0; i < L; ++i) {
    const MatrixXd P = circulant(bank.filters[i], h, w);
    const MatrixXd A = K.transpose() * K + P.transpose() * P;
    const VectorXd expected = A.ldlt().solve(K.transpose() * to_vec(f.plane(i)));
    const auto got = apply_deconv(ops[i], f.plane(i), h, w);
    EXPECT_LE(max_abs(expected, got), 1e-9);
  }
}

TEST(Dcls, ForwardAgreesWithOperators) {
  const DclsProblem p{.channels = 2, .height = 10, .width = 12, .kernel_size = 5, .filter_size = 3};
  const BlurKernel k = random_kernel(5, 30);
  SmoothFilterBank bank{{random_filter(3, 31), random_filter(3, 32)}};
  const Image f = random_image(2, 10, 12, 33);
  std::vector<double> filters;
  for (const auto& b : bank.filters) filters.insert(filters.end(), b.weights().begin(), b.weights().end());
  std::vector<double> out(f.size());
  dcls_deconv_forward(p, f.data(), k.weights(), filters, out);
  const auto ops = dcls_operator(k, bank, 10, 12);
  for (int c = 0; c < 2; ++c) {
    const auto ref = apply_deconv(ops[c], f.plane(c), 10, 12);
    for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(out[c * ref.size() + i], ref[i], 1e-12);
  }
}

TEST(Operators, PreserveDcAndAreConjugateSymmetric) {
  const int h = 16, w = 12;
  const BlurKernel k = kernelgen::make_anisotropic_gaussian(7, 1.5, 0.8, 0.3);
  const auto op = cls_operator(k, {}, h, w);
  // Laplacian vanishes at DC and K(0) == 1, so the DC response is exactly 1.
  EXPECT_NEAR(op.response().at(0, 0).real(), 1.0, 1e-12);
  EXPECT_NEAR(op.response().at(0, 0).imag(), 0.0, 1e-12);
  for (int fy = 0; fy < h; ++fy)
    for (int fx = 0; fx < w; ++fx) {
      const auto a = op.response().at(fy, fx);
      const auto b = op.response().at((h - fy) % h, (w - fx) % w);
      EXPECT_NEAR(std::abs(a - std::conj(b)), 0.0, 1e-12);
    }
  double max_imag = 1.0;
  apply_deconv(op, random_image(1, h, w, 1).plane(0), h, w, &max_imag);
  EXPECT_LE(max_imag, 1e-12);
}

TEST(Cls, LargerLambdaRestoresMoreHighFrequency) {
  const int h = 16, w = 16;
  const BlurKernel k = kernelgen::make_isotropic_gaussian(7, 1.2);
  double prev = 0.0;
  for (double lambda : {1.0, 10.0, 100.0, 1000.0}) {
    const auto op = cls_operator(k, {.lambda = lambda}, h, w);
    const double nyq = std::abs(op.response().at(h / 2, w / 2));
    EXPECT_GT(nyq, prev);
    prev = nyq;
  }
  EXPECT_THROW(cls_operator(k, {.lambda = 0.0}, h, w), InvalidArgument);
}

TEST(Deconv, IsLinear) {
  const int h = 12, w = 10;
  const auto op = cls_operator(random_kernel(5, 40), {}, h, w);
  const Image a = random_image(1, h, w, 41);
  const Image b = random_image(1, h, w, 42);
  Image comb(1, h, w);
  for (std::size_t i = 0; i < comb.size(); ++i) comb.data()[i] = 2.0 * a.data()[i] - 0.5 * b.data()[i];
  const Image ra = apply_deconv(op, a), rb = apply_deconv(op, b), rc = apply_deconv(op, comb);
  for (std::size_t i = 0; i < rc.size(); ++i)
    EXPECT_NEAR(rc.data()[i], 2.0 * ra.data()[i] - 0.5 * rb.data()[i], 1e-12);
}

TEST(DeconvRgb, KnownKernelRaisesPsnr) {
  const Image x = testing::natural_crops(1, 96, 5, true, {"astronaut"}).front();
  const BlurKernel k = kernelgen::make_isotropic_gaussian(11, 1.6);
  const Image y = circular_convolve(x, k);
  auto psnr = [&](const Image& z) {
    double se = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) se += std::pow(z.data()[i] - x.data()[i], 2);
    return 10.0 * std::log10(1.0 / (se / z.size()));
  };
  const double base = psnr(y);
  for (auto method : {DeconvMethod::wiener, DeconvMethod::cls, DeconvMethod::dcls_rgb}) {
    DeconvConfig cfg;
    cfg.nsr = 1e-4;
    cfg.cls.lambda = 1e4;
    const double gain = psnr(deconv_rgb(y, k, method, cfg)) - base;
    EXPECT_GE(gain, 2.0) << static_cast<int>(method);
  }
}

TEST(DeconvRgb, EmptyBankEqualsCls) {
  const Image y = random_image(3, 16, 16, 50);
  const BlurKernel k = random_kernel(5, 51);
  const Image a = deconv_rgb(y, k, DeconvMethod::cls);
  const Image b = deconv_rgb(y, k, DeconvMethod::dcls_rgb);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a.data()[i], b.data()[i], 1e-12);
  DeconvConfig bad;
  bad.bank = SmoothFilterBank::uniform(2, laplacian_filter());
  EXPECT_THROW(deconv_rgb(y, k, DeconvMethod::dcls_rgb, bad), InvalidArgument);
}

TEST(OperatorCache, ReusesEntries) {
  OperatorCache cache;
  const BlurKernel k = random_kernel(5, 60);
  const auto a = cache.cls(k, {}, 16, 16);
  const auto b = cache.cls(k, {}, 16, 16);
  EXPECT_EQ(a.get(), b.get());
  EXPECT_NE(a.get(), cache.cls(k, {.lambda = 3.0}, 16, 16).get());
  EXPECT_NE(a.get(), cache.wiener(k, 0.1, 16, 16).get());
  EXPECT_EQ(cache.size(), 3u);
  cache.clear();
  EXPECT_EQ(cache.size(), 0u);
}

// Scalar objective sum(g * out) and its finite-difference gradient.
struct DclsFixture {
  DclsProblem p{.channels = 2, .height = 9, .width = 8, .kernel_size = 5, .filter_size = 3};
  std::vector<double> f, k, filt, g;

  DclsFixture() {
    Rng rng(77);
    f.resize(p.channels * p.height * p.width);
    g.resize(f.size());
    k.resize(p.kernel_size * p.kernel_size);
    filt.resize(p.channels * p.filter_size * p.filter_size);
    for (auto& v : f) v = rng.uniform(-1, 1);
    for (auto& v : g) v = rng.uniform(-1, 1);
    for (auto& v : k) v = rng.uniform(0.1, 1.0);
    for (auto& v : filt) v = rng.uniform(-0.5, 0.5);
  }

  double objective() const {
    std::vector<double> out(f.size());
    dcls_deconv_forward(p, f, k, filt, out);
    double s = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) s += g[i] * out[i];
    return s;
  }
};

void check_gradient(DclsFixture& fx, std::vector<double>& param, const std::vector<double>& analytic) {
  const double h = 1e-5;
  double num2 = 0.0, den2 = 0.0;
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double keep = param[i];
    param[i] = keep + h;
    const double up = fx.objective();
    param[i] = keep - h;
    const double down = fx.objective();
    param[i] = keep;
    const double numeric = (up - down) / (2 * h);
    num2 += std::pow(numeric - analytic[i], 2);
    den2 += numeric * numeric;
  }
  EXPECT_LE(std::sqrt(num2 / den2), 1e-4);
}

TEST(DclsBackward, MatchesFiniteDifferences) {
  DclsFixture fx;
  std::vector<double> gf(fx.f.size()), gk(fx.k.size()), gp(fx.filt.size());
  dcls_deconv_backward(fx.p, fx.f, fx.k, fx.filt, fx.g, gf, gk, gp);
  check_gradient(fx, fx.f, gf);
  check_gradient(fx, fx.k, gk);
  check_gradient(fx, fx.filt, gp);
}

TEST(DclsBackward, AccumulatesAndSkipsEmptyBuffers) {
  DclsFixture fx;
  std::vector<double> gk1(fx.k.size()), gk2(fx.k.size(), 0.0);
  dcls_deconv_backward(fx.p, fx.f, fx.k, fx.filt, fx.g, {}, gk1, {});
  dcls_deconv_backward(fx.p, fx.f, fx.k, fx.filt, fx.g, {}, gk2, {});
  dcls_deconv_backward(fx.p, fx.f, fx.k, fx.filt, fx.g, {}, gk2, {});
  for (std::size_t i = 0; i < gk1.size(); ++i) EXPECT_NEAR(gk2[i], 2 * gk1[i], 1e-12);
}

}  // namespace
}  // namespace dcls::spectral
