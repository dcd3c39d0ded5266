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

#include "dcls/kernelgen.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "dcls/common.hpp"
#include "dcls/kernel_io.hpp"
#include "dcls/rng.hpp"
#include "test_support.hpp"

namespace dcls::kernelgen {
namespace {

using std::numbers::pi;

void expect_kernel_invariants(const BlurKernel& k) {
  EXPECT_EQ(k.size() % 2, 1);
  EXPECT_NEAR(k.sum(), 1.0, 1e-8);
  for (double w : k.weights()) EXPECT_GE(w, 0.0);
}

TEST(IsotropicGaussian, TinyWidthIsDelta) {
  const BlurKernel k = make_isotropic_gaussian(21, 0.175);
  EXPECT_GE(k.center(), 0.999);
}

TEST(IsotropicGaussian, MatchesBruteForceGrid) {
  // Literal evaluation of the 1-D Gaussian at offsets -2..2, outer product, normalized.
  double g[5];
  for (int i = 0; i < 5; ++i) g[i] = std::exp(-((i - 2) * (i - 2)) / 2.0);
  double total = 0.0;
  for (double a : g)
    for (double b : g) total += a * b;
  const BlurKernel k = make_isotropic_gaussian(5, 1.0);
  for (int r = 0; r < 5; ++r)
    for (int c = 0; c < 5; ++c) EXPECT_NEAR(k(r, c), g[r] * g[c] / total, 1e-15);
}

TEST(IsotropicGaussian, FourFoldAndMirrorSymmetric) {
  const BlurKernel k = make_isotropic_gaussian(21, 2.6);
  EXPECT_EQ(k.size(), 21);
  expect_kernel_invariants(k);
  const int n = k.size();
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      EXPECT_DOUBLE_EQ(k(r, c), k(c, r));
      EXPECT_DOUBLE_EQ(k(r, c), k(n - 1 - r, c));
      EXPECT_DOUBLE_EQ(k(r, c), k(r, n - 1 - c));
      EXPECT_DOUBLE_EQ(k(r, c), k(n - 1 - c, r));
    }
}

TEST(IsotropicGaussian, RejectsBadArguments) {
  EXPECT_THROW(make_isotropic_gaussian(4, 1.0), InvalidArgument);
  EXPECT_THROW(make_isotropic_gaussian(-3, 1.0), InvalidArgument);
  EXPECT_THROW(make_isotropic_gaussian(1, 1.0), InvalidArgument);
  EXPECT_THROW(make_isotropic_gaussian(21, 0.0), InvalidArgument);
  EXPECT_THROW(make_isotropic_gaussian(21, -1.0), InvalidArgument);
  EXPECT_THROW(make_anisotropic_gaussian(10, 1.0, 1.0, 0.0), InvalidArgument);
  EXPECT_THROW(make_anisotropic_gaussian(11, 1.0, 0.0, 0.0), InvalidArgument);
}

TEST(IsotropicGaussian, CenterWeightStrictlyDecreasesWithWidth) {
  double prev = 2.0;
  for (double sigma = 0.2; sigma < 5.0; sigma += 0.1) {
    const double c = make_isotropic_gaussian(21, sigma).center();
    EXPECT_LT(c, prev) << "sigma " << sigma;
    prev = c;
  }
}

TEST(AnisotropicGaussian, EqualWidthsIgnoreTheta) {
  const BlurKernel iso = make_isotropic_gaussian(11, 2.0);
  for (double theta : {-pi, -1.3, 0.0, 0.7, 2.2, pi}) {
    EXPECT_LE(max_abs_diff(iso, make_anisotropic_gaussian(11, 2.0, 2.0, theta)), 1e-12);
  }
}

TEST(AnisotropicGaussian, AxisSwapEqualsQuarterTurn) {
  const BlurKernel a = make_anisotropic_gaussian(31, 3.0, 1.0, 0.0);
  const BlurKernel b = make_anisotropic_gaussian(31, 1.0, 3.0, pi / 2);
  EXPECT_LE(max_abs_diff(a, b), 1e-12);
}

TEST(AnisotropicGaussian, SecondMomentsMatchCovariance) {
  const double s1 = 4.0, s2 = 1.5, theta = pi / 6;
  const BlurKernel k = make_anisotropic_gaussian(31, s1, s2, theta);
  // Empirical second moments by direct summation (u along columns, v along rows).
  double uu = 0.0, uv = 0.0, vv = 0.0;
  const int r = k.radius();
  for (int v = -r; v <= r; ++v)
    for (int u = -r; u <= r; ++u) {
      const double w = k.at_offset(v, u);
      uu += w * u * u;
      uv += w * u * v;
      vv += w * v * v;
    }
  const double c = std::cos(theta), s = std::sin(theta);
  const double cov_uu = c * c * s1 * s1 + s * s * s2 * s2;
  const double cov_uv = c * s * (s1 * s1 - s2 * s2);
  const double cov_vv = s * s * s1 * s1 + c * c * s2 * s2;
  EXPECT_NEAR(uu, cov_uu, 0.02 * cov_uu);
  EXPECT_NEAR(uv, cov_uv, 0.02 * std::abs(cov_uv));
  EXPECT_NEAR(vv, cov_vv, 0.02 * cov_vv);
}

TEST(Perturb, ZeroAmplitudeIsIdentity) {
  const BlurKernel k = make_anisotropic_gaussian(31, 2.0, 1.0, 0.3);
  EXPECT_EQ(perturb_multiplicative(k, 0.0, 5), k);
}

TEST(Perturb, DeterministicPerSeed) {
  const BlurKernel k = make_isotropic_gaussian(21, 1.5);
  const BlurKernel a = perturb_multiplicative(k, 0.25, 42);
  const BlurKernel b = perturb_multiplicative(k, 0.25, 42);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, perturb_multiplicative(k, 0.25, 43));
  expect_kernel_invariants(a);
  for (std::size_t i = 0; i < k.weights().size(); ++i) {
    // Before renormalization every weight lies within [0.75, 1.25] of the original.
    const double ratio = a.weights()[i] / k.weights()[i];
    EXPECT_GT(ratio, 0.75 / 1.25 - 1e-12);
    EXPECT_LT(ratio, 1.25 / 0.75 + 1e-12);
  }
}

TEST(Perturb, DeltaStaysDelta) {
  const BlurKernel d = BlurKernel::delta(21);
  const BlurKernel p = perturb_multiplicative(d, 0.25, 7);
  EXPECT_NEAR(p.center(), 1.0, 1e-15);
  EXPECT_NEAR(p.sum(), 1.0, 1e-15);
}

TEST(Perturb, RejectsAmplitudeOutsideUnitInterval) {
  const BlurKernel d = BlurKernel::delta(3);
  EXPECT_THROW(perturb_multiplicative(d, 1.0, 1), InvalidArgument);
  EXPECT_THROW(perturb_multiplicative(d, -0.1, 1), InvalidArgument);
}

TEST(Gaussian8, WidthsPerScale) {
  const auto w4 = gaussian8_widths(4);
  const double expected4[] = {1.80, 2.00, 2.20, 2.40, 2.60, 2.80, 3.00, 3.20};
  ASSERT_EQ(w4.size(), 8u);
  for (int i = 0; i < 8; ++i) EXPECT_NEAR(w4[i], expected4[i], 1e-12);
  const auto w2 = gaussian8_widths(2);
  EXPECT_DOUBLE_EQ(w2.front(), 0.80);
  EXPECT_DOUBLE_EQ(w2.back(), 1.60);
  const auto w3 = gaussian8_widths(3);
  EXPECT_DOUBLE_EQ(w3.front(), 1.35);
  EXPECT_DOUBLE_EQ(w3.back(), 2.40);
  EXPECT_THROW(gaussian8_widths(5), InvalidArgument);
}

TEST(Gaussian8, KernelsAre21x21AndNormalized) {
  for (int scale : {2, 3, 4}) {
    const auto set = gaussian8_set(scale);
    ASSERT_EQ(set.size(), 8u);
    for (const auto& k : set) {
      EXPECT_EQ(k.size(), 21);
      expect_kernel_invariants(k);
    }
  }
}

TEST(TrainingKernels, DeterministicPerSeed) {
  EXPECT_EQ(sample_training_kernel(Protocol::isotropic, 4, 1),
            sample_training_kernel(Protocol::isotropic, 4, 1));
  EXPECT_EQ(sample_training_kernel(Protocol::anisotropic, 4, 9),
            sample_training_kernel(Protocol::anisotropic, 4, 9));
}

TEST(TrainingKernels, ProtocolSizes) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    EXPECT_EQ(sample_training_kernel(Protocol::anisotropic, 4, seed).size(), 31);
    EXPECT_EQ(sample_training_kernel(Protocol::anisotropic, 2, seed).size(), 11);
    EXPECT_EQ(sample_training_kernel(Protocol::isotropic, 3, seed).size(), 21);
  }
  EXPECT_THROW(sample_training_kernel(Protocol::anisotropic, 3, 0), InvalidArgument);
  EXPECT_THROW(sample_training_kernel(Protocol::isotropic, 5, 0), InvalidArgument);
}

TEST(TrainingKernels, IsotropicWidthsCoverRange) {
  int bins[18] = {};
  double lo = 10.0, hi = 0.0;
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    const KernelSpec spec = sample_training_spec(Protocol::isotropic, 2, seed);
    EXPECT_EQ(spec.sigma1, spec.sigma2);
    lo = std::min(lo, spec.sigma1);
    hi = std::max(hi, spec.sigma1);
    ++bins[std::min(17, static_cast<int>((spec.sigma1 - 0.2) / 0.1))];
  }
  EXPECT_GE(lo, 0.2);
  EXPECT_LE(hi, 2.0);
  EXPECT_LT(lo, 0.21);
  EXPECT_GT(hi, 1.99);
  // Uniform: ~556 draws per 0.1-wide bin.
  for (int b : bins) {
    EXPECT_GT(b, 450);
    EXPECT_LT(b, 670);
  }
}

TEST(TrainingKernels, AnisotropicSpecRanges) {
  for (std::uint64_t seed = 0; seed < 2000; ++seed) {
    const KernelSpec s = sample_training_spec(Protocol::anisotropic, 4, seed);
    EXPECT_GT(s.sigma1, 0.6);
    EXPECT_LT(s.sigma1, 5.0);
    EXPECT_GT(s.sigma2, 0.6);
    EXPECT_LT(s.sigma2, 5.0);
    EXPECT_GE(s.theta, -pi);
    EXPECT_LE(s.theta, pi);
    EXPECT_DOUBLE_EQ(s.perturb_amplitude, kDefaultPerturbAmplitude);
  }
}

TEST(KernelInvariants, HoldOverRandomSpecs) {
  Rng rng(2024);
  for (int i = 0; i < 1000; ++i) {
    KernelSpec spec;
    spec.size = 3 + 2 * static_cast<int>(rng.below(15));
    spec.family = rng.uniform() < 0.5 ? Family::isotropic : Family::anisotropic;
    spec.sigma1 = rng.uniform(0.1, 6.0);
    if (spec.family == Family::anisotropic) {
      spec.sigma2 = rng.uniform(0.1, 6.0);
      spec.theta = rng.uniform(-pi, pi);
      spec.perturb_amplitude = rng.uniform(0.0, 0.9);
      spec.seed = rng.next_u64();
    } else {
      spec.sigma2 = spec.sigma1;
    }
    expect_kernel_invariants(make_kernel(spec));
  }
}

TEST(KernelSpec, IsotropicForcesThetaAndSigma) {
  KernelSpec spec;
  spec.sigma1 = 1.0;
  spec.sigma2 = 2.0;
  EXPECT_THROW(spec.validate(), InvalidArgument);
  spec.sigma2 = 1.0;
  spec.theta = 0.1;
  EXPECT_THROW(spec.validate(), InvalidArgument);
}

TEST(KernelIo, TextRoundTripIsExact) {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const BlurKernel k = sample_training_kernel(Protocol::anisotropic, 2, seed);
    EXPECT_EQ(kernel_io::from_text(kernel_io::to_text(k)), k);
  }
  EXPECT_EQ(kernel_io::to_text(BlurKernel::delta(3)).substr(0, 9), "DCLSK1 3\n");
}

TEST(KernelIo, BinaryRoundTripIsStable) {
  const BlurKernel k = make_anisotropic_gaussian(31, 4.0, 1.5, 0.4);
  const std::string once = kernel_io::to_binary(k);
  EXPECT_EQ(once.size(), 8u + 4u * 31 * 31);
  const BlurKernel back = kernel_io::from_binary(once);
  EXPECT_LE(max_abs_diff(back, k), 1e-7);
  EXPECT_EQ(kernel_io::to_binary(back), once);
}

TEST(KernelIo, FilesDispatchOnMagic) {
  const auto dir = std::filesystem::temp_directory_path() / "dcls_kernel_io_test";
  std::filesystem::create_directories(dir);
  const BlurKernel k = make_isotropic_gaussian(7, 1.1);
  kernel_io::write(dir / "k.txt", k);
  kernel_io::write(dir / "k.bin", k);
  EXPECT_EQ(kernel_io::read(dir / "k.txt"), k);
  EXPECT_LE(max_abs_diff(kernel_io::read(dir / "k.bin"), k), 1e-7);
  EXPECT_THROW(kernel_io::read(dir / "missing.txt"), IoError);
  EXPECT_THROW(kernel_io::from_text("DCLSK1 3\n1 2 3\n"), InvalidArgument);
  EXPECT_THROW(kernel_io::from_text("NOPE 3\n"), InvalidArgument);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace dcls::kernelgen
