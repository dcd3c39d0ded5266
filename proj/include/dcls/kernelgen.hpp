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

#include "dcls/kernel.hpp"

/// Gaussian blur-kernel synthesis for the training and evaluation protocols.
///
/// Grid convention: weight (row, col) sits at integer offset
/// (v, u) = (row - r, col - r) from the center, r = (size - 1) / 2. No
/// sub-pixel shift is applied.
namespace dcls::kernelgen {

enum class Family { isotropic, anisotropic };

/// Default amplitude of the multiplicative perturbation used by the
/// anisotropic protocol: weights are scaled by U[0.75, 1.25].
inline constexpr double kDefaultPerturbAmplitude = 0.25;

struct KernelSpec {
  Family family = Family::isotropic;
  int size = 21;
  double sigma1 = 1.0;
  double sigma2 = 1.0;
  double theta = 0.0;
  double perturb_amplitude = 0.0;
  std::uint64_t seed = 0;

  /// Throws InvalidArgument on any violated field constraint. For the
  /// isotropic family, sigma2 must equal sigma1 and theta must be 0.
  void validate() const;
};

BlurKernel make_isotropic_gaussian(int size, double sigma);

/// Bivariate Gaussian with covariance R(theta) diag(sigma1^2, sigma2^2) R(theta)^T,
/// u along columns and v along rows.
BlurKernel make_anisotropic_gaussian(int size, double sigma1, double sigma2, double theta);

/// Each weight times an independent U[1 - amplitude, 1 + amplitude] draw, then
/// renormalized. amplitude must lie in [0, 1).
BlurKernel perturb_multiplicative(const BlurKernel& k, double amplitude, std::uint64_t seed);

/// Builds (and perturbs, if requested) the kernel a spec describes.
BlurKernel make_kernel(const KernelSpec& spec);

/// Eight widths with inclusive linear spacing over the scale's Gaussian8 range.
std::vector<double> gaussian8_widths(int scale);

/// Eight isotropic 21x21 kernels, one per gaussian8_widths(scale) entry.
std::vector<BlurKernel> gaussian8_set(int scale);

enum class Protocol { isotropic, anisotropic };

/// Width ranges and sizes of the training protocols.
struct ProtocolRanges {
  double sigma_min = 0.2;
  double sigma_max = 2.0;
  double theta_min = 0.0;
  double theta_max = 0.0;
  double perturb_amplitude = 0.0;
  int size = 21;
};

/// Isotropic: size 21, width U[0.2, {2,3,4}.0] for scale {2,3,4}.
/// Anisotropic: size 11 (x2) or 31 (x4), widths U(0.6, 5), theta U[-pi, pi],
/// multiplicative perturbation. Other scale/protocol pairs are rejected.
ProtocolRanges protocol_ranges(Protocol protocol, int scale);

/// Draws a spec for one training kernel; a pure function of its arguments.
KernelSpec sample_training_spec(Protocol protocol, int scale, std::uint64_t seed);

BlurKernel sample_training_kernel(Protocol protocol, int scale, std::uint64_t seed);

}  // namespace dcls::kernelgen
