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

#include "dcls/image.hpp"
#include "dcls/kernel.hpp"

/// Degradation models.
///
/// Classical:      y = (x * k_h) downsampled by s, plus noise.
/// LR-space form:  y = (x downsampled by s) * k_l, plus noise, where k_l is
///                 obtained from (x, k_h) by regularized spectral division.
///
/// Convolutions are circular throughout. Noise sigma is given on the 0-255
/// scale and applied as N(0, (sigma / 255)^2) in [0, 1] units.
namespace dcls::degrade {

enum class Downsampler { decimate, bicubic };

struct DegradationSpec {
  int scale = 4;
  BlurKernel kernel = BlurKernel::delta(1);
  double noise_sigma = 0.0;
  Downsampler downsampler = Downsampler::decimate;
  std::uint64_t seed = 0;

  void validate() const;
};

struct ReformulationConfig {
  /// Regularizer of the spectral division. When `relative_epsilon` holds the
  /// absolute value is epsilon * mean |F(x_down)|^2, which makes the result
  /// invariant to the intensity scale of x.
  double epsilon = 1e-2;
  bool relative_epsilon = true;
  /// Odd crop size of k_l around its peak-mass center.
  int output_size = 21;
  Downsampler downsampler = Downsampler::decimate;

  void validate() const;
};

/// decimate keeps samples 0, s, 2s, ... per axis; bicubic resamples with the
/// Keys (a = -0.5) kernel and no antialiasing prefilter. H and W must be
/// divisible by s.
Image downsample(const Image& x, int scale, Downsampler mode);

/// Keys-cubic resampling to an arbitrary size, pixel-center aligned, edges
/// replicated, no antialiasing.
Image bicubic_resize(const Image& x, int out_height, int out_width);

/// Bicubic upsampling by an integer factor (the usual SR baseline).
Image upsample_bicubic(const Image& y, int scale);

/// Adds i.i.d. N(0, (sigma/255)^2) noise; sigma == 0 returns the input.
Image add_gaussian_noise(const Image& img, double sigma_255, std::uint64_t seed);

Image classical_degrade(const Image& x, const DegradationSpec& spec);

/// Linear BT.601 luma (0.299 R + 0.587 G + 0.114 B); gray input passes through.
Image luma(const Image& img);

/// LR-space kernel k_l for (x, k_h, s). RGB input is reduced to luma first;
/// the result is shared by all channels. The kernel is cropped around its
/// peak-mass window and renormalized to sum to one; side lobes may be negative.
BlurKernel reformulate_kernel(const Image& x, const BlurKernel& k_h, int scale,
                              const ReformulationConfig& cfg = {});

/// Full-grid k_l before centering and cropping (origin at index (0, 0)).
std::vector<double> reformulate_kernel_full(const Image& x, const BlurKernel& k_h, int scale,
                                            const ReformulationConfig& cfg, int* height,
                                            int* width);

Image apply_lr_degradation(const Image& x_down, const BlurKernel& k_l, double noise_sigma,
                           std::uint64_t seed);

}  // namespace dcls::degrade
