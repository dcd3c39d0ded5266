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
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dcls/image.hpp"
#include "dcls/kernel.hpp"

namespace dcls::testing {

std::filesystem::path data_path(const std::string& relative);

/// Uniform samples in [lo, hi).
Image random_image(int channels, int height, int width, std::uint64_t seed, double lo = 0.0,
                   double hi = 1.0);

/// Random odd kernel with positive weights summing to one.
BlurKernel random_kernel(int size, std::uint64_t seed);

/// Random filter taps in [-1, 1) without normalization.
BlurKernel random_filter(int size, std::uint64_t seed);

/// `count` random square crops of the bundled natural photos, cycling through
/// the files. `rgb` replicates gray sources to three channels.
std::vector<Image> natural_crops(int count, int size, std::uint64_t seed, bool rgb = true,
                                 const std::vector<std::string>& names = {});

/// Sliding-window circular convolution, computed literally.
Image direct_circular_convolve(const Image& img, const BlurKernel& k);

double relative_l2(std::span<const double> a, std::span<const double> b);

}  // namespace dcls::testing
