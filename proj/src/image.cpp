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

#include "dcls/image.hpp"

#include <algorithm>
#include <cmath>

#include "dcls/common.hpp"

namespace dcls {

Image::Image(int channels, int height, int width, double fill)
    : channels_(channels), height_(height), width_(width) {
  require(channels >= 1 && height >= 1 && width >= 1, "image dimensions must be >= 1, got ",
          channels, "x", height, "x", width);
  data_.assign(static_cast<std::size_t>(channels) * height * width, fill);
}

Image crop(const Image& img, int top, int left, int height, int width) {
  require(top >= 0 && left >= 0 && height >= 1 && width >= 1 && top + height <= img.height() &&
              left + width <= img.width(),
          "crop window ", height, "x", width, "@(", top, ",", left, ") outside ", img.height(),
          "x", img.width());
  Image out(img.channels(), height, width);
  for (int c = 0; c < img.channels(); ++c)
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) out.at(c, y, x) = img.at(c, top + y, left + x);
  return out;
}

Image mod_crop(const Image& img, int multiple) {
  require(multiple >= 1, "mod_crop multiple must be >= 1");
  const int h = img.height() - img.height() % multiple;
  const int w = img.width() - img.width() % multiple;
  require(h > 0 && w > 0, "image smaller than crop multiple ", multiple);
  return crop(img, (img.height() - h) / 2, (img.width() - w) / 2, h, w);
}

Image channel(const Image& img, int c) {
  require(c >= 0 && c < img.channels(), "channel index out of range");
  Image out(1, img.height(), img.width());
  std::ranges::copy(img.plane(c), out.plane(0).begin());
  return out;
}

Image to_rgb(const Image& img) {
  if (img.channels() == 3) return img;
  require(img.channels() == 1, "to_rgb expects 1 or 3 channels, got ", img.channels());
  Image out(3, img.height(), img.width());
  for (int c = 0; c < 3; ++c) std::ranges::copy(img.plane(0), out.plane(c).begin());
  return out;
}

Image clamp01(const Image& img) {
  Image out = img;
  for (double& v : out.data()) v = std::clamp(v, 0.0, 1.0);
  return out;
}

bool is_finite(const Image& img) {
  return std::ranges::all_of(img.data(), [](double v) { return std::isfinite(v); });
}

}  // namespace dcls
