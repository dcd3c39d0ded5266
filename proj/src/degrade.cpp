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

#include "dcls/degrade.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dcls/common.hpp"
#include "dcls/fft.hpp"
#include "dcls/rng.hpp"
#include "dcls/spectral.hpp"

namespace dcls::degrade {

namespace {

double keys_cubic(double t) {
  constexpr double a = -0.5;
  t = std::abs(t);
  if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
  return 0.0;
}

struct Taps {
  int index[4];
  double weight[4];
};

std::vector<Taps> cubic_taps(int in_size, int out_size) {
  std::vector<Taps> taps(out_size);
  const double ratio = static_cast<double>(in_size) / out_size;
  for (int o = 0; o < out_size; ++o) {
    const double center = (o + 0.5) * ratio - 0.5;
    const int left = static_cast<int>(std::floor(center)) - 1;
    double total = 0.0;
    for (int t = 0; t < 4; ++t) {
      const int j = left + t;
      taps[o].index[t] = std::clamp(j, 0, in_size - 1);
      taps[o].weight[t] = keys_cubic(center - j);
      total += taps[o].weight[t];
    }
    for (double& w : taps[o].weight) w /= total;
  }
  return taps;
}

}  // namespace

void DegradationSpec::validate() const {
  require(scale >= 1, "scale must be >= 1, got ", scale);
  require(!kernel.empty(), "degradation needs a kernel");
  require(noise_sigma >= 0.0 && std::isfinite(noise_sigma), "noise sigma must be >= 0, got ",
          noise_sigma);
}

void ReformulationConfig::validate() const {
  require(epsilon > 0.0 && std::isfinite(epsilon), "reformulation epsilon must be > 0, got ",
          epsilon);
  require(output_size >= 1 && output_size % 2 == 1, "k_l crop size must be odd, got ",
          output_size);
}

Image bicubic_resize(const Image& x, int out_height, int out_width) {
  require(out_height >= 1 && out_width >= 1, "resize target must be >= 1x1");
  const auto col_taps = cubic_taps(x.width(), out_width);
  const auto row_taps = cubic_taps(x.height(), out_height);
  Image tmp(x.channels(), x.height(), out_width);
  for (int c = 0; c < x.channels(); ++c)
    for (int y = 0; y < x.height(); ++y)
      for (int o = 0; o < out_width; ++o) {
        double v = 0.0;
        for (int t = 0; t < 4; ++t) v += col_taps[o].weight[t] * x.at(c, y, col_taps[o].index[t]);
        tmp.at(c, y, o) = v;
      }
  Image out(x.channels(), out_height, out_width);
  for (int c = 0; c < x.channels(); ++c)
    for (int o = 0; o < out_height; ++o)
      for (int xx = 0; xx < out_width; ++xx) {
        double v = 0.0;
        for (int t = 0; t < 4; ++t) v += row_taps[o].weight[t] * tmp.at(c, row_taps[o].index[t], xx);
        out.at(c, o, xx) = v;
      }
  return out;
}

Image downsample(const Image& x, int scale, Downsampler mode) {
  require(scale >= 1, "scale must be >= 1, got ", scale);
  require(x.height() % scale == 0 && x.width() % scale == 0, "image ", x.height(), "x",
          x.width(), " is not divisible by scale ", scale);
  if (scale == 1) return x;
  const int h = x.height() / scale;
  const int w = x.width() / scale;
  if (mode == Downsampler::bicubic) return bicubic_resize(x, h, w);
  Image out(x.channels(), h, w);
  for (int c = 0; c < x.channels(); ++c)
    for (int y = 0; y < h; ++y)
      for (int xx = 0; xx < w; ++xx) out.at(c, y, xx) = x.at(c, y * scale, xx * scale);
  return out;
}

Image upsample_bicubic(const Image& y, int scale) {
  require(scale >= 1, "scale must be >= 1, got ", scale);
  return bicubic_resize(y, y.height() * scale, y.width() * scale);
}

Image add_gaussian_noise(const Image& img, double sigma_255, std::uint64_t seed) {
  require(sigma_255 >= 0.0 && std::isfinite(sigma_255), "noise sigma must be >= 0");
  if (sigma_255 == 0.0) return img;
  Rng rng(seed);
  const double sigma = sigma_255 / 255.0;
  Image out = img;
  for (double& v : out.data()) v += sigma * rng.normal();
  return out;
}

Image classical_degrade(const Image& x, const DegradationSpec& spec) {
  spec.validate();
  require(spec.kernel.size() <= x.height() && spec.kernel.size() <= x.width(), "kernel of size ",
          spec.kernel.size(), " is larger than the ", x.height(), "x", x.width(), " image");
  const Image blurred = spectral::circular_convolve(x, spec.kernel);
  return add_gaussian_noise(downsample(blurred, spec.scale, spec.downsampler), spec.noise_sigma,
                            spec.seed);
}

Image luma(const Image& img) {
  if (img.channels() == 1) return img;
  require(img.channels() == 3, "luma expects 1 or 3 channels, got ", img.channels());
  Image out(1, img.height(), img.width());
  auto r = img.plane(0), g = img.plane(1), b = img.plane(2);
  auto o = out.plane(0);
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = 0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i];
  return out;
}

std::vector<double> reformulate_kernel_full(const Image& x, const BlurKernel& k_h, int scale,
                                            const ReformulationConfig& cfg, int* height,
                                            int* width) {
  cfg.validate();
  require(k_h.size() <= x.height() && k_h.size() <= x.width(), "kernel larger than image");
  const Image gray = luma(x);
  const Image x_down = downsample(gray, scale, cfg.downsampler);
  const Image b = downsample(spectral::circular_convolve(gray, k_h), scale, cfg.downsampler);
  const int h = x_down.height();
  const int w = x_down.width();
  const fft::ComplexGrid fx = fft::forward_real(x_down.plane(0), h, w);
  const fft::ComplexGrid fb = fft::forward_real(b.plane(0), h, w);
  double eps = cfg.epsilon;
  if (cfg.relative_epsilon) {
    double power = 0.0;
    for (const auto& v : fx.data()) power += std::norm(v);
    eps *= power / static_cast<double>(fx.size());
  }
  if (!(eps > 0.0))
    throw InvalidArgument("reformulation regularizer vanished (all-zero image spectrum)");
  fft::ComplexGrid ratio(h, w);
  for (std::size_t i = 0; i < ratio.size(); ++i)
    ratio[i] = std::conj(fx[i]) * fb[i] / (std::norm(fx[i]) + eps);
  if (height) *height = h;
  if (width) *width = w;
  return fft::inverse_real(ratio);
}

BlurKernel reformulate_kernel(const Image& x, const BlurKernel& k_h, int scale,
                              const ReformulationConfig& cfg) {
  int h = 0;
  int w = 0;
  const std::vector<double> full = reformulate_kernel_full(x, k_h, scale, cfg, &h, &w);
  const int size = cfg.output_size;
  require(size <= h && size <= w, "k_l crop size ", size, " exceeds the ", h, "x", w,
          " LR grid");
  const int r = size / 2;
  auto wrap = [](int i, int n) { return ((i % n) + n) % n; };

  // Peak-mass center: the 3x3 window with the largest sum. A window as large as
  // the crop is nearly flat over every position that covers the blob.
  const int a = std::min(1, r);
  std::vector<double> mass(full.size(), 0.0);
  double best = -std::numeric_limits<double>::infinity();
  double scale_ref = 0.0;
  for (int y = 0; y < h; ++y)
    for (int xx = 0; xx < w; ++xx) {
      double s = 0.0;
      for (int dy = -a; dy <= a; ++dy)
        for (int dx = -a; dx <= a; ++dx) s += full[wrap(y + dy, h) * w + wrap(xx + dx, w)];
      mass[y * w + xx] = s;
      best = std::max(best, s);
      scale_ref = std::max(scale_ref, std::abs(s));
    }
  // Near-ties are resolved towards the origin, so a kernel already centered at
  // (0, 0) is never shifted by rounding noise.
  const double tol = 1e-6 * scale_ref;
  int best_y = 0;
  int best_x = 0;
  int best_dist = std::numeric_limits<int>::max();
  for (int y = 0; y < h; ++y)
    for (int xx = 0; xx < w; ++xx) {
      if (mass[y * w + xx] < best - tol) continue;
      const int dy = std::min(y, h - y);
      const int dx = std::min(xx, w - xx);
      const int dist = dy * dy + dx * dx;
      if (dist < best_dist) {
        best_dist = dist;
        best_y = y;
        best_x = xx;
      }
    }

  BlurKernel k(size);
  for (int dv = -r; dv <= r; ++dv)
    for (int du = -r; du <= r; ++du)
      k(dv + r, du + r) = full[wrap(best_y + dv, h) * w + wrap(best_x + du, w)];
  k.normalize();
  return k;
}

Image apply_lr_degradation(const Image& x_down, const BlurKernel& k_l, double noise_sigma,
                           std::uint64_t seed) {
  require(k_l.size() <= x_down.height() && k_l.size() <= x_down.width(), "kernel of size ",
          k_l.size(), " is larger than the image");
  return add_gaussian_noise(spectral::circular_convolve(x_down, k_l), noise_sigma, seed);
}

}  // namespace dcls::degrade
