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
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "dcls/degrade.hpp"
#include "dcls/image.hpp"
#include "dcls/kernel.hpp"

/// Evaluation quantities and the benchmark harness.
namespace dcls::evalmetrics {

/// PSNR of identical images. Reports print it as "inf".
inline constexpr double kInfPsnr = std::numeric_limits<double>::infinity();

/// BT.601 studio-swing luma, Y = (65.481 R + 128.553 G + 24.966 B + 16) / 255.
Image rgb_to_y(const Image& rgb);

/// 10 log10(1 / MSE) over the region `border` pixels inside each edge, with a
/// peak of 1. Multi-channel images average the MSE over channels.
double psnr(const Image& a, const Image& b, int border = 0);

/// Mean SSIM of one-channel images over all valid 11x11 Gaussian windows
/// (sigma 1.5, K1 0.01, K2 0.03, dynamic range 1).
double ssim(const Image& a, const Image& b);

/// Sum of squared differences after dividing each kernel by its peak. Sizes
/// are reconciled by zero padding the smaller one about its center.
double kernel_mse(const BlurKernel& estimate, const BlurKernel& truth);

/// PSNR between y and (x downsampled by s) * k, i.e. how well k explains the
/// observation under the LR-space model. RGB inputs are compared on Y.
double lr_psnr(const Image& y, const Image& x, const BlurKernel& k, int scale,
               degrade::Downsampler downsampler = degrade::Downsampler::decimate, int border = 0);

struct Quality {
  double psnr = 0.0;
  double ssim = 0.0;
};

/// Y-channel PSNR/SSIM with the same border crop for both.
Quality y_quality(const Image& sr, const Image& hr, int border);

// Benchmark harness ---------------------------------------------------------

struct NamedKernel {
  std::string id;
  BlurKernel kernel;
};

/// What a method sees for one test case. Only `lr` is observable; the true
/// kernels are there for oracle baselines.
struct CaseContext {
  const Image& lr;
  const BlurKernel& k_h;
  const BlurKernel& k_l;
  int scale;
};

struct Method {
  std::string name;
  std::function<Image(const CaseContext&)> run;
};

/// Bicubic upsampling of the LR image.
Method bicubic_method();
/// RGB-space deconvolution with the true LR-space kernel, then bicubic
/// upsampling. `cls` selects CLS over Wiener.
Method deconv_bicubic_method(bool cls, double lambda = 100.0, double nsr = 1e-2);

struct BenchmarkSpec {
  std::string dataset = "custom";
  std::vector<std::string> image_ids;
  std::vector<Image> hr_images;
  std::vector<NamedKernel> kernels;
  std::vector<double> noise_levels{0.0};
  int scale = 4;
  degrade::Downsampler downsampler = degrade::Downsampler::decimate;
  std::uint64_t seed = 0;
  /// Negative means "use the scale".
  int border = -1;
  /// Crop size of the k_l handed to methods.
  int kl_size = 21;
};

struct ReportRow {
  std::string dataset;
  int scale = 0;
  std::string kernel_id;
  double noise = 0.0;
  std::string method;
  std::string image_id;
  double psnr = 0.0;
  double ssim = 0.0;
};

struct AggregateRow {
  std::string dataset;
  int scale = 0;
  /// Empty for the all-kernel summary.
  std::string kernel_id;
  double noise = 0.0;
  std::string method;
  double psnr = 0.0;
  double ssim = 0.0;
  int count = 0;
};

struct EvalReport {
  std::vector<ReportRow> rows;

  /// Per-kernel means over images, then the mean over kernels, for every
  /// (dataset, scale, noise, method), sorted by key.
  std::vector<AggregateRow> aggregate() const;
};

EvalReport run_benchmark(const BenchmarkSpec& spec, const std::vector<Method>& methods);

/// Tab-separated aggregate table; PSNR to 2 decimals, SSIM to 4.
std::string report_tsv(const EvalReport& report);
/// Rows and aggregates as JSON.
std::string report_json(const EvalReport& report);

/// PSNR against kernel width for each method, one point per width.
struct Curve {
  std::string method;
  std::vector<double> sigma;
  std::vector<double> psnr;
};

/// Curves from the per-kernel aggregates of `report`; `widths[i]` is the width
/// of `kernel_ids[i]`.
std::vector<Curve> sigma_curves(const EvalReport& report, const std::vector<std::string>& kernel_ids,
                                const std::vector<double>& widths, double noise = 0.0);
std::string curves_csv(const std::vector<Curve>& curves);
std::string curves_svg(const std::vector<Curve>& curves, const std::string& title);

}  // namespace dcls::evalmetrics
