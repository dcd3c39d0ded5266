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
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <tuple>
#include <vector>

#include "dcls/fft.hpp"
#include "dcls/image.hpp"
#include "dcls/kernel.hpp"

/// Frequency-domain deconvolution: PSF to OTF conversion and the Wiener,
/// constrained-least-squares (CLS) and per-channel deep CLS (DCLS) operators.
///
/// All operators assume circular boundaries. For a blur OTF K and smooth filter
/// OTF P the responses are
///
///   Wiener  conj(K) / (|K|^2 + nsr)
///   CLS     conj(K) / (|K|^2 + |P|^2 / lambda)
///   DCLS    conj(K) / (|K|^2 + |P_i|^2)          one response per channel i
///
/// DCLS folds the Lagrange multiplier into the predicted filters P_i.
namespace dcls::spectral {

using fft::ComplexGrid;

/// Smallest denominator magnitude accepted before an operator is declared singular.
inline constexpr double kSingularTolerance = 1e-12;

/// Zero-pads `k` to height x width with its center moved to index (0, 0),
/// then transforms. Throws InvalidArgument if the kernel does not fit.
ComplexGrid psf2otf(const BlurKernel& k, int height, int width);

/// Circular convolution of every channel with `k` via the FFT.
Image circular_convolve(const Image& img, const BlurKernel& k);

/// Frequency response of a linear shift-invariant restoration filter.
class DeconvOperator {
 public:
  DeconvOperator() = default;
  explicit DeconvOperator(ComplexGrid response) : response_(std::move(response)) {}

  static DeconvOperator identity(int height, int width);

  int height() const { return response_.height(); }
  int width() const { return response_.width(); }
  const ComplexGrid& response() const { return response_; }

 private:
  ComplexGrid response_;
};

/// 3x3 discrete Laplacian [[0,-1,0],[-1,4,-1],[0,-1,0]].
BlurKernel laplacian_filter();

struct ClsConfig {
  BlurKernel smooth_filter = laplacian_filter();
  double lambda = 100.0;
};

/// One smooth filter per feature channel, all of the same odd size.
struct SmoothFilterBank {
  std::vector<BlurKernel> filters;

  int channels() const { return static_cast<int>(filters.size()); }
  int filter_size() const { return filters.empty() ? 0 : filters.front().size(); }
  void validate() const;

  /// Bank of `channels` copies of `p`.
  static SmoothFilterBank uniform(int channels, const BlurKernel& p);
};

DeconvOperator cls_operator(const BlurKernel& k, const ClsConfig& cfg, int height, int width);

/// nsr may be zero only when |F(k)| has no zeros on the grid; otherwise
/// SingularOperator is thrown.
DeconvOperator wiener_operator(const BlurKernel& k, double nsr, int height, int width);

std::vector<DeconvOperator> dcls_operator(const BlurKernel& k, const SmoothFilterBank& bank,
                                          int height, int width);

/// Real part of inverse(response * forward(signal)). `max_imag`, if given,
/// receives the discarded imaginary magnitude.
std::vector<double> apply_deconv(const DeconvOperator& op, std::span<const double> signal,
                                 int height, int width, double* max_imag = nullptr);

/// Applies `op` to every channel of `img`.
Image apply_deconv(const DeconvOperator& op, const Image& img);

enum class DeconvMethod { wiener, cls, dcls_rgb };

struct DeconvConfig {
  ClsConfig cls;
  double nsr = 1e-2;
  /// Per-image-channel filters for dcls_rgb. Empty means every channel uses
  /// smooth_filter / sqrt(lambda), i.e. the CLS operator.
  SmoothFilterBank bank;
};

/// Deblurs every channel of an LR image with the given (known or estimated) kernel.
Image deconv_rgb(const Image& y, const BlurKernel& k, DeconvMethod method,
                 const DeconvConfig& cfg = {});

/// Memoizes operator responses per (kernel, shape, parameters). Safe to share
/// between threads; entries are immutable once inserted.
class OperatorCache {
 public:
  std::shared_ptr<const DeconvOperator> cls(const BlurKernel& k, const ClsConfig& cfg,
                                            int height, int width);
  std::shared_ptr<const DeconvOperator> wiener(const BlurKernel& k, double nsr, int height,
                                               int width);
  std::size_t size() const;
  void clear();

 private:
  using Key = std::tuple<int, std::uint64_t, int, int, std::uint64_t>;
  std::shared_ptr<const DeconvOperator> lookup(const Key& key);
  void insert(const Key& key, std::shared_ptr<const DeconvOperator> op);

  mutable std::mutex mutex_;
  std::map<Key, std::shared_ptr<const DeconvOperator>> entries_;
};

/// Differentiable per-channel DCLS deconvolution of one sample.
///
/// features: L planes of height x width; kernel: odd square; filters: L odd
/// square filters of equal size, all row-major. Output has the layout of
/// `features`.
struct DclsProblem {
  int channels = 0;
  int height = 0;
  int width = 0;
  int kernel_size = 0;
  int filter_size = 0;
};

void dcls_deconv_forward(const DclsProblem& p, std::span<const double> features,
                         std::span<const double> kernel, std::span<const double> filters,
                         std::span<double> out);

/// Accumulates (+=) vector-Jacobian products into the three gradient buffers.
/// Any gradient span may be empty to skip it.
void dcls_deconv_backward(const DclsProblem& p, std::span<const double> features,
                          std::span<const double> kernel, std::span<const double> filters,
                          std::span<const double> grad_out, std::span<double> grad_features,
                          std::span<double> grad_kernel, std::span<double> grad_filters);

}  // namespace dcls::spectral
