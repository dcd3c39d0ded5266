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

#include <cmath>
#include <cstring>

#include "dcls/common.hpp"

namespace dcls::spectral {

namespace {

using fft::Complex;

ComplexGrid otf_of(std::span<const double> w, int size, int height, int width) {
  require(size >= 1 && size % 2 == 1, "filter size must be odd, got ", size);
  require(size <= height && size <= width, "filter of size ", size, " does not fit a ", height,
          "x", width, " grid");
  ComplexGrid padded(height, width);
  const int r = size / 2;
  for (int i = 0; i < size; ++i) {
    const int y = ((i - r) % height + height) % height;
    for (int j = 0; j < size; ++j) {
      const int x = ((j - r) % width + width) % width;
      padded.at(y, x) += w[static_cast<std::size_t>(i) * size + j];
    }
  }
  return fft::forward(padded);
}

// Gathers a padded-grid gradient back onto the filter taps (adjoint of the
// zero-pad + circular shift in otf_of).
void scatter_to_filter(const std::vector<double>& grid, int height, int width, int size,
                       std::span<double> out) {
  const int r = size / 2;
  for (int i = 0; i < size; ++i) {
    const int y = ((i - r) % height + height) % height;
    for (int j = 0; j < size; ++j) {
      const int x = ((j - r) % width + width) % width;
      out[static_cast<std::size_t>(i) * size + j] += grid[static_cast<std::size_t>(y) * width + x];
    }
  }
}

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 1469598103934665603ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t hash_kernel(const BlurKernel& k, std::uint64_t seed = 1469598103934665603ULL) {
  const int size = k.size();
  std::uint64_t h = fnv1a(&size, sizeof size, seed);
  return fnv1a(k.weights().data(), k.weights().size() * sizeof(double), h);
}

}  // namespace

ComplexGrid psf2otf(const BlurKernel& k, int height, int width) {
  require(!k.empty(), "psf2otf needs a non-empty kernel");
  return otf_of(k.weights(), k.size(), height, width);
}

Image circular_convolve(const Image& img, const BlurKernel& k) {
  const ComplexGrid otf = psf2otf(k, img.height(), img.width());
  Image out(img.channels(), img.height(), img.width());
  for (int c = 0; c < img.channels(); ++c) {
    ComplexGrid spec = fft::forward_real(img.plane(c), img.height(), img.width());
    for (std::size_t i = 0; i < spec.size(); ++i) spec[i] *= otf[i];
    const std::vector<double> re = fft::inverse_real(spec);
    std::ranges::copy(re, out.plane(c).begin());
  }
  return out;
}

DeconvOperator DeconvOperator::identity(int height, int width) {
  return DeconvOperator(ComplexGrid(height, width, 1.0));
}

BlurKernel laplacian_filter() {
  return BlurKernel(3, {0, -1, 0, -1, 4, -1, 0, -1, 0});
}

void SmoothFilterBank::validate() const {
  require(!filters.empty(), "smooth filter bank must hold at least one filter");
  const int size = filter_size();
  for (const BlurKernel& f : filters) {
    require(f.size() == size, "smooth filters must share one size");
    for (double w : f.weights()) require(std::isfinite(w), "smooth filter has non-finite taps");
  }
}

SmoothFilterBank SmoothFilterBank::uniform(int channels, const BlurKernel& p) {
  require(channels >= 1, "bank needs at least one channel");
  return SmoothFilterBank{std::vector<BlurKernel>(static_cast<std::size_t>(channels), p)};
}

DeconvOperator cls_operator(const BlurKernel& k, const ClsConfig& cfg, int height, int width) {
  require(cfg.lambda > 0.0 && std::isfinite(cfg.lambda), "CLS lambda must be > 0, got ",
          cfg.lambda);
  const ComplexGrid fk = psf2otf(k, height, width);
  const ComplexGrid fp = psf2otf(cfg.smooth_filter, height, width);
  ComplexGrid h(height, width);
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double denom = std::norm(fk[i]) + std::norm(fp[i]) / cfg.lambda;
    if (denom <= kSingularTolerance)
      throw SingularOperator("CLS operator is singular: blur and smooth filter share a zero");
    h[i] = std::conj(fk[i]) / denom;
  }
  return DeconvOperator(std::move(h));
}

DeconvOperator wiener_operator(const BlurKernel& k, double nsr, int height, int width) {
  require(nsr >= 0.0 && std::isfinite(nsr), "Wiener noise-to-signal ratio must be >= 0");
  const ComplexGrid fk = psf2otf(k, height, width);
  ComplexGrid h(height, width);
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double denom = std::norm(fk[i]) + nsr;
    if (denom <= kSingularTolerance)
      throw SingularOperator("Wiener operator is singular: kernel OTF vanishes and nsr is 0");
    h[i] = std::conj(fk[i]) / denom;
  }
  return DeconvOperator(std::move(h));
}

std::vector<DeconvOperator> dcls_operator(const BlurKernel& k, const SmoothFilterBank& bank,
                                          int height, int width) {
  bank.validate();
  const ComplexGrid fk = psf2otf(k, height, width);
  std::vector<DeconvOperator> ops;
  ops.reserve(bank.filters.size());
  for (const BlurKernel& p : bank.filters) {
    const ComplexGrid fp = psf2otf(p, height, width);
    ComplexGrid h(height, width);
    for (std::size_t i = 0; i < h.size(); ++i) {
      const double denom = std::norm(fk[i]) + std::norm(fp[i]);
      if (denom <= kSingularTolerance)
        throw SingularOperator("DCLS operator is singular: blur and smooth filter share a zero");
      h[i] = std::conj(fk[i]) / denom;
    }
    ops.emplace_back(std::move(h));
  }
  return ops;
}

std::vector<double> apply_deconv(const DeconvOperator& op, std::span<const double> signal,
                                 int height, int width, double* max_imag) {
  require(op.height() == height && op.width() == width, "operator shape ", op.height(), "x",
          op.width(), " does not match signal ", height, "x", width);
  ComplexGrid spec = fft::forward_real(signal, height, width);
  for (std::size_t i = 0; i < spec.size(); ++i) spec[i] *= op.response()[i];
  return fft::inverse_real(spec, max_imag);
}

Image apply_deconv(const DeconvOperator& op, const Image& img) {
  Image out(img.channels(), img.height(), img.width());
  for (int c = 0; c < img.channels(); ++c) {
    const auto re = apply_deconv(op, img.plane(c), img.height(), img.width());
    std::ranges::copy(re, out.plane(c).begin());
  }
  return out;
}

Image deconv_rgb(const Image& y, const BlurKernel& k, DeconvMethod method,
                 const DeconvConfig& cfg) {
  switch (method) {
    case DeconvMethod::wiener:
      return apply_deconv(wiener_operator(k, cfg.nsr, y.height(), y.width()), y);
    case DeconvMethod::cls:
      return apply_deconv(cls_operator(k, cfg.cls, y.height(), y.width()), y);
    case DeconvMethod::dcls_rgb: {
      SmoothFilterBank bank = cfg.bank;
      if (bank.filters.empty()) {
        require(cfg.cls.lambda > 0.0, "CLS lambda must be > 0");
        BlurKernel p = cfg.cls.smooth_filter;
        for (double& w : p.weights()) w /= std::sqrt(cfg.cls.lambda);
        bank = SmoothFilterBank::uniform(y.channels(), p);
      }
      require(bank.channels() == y.channels(), "dcls_rgb bank has ", bank.channels(),
              " filters for a ", y.channels(), "-channel image");
      const auto ops = dcls_operator(k, bank, y.height(), y.width());
      Image out(y.channels(), y.height(), y.width());
      for (int c = 0; c < y.channels(); ++c) {
        const auto re = apply_deconv(ops[c], y.plane(c), y.height(), y.width());
        std::ranges::copy(re, out.plane(c).begin());
      }
      return out;
    }
  }
  throw InvalidArgument("unknown deconvolution method");
}

std::shared_ptr<const DeconvOperator> OperatorCache::lookup(const Key& key) {
  std::lock_guard lock(mutex_);
  auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : it->second;
}

void OperatorCache::insert(const Key& key, std::shared_ptr<const DeconvOperator> op) {
  std::lock_guard lock(mutex_);
  entries_.emplace(key, std::move(op));
}

std::shared_ptr<const DeconvOperator> OperatorCache::cls(const BlurKernel& k,
                                                         const ClsConfig& cfg, int height,
                                                         int width) {
  const std::uint64_t params =
      fnv1a(&cfg.lambda, sizeof cfg.lambda, hash_kernel(cfg.smooth_filter));
  const Key key{0, hash_kernel(k), height, width, params};
  if (auto hit = lookup(key)) return hit;
  auto op = std::make_shared<const DeconvOperator>(cls_operator(k, cfg, height, width));
  insert(key, op);
  return op;
}

std::shared_ptr<const DeconvOperator> OperatorCache::wiener(const BlurKernel& k, double nsr,
                                                            int height, int width) {
  const Key key{1, hash_kernel(k), height, width, fnv1a(&nsr, sizeof nsr)};
  if (auto hit = lookup(key)) return hit;
  auto op = std::make_shared<const DeconvOperator>(wiener_operator(k, nsr, height, width));
  insert(key, op);
  return op;
}

std::size_t OperatorCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

void OperatorCache::clear() {
  std::lock_guard lock(mutex_);
  entries_.clear();
}

namespace {

void check_problem(const DclsProblem& p, std::span<const double> features,
                   std::span<const double> kernel, std::span<const double> filters) {
  const std::size_t plane = static_cast<std::size_t>(p.height) * p.width;
  require(p.channels >= 1, "DCLS needs at least one channel");
  require(features.size() == plane * p.channels, "DCLS feature buffer size mismatch");
  require(kernel.size() == static_cast<std::size_t>(p.kernel_size) * p.kernel_size,
          "DCLS kernel buffer size mismatch");
  require(filters.size() ==
              static_cast<std::size_t>(p.channels) * p.filter_size * p.filter_size,
          "DCLS filter buffer size mismatch");
}

}  // namespace

void dcls_deconv_forward(const DclsProblem& p, std::span<const double> features,
                         std::span<const double> kernel, std::span<const double> filters,
                         std::span<double> out) {
  check_problem(p, features, kernel, filters);
  const std::size_t plane = static_cast<std::size_t>(p.height) * p.width;
  const std::size_t fsz = static_cast<std::size_t>(p.filter_size) * p.filter_size;
  require(out.size() == features.size(), "DCLS output buffer size mismatch");
  // One kernel OTF shared by all channels.
  const ComplexGrid fk = otf_of(kernel, p.kernel_size, p.height, p.width);
  for (int c = 0; c < p.channels; ++c) {
    const ComplexGrid fp = otf_of(filters.subspan(c * fsz, fsz), p.filter_size, p.height, p.width);
    ComplexGrid g = fft::forward_real(features.subspan(c * plane, plane), p.height, p.width);
    for (std::size_t i = 0; i < plane; ++i) {
      const double denom = std::norm(fk[i]) + std::norm(fp[i]);
      if (denom <= kSingularTolerance)
        throw SingularOperator("DCLS operator is singular: blur and smooth filter share a zero");
      g[i] *= std::conj(fk[i]) / denom;
    }
    const std::vector<double> re = fft::inverse_real(g);
    std::ranges::copy(re, out.begin() + c * plane);
  }
}

void dcls_deconv_backward(const DclsProblem& p, std::span<const double> features,
                          std::span<const double> kernel, std::span<const double> filters,
                          std::span<const double> grad_out, std::span<double> grad_features,
                          std::span<double> grad_kernel, std::span<double> grad_filters) {
  check_problem(p, features, kernel, filters);
  const std::size_t plane = static_cast<std::size_t>(p.height) * p.width;
  const std::size_t fsz = static_cast<std::size_t>(p.filter_size) * p.filter_size;
  require(grad_out.size() == features.size(), "DCLS upstream gradient size mismatch");
  const bool want_k = !grad_kernel.empty();
  const bool want_p = !grad_filters.empty();
  const ComplexGrid fk = otf_of(kernel, p.kernel_size, p.height, p.width);
  ComplexGrid k_acc(p.height, p.width);  // spectrum of the padded-kernel gradient

  // With S = F(dL/dR), G = F(g), D = |K|^2 + |P|^2, A = conj(S) G and
  // c = Re(A conj(K)) / D^2:
  //   dL/dg    = Re F^-1(conj(H) S)
  //   dL/dkpad = Re F^-1(A / D - 2 c K)
  //   dL/dppad = Re F^-1(-2 c P)
  for (int c = 0; c < p.channels; ++c) {
    const ComplexGrid fp = otf_of(filters.subspan(c * fsz, fsz), p.filter_size, p.height, p.width);
    const ComplexGrid s = fft::forward_real(grad_out.subspan(c * plane, plane), p.height, p.width);
    ComplexGrid dg(p.height, p.width);
    ComplexGrid dp(p.height, p.width);
    ComplexGrid g;
    if (want_k || want_p)
      g = fft::forward_real(features.subspan(c * plane, plane), p.height, p.width);
    for (std::size_t i = 0; i < plane; ++i) {
      const double denom = std::norm(fk[i]) + std::norm(fp[i]);
      if (denom <= kSingularTolerance)
        throw SingularOperator("DCLS operator is singular: blur and smooth filter share a zero");
      dg[i] = fk[i] / denom * s[i];  // conj(H) = K / D
      if (want_k || want_p) {
        const Complex a = std::conj(s[i]) * g[i];
        const double cc = (a * std::conj(fk[i])).real() / (denom * denom);
        if (want_k) k_acc[i] += a / denom - 2.0 * cc * fk[i];
        if (want_p) dp[i] = -2.0 * cc * fp[i];
      }
    }
    if (!grad_features.empty()) {
      const std::vector<double> re = fft::inverse_real(dg);
      for (std::size_t i = 0; i < plane; ++i) grad_features[c * plane + i] += re[i];
    }
    if (want_p) {
      const std::vector<double> re = fft::inverse_real(dp);
      scatter_to_filter(re, p.height, p.width, p.filter_size, grad_filters.subspan(c * fsz, fsz));
    }
  }
  if (want_k) {
    const std::vector<double> re = fft::inverse_real(k_acc);
    scatter_to_filter(re, p.height, p.width, p.kernel_size, grad_kernel);
  }
}

}  // namespace dcls::spectral
