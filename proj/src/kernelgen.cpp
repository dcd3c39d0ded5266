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

#include <cmath>
#include <numbers>

#include "dcls/common.hpp"
#include "dcls/rng.hpp"

namespace dcls::kernelgen {

namespace {

void check_size(int size) {
  require(size >= 3 && size % 2 == 1, "kernel size must be odd and >= 3, got ", size);
}

void check_sigma(double sigma) {
  require(std::isfinite(sigma) && sigma > 0.0, "kernel width must be > 0, got ", sigma);
}

}  // namespace

void KernelSpec::validate() const {
  check_size(size);
  check_sigma(sigma1);
  check_sigma(sigma2);
  require(theta >= -std::numbers::pi && theta <= std::numbers::pi, "theta outside [-pi, pi]");
  require(perturb_amplitude >= 0.0 && perturb_amplitude < 1.0,
          "perturbation amplitude must lie in [0, 1), got ", perturb_amplitude);
  if (family == Family::isotropic)
    require(sigma1 == sigma2 && theta == 0.0,
            "isotropic kernels require sigma2 == sigma1 and theta == 0");
}

BlurKernel make_isotropic_gaussian(int size, double sigma) {
  check_size(size);
  check_sigma(sigma);
  BlurKernel k(size);
  const int r = k.radius();
  const double denom = 2.0 * sigma * sigma;
  for (int v = -r; v <= r; ++v)
    for (int u = -r; u <= r; ++u) k(v + r, u + r) = std::exp(-(u * u + v * v) / denom);
  k.normalize();
  return k;
}

BlurKernel make_anisotropic_gaussian(int size, double sigma1, double sigma2, double theta) {
  check_size(size);
  check_sigma(sigma1);
  check_sigma(sigma2);
  // Inverse covariance R diag(1/s1^2, 1/s2^2) R^T.
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double l1 = 1.0 / (sigma1 * sigma1);
  const double l2 = 1.0 / (sigma2 * sigma2);
  const double a = c * c * l1 + s * s * l2;
  const double b = c * s * (l1 - l2);
  const double d = s * s * l1 + c * c * l2;
  BlurKernel k(size);
  const int r = k.radius();
  for (int v = -r; v <= r; ++v)
    for (int u = -r; u <= r; ++u)
      k(v + r, u + r) = std::exp(-0.5 * (a * u * u + 2.0 * b * u * v + d * v * v));
  k.normalize();
  return k;
}

BlurKernel perturb_multiplicative(const BlurKernel& k, double amplitude, std::uint64_t seed) {
  require(amplitude >= 0.0 && amplitude < 1.0,
          "perturbation amplitude must lie in [0, 1), got ", amplitude);
  if (amplitude == 0.0) return k;
  Rng rng(seed);
  BlurKernel out = k;
  for (double& w : out.weights()) w *= rng.uniform(1.0 - amplitude, 1.0 + amplitude);
  out.normalize();
  return out;
}

BlurKernel make_kernel(const KernelSpec& spec) {
  spec.validate();
  BlurKernel k = spec.family == Family::isotropic
                     ? make_isotropic_gaussian(spec.size, spec.sigma1)
                     : make_anisotropic_gaussian(spec.size, spec.sigma1, spec.sigma2, spec.theta);
  return perturb_multiplicative(k, spec.perturb_amplitude, spec.seed);
}

std::vector<double> gaussian8_widths(int scale) {
  double lo = 0.0;
  double hi = 0.0;
  switch (scale) {
    case 2: lo = 0.80; hi = 1.60; break;
    case 3: lo = 1.35; hi = 2.40; break;
    case 4: lo = 1.80; hi = 3.20; break;
    default: throw InvalidArgument(detail::concat("Gaussian8 supports scales 2, 3, 4; got ", scale));
  }
  std::vector<double> widths(8);
  for (int i = 0; i < 8; ++i) widths[i] = lo + (hi - lo) * i / 7.0;
  widths.back() = hi;
  return widths;
}

std::vector<BlurKernel> gaussian8_set(int scale) {
  std::vector<BlurKernel> set;
  for (double sigma : gaussian8_widths(scale)) set.push_back(make_isotropic_gaussian(21, sigma));
  return set;
}

ProtocolRanges protocol_ranges(Protocol protocol, int scale) {
  ProtocolRanges r;
  if (protocol == Protocol::isotropic) {
    require(scale >= 2 && scale <= 4, "isotropic protocol supports scales 2, 3, 4; got ", scale);
    r.sigma_max = static_cast<double>(scale);
    return r;
  }
  require(scale == 2 || scale == 4, "anisotropic protocol supports scales 2 and 4; got ", scale);
  r.sigma_min = 0.6;
  r.sigma_max = 5.0;
  r.theta_min = -std::numbers::pi;
  r.theta_max = std::numbers::pi;
  r.perturb_amplitude = kDefaultPerturbAmplitude;
  r.size = scale == 2 ? 11 : 31;
  return r;
}

KernelSpec sample_training_spec(Protocol protocol, int scale, std::uint64_t seed) {
  const ProtocolRanges ranges = protocol_ranges(protocol, scale);
  Rng rng(seed);
  KernelSpec spec;
  spec.size = ranges.size;
  if (protocol == Protocol::isotropic) {
    spec.family = Family::isotropic;
    spec.sigma1 = spec.sigma2 = rng.uniform(ranges.sigma_min, ranges.sigma_max);
    return spec;
  }
  spec.family = Family::anisotropic;
  // Open interval (0.6, 5): redraw the measure-zero lower endpoint.
  auto open_width = [&] {
    double s;
    do {
      s = rng.uniform(ranges.sigma_min, ranges.sigma_max);
    } while (s <= ranges.sigma_min);
    return s;
  };
  spec.sigma1 = open_width();
  spec.sigma2 = open_width();
  spec.theta = rng.uniform(ranges.theta_min, ranges.theta_max);
  spec.perturb_amplitude = ranges.perturb_amplitude;
  spec.seed = split_seed(seed, 1);
  return spec;
}

BlurKernel sample_training_kernel(Protocol protocol, int scale, std::uint64_t seed) {
  return make_kernel(sample_training_spec(protocol, scale, seed));
}

}  // namespace dcls::kernelgen
