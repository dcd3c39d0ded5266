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

#include "dcls/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

#include "dcls/common.hpp"

namespace dcls::fft {

namespace {

static_assert(sizeof(Complex) == sizeof(fftw_complex));

// The FFTW planner is not thread-safe; execution with new-array execute is.
class PlanCache {
 public:
  fftw_plan get(int height, int width, int sign) {
    std::lock_guard lock(mutex_);
    const auto key = std::make_tuple(height, width, sign);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    const std::size_t n = static_cast<std::size_t>(height) * width;
    auto* in = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
    auto* out = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
    fftw_plan plan =
        fftw_plan_dft_2d(height, width, in, out, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(in);
    fftw_free(out);
    if (!plan) throw std::runtime_error("FFTW failed to create a plan");
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

PlanCache& plan_cache() {
  static PlanCache cache;
  return cache;
}

ComplexGrid transform(const ComplexGrid& in, int sign) {
  require(in.height() >= 1 && in.width() >= 1, "empty grid");
  ComplexGrid out(in.height(), in.width());
  fftw_plan plan = plan_cache().get(in.height(), in.width(), sign);
  fftw_execute_dft(plan,
                   reinterpret_cast<fftw_complex*>(const_cast<Complex*>(in.data().data())),
                   reinterpret_cast<fftw_complex*>(out.data().data()));
  return out;
}

}  // namespace

ComplexGrid::ComplexGrid(int height, int width, Complex fill)
    : height_(height), width_(width) {
  require(height >= 1 && width >= 1, "grid dimensions must be >= 1");
  data_.assign(static_cast<std::size_t>(height) * width, fill);
}

ComplexGrid forward(const ComplexGrid& in) { return transform(in, FFTW_FORWARD); }

ComplexGrid forward_real(std::span<const double> plane, int height, int width) {
  require(plane.size() == static_cast<std::size_t>(height) * width, "plane size mismatch");
  ComplexGrid g(height, width);
  for (std::size_t i = 0; i < plane.size(); ++i) g[i] = plane[i];
  return forward(g);
}

ComplexGrid inverse(const ComplexGrid& in) {
  ComplexGrid out = transform(in, FFTW_BACKWARD);
  const double scale = 1.0 / static_cast<double>(out.size());
  for (Complex& v : out.data()) v *= scale;
  return out;
}

std::vector<double> inverse_real(const ComplexGrid& in, double* max_imag) {
  const ComplexGrid out = inverse(in);
  std::vector<double> re(out.size());
  double mi = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    re[i] = out[i].real();
    mi = std::max(mi, std::abs(out[i].imag()));
  }
  if (max_imag) *max_imag = mi;
  return re;
}

}  // namespace dcls::fft
