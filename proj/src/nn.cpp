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

#include "dcls/nn.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "dcls/common.hpp"
#include "dcls/spectral.hpp"

namespace dcls::nn {

namespace {

using ColMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic>;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

bool same(const Shape& a, const Shape& b) { return a == b; }

// Patches of every output pixel as columns: row (ci*k + ky)*k + kx,
// column (n*h + y)*w + x. Row-major, so each row is filled by shifted copies.
RowMatrix im2col(const Tensor& x, int k) {
  const int n = x.n(), c = x.c(), h = x.h(), w = x.w(), r = k / 2;
  const Eigen::Index hw = static_cast<Eigen::Index>(h) * w;
  RowMatrix cols(static_cast<Eigen::Index>(c) * k * k, n * hw);
  for (int ci = 0; ci < c; ++ci)
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        double* row = cols.row((static_cast<Eigen::Index>(ci) * k + ky) * k + kx).data();
        const int dx = kx - r;
        const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
        for (int b = 0; b < n; ++b)
          for (int y = 0; y < h; ++y) {
            double* dst = row + b * hw + static_cast<Eigen::Index>(y) * w;
            const int sy = y + ky - r;
            if (sy < 0 || sy >= h || x1 <= x0) {
              std::fill(dst, dst + w, 0.0);
              continue;
            }
            const double* src = x.data.data() + x.index(b, ci, sy, 0);
            std::fill(dst, dst + x0, 0.0);
            std::copy(src + x0 + dx, src + x1 + dx, dst + x0);
            std::fill(dst + x1, dst + w, 0.0);
          }
      }
  return cols;
}

void col2im_add(const RowMatrix& cols, int k, Tensor& dx_t) {
  const int n = dx_t.n(), c = dx_t.c(), h = dx_t.h(), w = dx_t.w(), r = k / 2;
  const Eigen::Index hw = static_cast<Eigen::Index>(h) * w;
  for (int ci = 0; ci < c; ++ci)
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        const double* row = cols.row((static_cast<Eigen::Index>(ci) * k + ky) * k + kx).data();
        const int dx = kx - r;
        const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
        for (int b = 0; b < n; ++b)
          for (int y = 0; y < h; ++y) {
            const int sy = y + ky - r;
            if (sy < 0 || sy >= h) continue;
            const double* src = row + b * hw + static_cast<Eigen::Index>(y) * w;
            double* dst = dx_t.data.data() + dx_t.index(b, ci, sy, 0);
            for (int xx = x0; xx < x1; ++xx) dst[xx + dx] += src[xx];
          }
      }
}

// NCHW <-> (channels x pixels) column-major matrix.
ColMatrix to_channel_matrix(const Tensor& t) {
  const int n = t.n(), c = t.c();
  const Eigen::Index hw = static_cast<Eigen::Index>(t.h()) * t.w();
  ColMatrix m(c, n * hw);
  for (int b = 0; b < n; ++b)
    for (int ci = 0; ci < c; ++ci) {
      const double* src = t.data.data() + t.index(b, ci, 0, 0);
      for (Eigen::Index p = 0; p < hw; ++p) m(ci, b * hw + p) = src[p];
    }
  return m;
}

void from_channel_matrix(const ColMatrix& m, Tensor& t) {
  const int n = t.n(), c = t.c();
  const Eigen::Index hw = static_cast<Eigen::Index>(t.h()) * t.w();
  for (int b = 0; b < n; ++b)
    for (int ci = 0; ci < c; ++ci) {
      double* dst = t.data.data() + t.index(b, ci, 0, 0);
      for (Eigen::Index p = 0; p < hw; ++p) dst[p] = m(ci, b * hw + p);
    }
}

}  // namespace

Var conv2d(const Var& x, const Var& weight, const Var& bias) {
  const Shape& xs = x.shape();
  const Shape& ws = weight.shape();
  const int co = ws[0], ci = ws[1], k = ws[2];
  require(ws[2] == ws[3] && k % 2 == 1, "conv2d needs odd square filters");
  require(xs[1] == ci, "conv2d input has ", xs[1], " channels, weight expects ", ci);
  if (bias) require(same(bias.shape(), {1, co, 1, 1}), "conv2d bias shape mismatch");

  const RowMatrix cols = im2col(x.value(), k);
  const Eigen::Index kk = static_cast<Eigen::Index>(ci) * k * k;
  Eigen::Map<const RowMatrix> wm(weight.value().data.data(), co, kk);
  ColMatrix out = wm * cols;
  if (bias) {
    Eigen::Map<const Eigen::VectorXd> bv(bias.value().data.data(), co);
    out.colwise() += bv;
  }
  Tensor y({xs[0], co, xs[2], xs[3]});
  from_channel_matrix(out, y);

  return make_result(std::move(y), {x, weight, bias ? bias : constant(Tensor())},
                     [k, co, kk](Node& self) {
                       Node& xn = *self.parents[0];
                       Node& wn = *self.parents[1];
                       Node& bn = *self.parents[2];
                       const ColMatrix g = to_channel_matrix(self.grad);
                       if (wn.requires_grad) {
                         const RowMatrix cols = im2col(xn.value, k);
                         Eigen::Map<RowMatrix> dw(wn.ensure_grad().data.data(), co, kk);
                         dw.noalias() += g * cols.transpose();
                       }
                       if (bn.requires_grad) {
                         Eigen::Map<Eigen::VectorXd> db(bn.ensure_grad().data.data(), co);
                         db += g.rowwise().sum();
                       }
                       if (xn.requires_grad) {
                         Eigen::Map<const RowMatrix> wm(wn.value.data.data(), co, kk);
                         const RowMatrix dcols = wm.transpose() * g;
                         col2im_add(dcols, k, xn.ensure_grad());
                       }
                     });
}

Var relu(const Var& x) {
  Tensor y = x.value();
  for (double& v : y.data) v = v > 0.0 ? v : 0.0;
  return make_result(std::move(y), {x}, [](Node& self) {
    Node& xn = *self.parents[0];
    Tensor& dx = xn.ensure_grad();
    for (std::size_t i = 0; i < dx.size(); ++i)
      if (xn.value.data[i] > 0.0) dx.data[i] += self.grad.data[i];
  });
}

Var sigmoid(const Var& x) {
  Tensor y = x.value();
  for (double& v : y.data) v = 1.0 / (1.0 + std::exp(-v));
  return make_result(std::move(y), {x}, [](Node& self) {
    Tensor& dx = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < dx.size(); ++i) {
      const double s = self.value.data[i];
      dx.data[i] += self.grad.data[i] * s * (1.0 - s);
    }
  });
}

Var add(const Var& a, const Var& b) {
  require(same(a.shape(), b.shape()), "add needs equal shapes");
  Tensor y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y.data[i] += b.value().data[i];
  return make_result(std::move(y), {a, b}, [](Node& self) {
    for (int p = 0; p < 2; ++p) {
      Node& in = *self.parents[p];
      if (!in.requires_grad) continue;
      Tensor& d = in.ensure_grad();
      for (std::size_t i = 0; i < d.size(); ++i) d.data[i] += self.grad.data[i];
    }
  });
}

Var mul(const Var& x, double c) {
  Tensor y = x.value();
  for (double& v : y.data) v *= c;
  return make_result(std::move(y), {x}, [c](Node& self) {
    Node& in = *self.parents[0];
    if (!in.requires_grad) return;
    Tensor& d = in.ensure_grad();
    for (std::size_t i = 0; i < d.size(); ++i) d.data[i] += c * self.grad.data[i];
  });
}

Var scale_channels(const Var& x, const Var& s) {
  const Shape& xs = x.shape();
  require(same(s.shape(), {xs[0], xs[1], 1, 1}), "scale_channels needs {n, c, 1, 1} scales");
  Tensor y = x.value();
  const std::size_t hw = static_cast<std::size_t>(xs[2]) * xs[3];
  for (std::size_t nc = 0; nc < s.value().size(); ++nc)
    for (std::size_t p = 0; p < hw; ++p) y.data[nc * hw + p] *= s.value().data[nc];
  return make_result(std::move(y), {x, s}, [hw](Node& self) {
    Node& xn = *self.parents[0];
    Node& sn = *self.parents[1];
    const std::size_t count = sn.value.size();
    if (xn.requires_grad) {
      Tensor& dx = xn.ensure_grad();
      for (std::size_t nc = 0; nc < count; ++nc)
        for (std::size_t p = 0; p < hw; ++p)
          dx.data[nc * hw + p] += self.grad.data[nc * hw + p] * sn.value.data[nc];
    }
    if (sn.requires_grad) {
      Tensor& ds = sn.ensure_grad();
      for (std::size_t nc = 0; nc < count; ++nc) {
        double acc = 0.0;
        for (std::size_t p = 0; p < hw; ++p)
          acc += self.grad.data[nc * hw + p] * xn.value.data[nc * hw + p];
        ds.data[nc] += acc;
      }
    }
  });
}

Var concat_channels(const Var& a, const Var& b) {
  const Shape& as = a.shape();
  const Shape& bs = b.shape();
  require(as[0] == bs[0] && as[2] == bs[2] && as[3] == bs[3], "concat needs matching N, H, W");
  Tensor y({as[0], as[1] + bs[1], as[2], as[3]});
  const std::size_t na = a.value().sample_size(), nb = b.value().sample_size();
  for (int n = 0; n < as[0]; ++n) {
    std::copy_n(a.value().data.begin() + n * na, na, y.data.begin() + n * (na + nb));
    std::copy_n(b.value().data.begin() + n * nb, nb, y.data.begin() + n * (na + nb) + na);
  }
  return make_result(std::move(y), {a, b}, [na, nb](Node& self) {
    const int batch = self.value.n();
    Node& an = *self.parents[0];
    Node& bn = *self.parents[1];
    for (int n = 0; n < batch; ++n) {
      const double* g = self.grad.data.data() + n * (na + nb);
      if (an.requires_grad) {
        double* d = an.ensure_grad().data.data() + n * na;
        for (std::size_t i = 0; i < na; ++i) d[i] += g[i];
      }
      if (bn.requires_grad) {
        double* d = bn.ensure_grad().data.data() + n * nb;
        for (std::size_t i = 0; i < nb; ++i) d[i] += g[na + i];
      }
    }
  });
}

Var global_avg_pool(const Var& x) {
  const Shape& xs = x.shape();
  const std::size_t hw = static_cast<std::size_t>(xs[2]) * xs[3];
  Tensor y({xs[0], xs[1], 1, 1});
  for (std::size_t nc = 0; nc < y.size(); ++nc) {
    double acc = 0.0;
    for (std::size_t p = 0; p < hw; ++p) acc += x.value().data[nc * hw + p];
    y.data[nc] = acc / static_cast<double>(hw);
  }
  return make_result(std::move(y), {x}, [hw](Node& self) {
    Tensor& dx = self.parents[0]->ensure_grad();
    const double inv = 1.0 / static_cast<double>(hw);
    for (std::size_t nc = 0; nc < self.value.size(); ++nc)
      for (std::size_t p = 0; p < hw; ++p) dx.data[nc * hw + p] += self.grad.data[nc] * inv;
  });
}

Var linear(const Var& x, const Var& weight, const Var& bias) {
  const Shape& xs = x.shape();
  const Shape& ws = weight.shape();
  require(xs[2] == 1 && xs[3] == 1, "linear expects {n, features, 1, 1} input");
  require(ws[1] == xs[1] && ws[2] == 1 && ws[3] == 1, "linear weight shape mismatch");
  const int out = ws[0], in = ws[1], batch = xs[0];
  if (bias) require(same(bias.shape(), {1, out, 1, 1}), "linear bias shape mismatch");
  Eigen::Map<const RowMatrix> wm(weight.value().data.data(), out, in);
  Eigen::Map<const ColMatrix> xm(x.value().data.data(), in, batch);
  ColMatrix ym = wm * xm;
  if (bias) ym.colwise() += Eigen::Map<const Eigen::VectorXd>(bias.value().data.data(), out);
  Tensor y({batch, out, 1, 1}, std::vector<double>(ym.data(), ym.data() + ym.size()));
  return make_result(std::move(y), {x, weight, bias ? bias : constant(Tensor())},
                     [out, in, batch](Node& self) {
                       Node& xn = *self.parents[0];
                       Node& wn = *self.parents[1];
                       Node& bn = *self.parents[2];
                       Eigen::Map<const ColMatrix> g(self.grad.data.data(), out, batch);
                       if (wn.requires_grad) {
                         Eigen::Map<const ColMatrix> xm(xn.value.data.data(), in, batch);
                         Eigen::Map<RowMatrix>(wn.ensure_grad().data.data(), out, in).noalias() +=
                             g * xm.transpose();
                       }
                       if (bn.requires_grad)
                         Eigen::Map<Eigen::VectorXd>(bn.ensure_grad().data.data(), out) +=
                             g.rowwise().sum();
                       if (xn.requires_grad) {
                         Eigen::Map<const RowMatrix> wm(wn.value.data.data(), out, in);
                         Eigen::Map<ColMatrix>(xn.ensure_grad().data.data(), in, batch).noalias() +=
                             wm.transpose() * g;
                       }
                     });
}

Var reshape(const Var& x, Shape shape) {
  require(numel(shape) == x.value().size(), "reshape changes the element count");
  Tensor y(shape, x.value().data);
  return make_result(std::move(y), {x}, [](Node& self) {
    Tensor& dx = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < dx.size(); ++i) dx.data[i] += self.grad.data[i];
  });
}

Var pixel_shuffle(const Var& x, int s) {
  const Shape& xs = x.shape();
  require(s >= 1 && xs[1] % (s * s) == 0, "pixel_shuffle needs channels divisible by s^2");
  const int c = xs[1] / (s * s), h = xs[2], w = xs[3];
  Tensor y({xs[0], c, h * s, w * s});
  auto src = [&](int n, int ch, int yy, int xx) {
    return x.value().index(n, ch * s * s + (yy % s) * s + xx % s, yy / s, xx / s);
  };
  for (int n = 0; n < xs[0]; ++n)
    for (int ch = 0; ch < c; ++ch)
      for (int yy = 0; yy < h * s; ++yy)
        for (int xx = 0; xx < w * s; ++xx) y.at(n, ch, yy, xx) = x.value().data[src(n, ch, yy, xx)];
  return make_result(std::move(y), {x}, [s](Node& self) {
    Node& xn = *self.parents[0];
    Tensor& dx = xn.ensure_grad();
    const Shape& ys = self.value.shape;
    for (int n = 0; n < ys[0]; ++n)
      for (int ch = 0; ch < ys[1]; ++ch)
        for (int yy = 0; yy < ys[2]; ++yy)
          for (int xx = 0; xx < ys[3]; ++xx)
            dx.at(n, ch * s * s + (yy % s) * s + xx % s, yy / s, xx / s) +=
                self.grad.at(n, ch, yy, xx);
  });
}

Var full_conv(const Var& a, const Var& b) {
  const Shape& as = a.shape();
  const Shape& bs = b.shape();
  require(as[0] == bs[0] && as[1] == 1 && bs[1] == 1 && as[2] == as[3] && bs[2] == bs[3],
          "full_conv expects {n,1,A,A} and {n,1,B,B}");
  const int A = as[2], B = bs[2], C = A + B - 1, batch = as[0];
  Tensor y({batch, 1, C, C});
  for (int n = 0; n < batch; ++n)
    for (int i = 0; i < A; ++i)
      for (int j = 0; j < A; ++j) {
        const double av = a.value().at(n, 0, i, j);
        if (av == 0.0) continue;
        for (int p = 0; p < B; ++p)
          for (int q = 0; q < B; ++q) y.at(n, 0, i + p, j + q) += av * b.value().at(n, 0, p, q);
      }
  return make_result(std::move(y), {a, b}, [A, B, batch](Node& self) {
    Node& an = *self.parents[0];
    Node& bn = *self.parents[1];
    for (int n = 0; n < batch; ++n)
      for (int i = 0; i < A; ++i)
        for (int j = 0; j < A; ++j)
          for (int p = 0; p < B; ++p)
            for (int q = 0; q < B; ++q) {
              const double g = self.grad.at(n, 0, i + p, j + q);
              if (an.requires_grad) an.ensure_grad().at(n, 0, i, j) += g * bn.value.at(n, 0, p, q);
              if (bn.requires_grad) bn.ensure_grad().at(n, 0, p, q) += g * an.value.at(n, 0, i, j);
            }
  });
}

Var normalize_sum(const Var& x) {
  const std::size_t per = x.value().sample_size();
  const int batch = x.shape()[0];
  Tensor y = x.value();
  std::vector<double> sums(batch, 0.0);
  for (int n = 0; n < batch; ++n) {
    for (std::size_t i = 0; i < per; ++i) sums[n] += y.data[n * per + i];
    if (!(std::abs(sums[n]) > 1e-12))
      throw NumericalError("normalize_sum: sample sums to zero, cannot normalize");
    for (std::size_t i = 0; i < per; ++i) y.data[n * per + i] /= sums[n];
  }
  return make_result(std::move(y), {x}, [per, batch, sums](Node& self) {
    Tensor& dx = self.parents[0]->ensure_grad();
    for (int n = 0; n < batch; ++n) {
      // y = x / S  =>  dx_i = (g_i - <g, y>) / S
      double gy = 0.0;
      for (std::size_t i = 0; i < per; ++i) gy += self.grad.data[n * per + i] * self.value.data[n * per + i];
      for (std::size_t i = 0; i < per; ++i)
        dx.data[n * per + i] += (self.grad.data[n * per + i] - gy) / sums[n];
    }
  });
}

Var l1_loss(const Var& a, const Var& b) {
  require(same(a.shape(), b.shape()), "l1_loss needs equal shapes");
  const std::size_t count = a.value().size();
  require(count > 0, "l1_loss of empty tensors");
  double acc = 0.0;
  for (std::size_t i = 0; i < count; ++i) acc += std::abs(a.value().data[i] - b.value().data[i]);
  Tensor y({1, 1, 1, 1}, acc / static_cast<double>(count));
  return make_result(std::move(y), {a, b}, [count](Node& self) {
    Node& an = *self.parents[0];
    Node& bn = *self.parents[1];
    const double g = self.grad.data[0] / static_cast<double>(count);
    for (std::size_t i = 0; i < count; ++i) {
      const double d = an.value.data[i] - bn.value.data[i];
      const double sgn = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
      if (an.requires_grad) an.ensure_grad().data[i] += g * sgn;
      if (bn.requires_grad) bn.ensure_grad().data[i] -= g * sgn;
    }
  });
}

Var inner(const Var& x, const Tensor& w) {
  require(same(x.shape(), w.shape), "inner needs equal shapes");
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) acc += x.value().data[i] * w.data[i];
  return make_result(Tensor({1, 1, 1, 1}, acc), {x}, [w](Node& self) {
    Tensor& dx = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < dx.size(); ++i) dx.data[i] += self.grad.data[0] * w.data[i];
  });
}

Var dcls_deconv(const Var& features, const Var& kernel, const Var& filters) {
  const Shape& fs = features.shape();
  const Shape& ks = kernel.shape();
  const Shape& ps = filters.shape();
  require(ks[0] == fs[0] && ks[1] == 1 && ks[2] == ks[3], "dcls_deconv kernel must be {n,1,K,K}");
  require(ps[0] == fs[0] && ps[1] == fs[1] && ps[2] == ps[3],
          "dcls_deconv filters must be {n,L,f,f}");
  const spectral::DclsProblem prob{fs[1], fs[2], fs[3], ks[2], ps[2]};
  const std::size_t fsz = features.value().sample_size();
  const std::size_t ksz = kernel.value().sample_size();
  const std::size_t psz = filters.value().sample_size();
  Tensor y(fs);
  for (int n = 0; n < fs[0]; ++n) {
    const auto fspan = std::span(features.value().data).subspan(n * fsz, fsz);
    spectral::dcls_deconv_forward(prob, fspan, std::span(kernel.value().data).subspan(n * ksz, ksz),
                                  std::span(filters.value().data).subspan(n * psz, psz),
                                  std::span(y.data).subspan(n * fsz, fsz));
  }
  return make_result(std::move(y), {features, kernel, filters}, [=](Node& self) {
    Node& fn = *self.parents[0];
    Node& kn = *self.parents[1];
    Node& pn = *self.parents[2];
    auto grad_span = [](Node& node, std::size_t off, std::size_t len) {
      return node.requires_grad ? std::span(node.ensure_grad().data).subspan(off, len)
                                : std::span<double>();
    };
    for (int n = 0; n < fs[0]; ++n)
      spectral::dcls_deconv_backward(
          prob, std::span<const double>(fn.value.data).subspan(n * fsz, fsz),
          std::span<const double>(kn.value.data).subspan(n * ksz, ksz),
          std::span<const double>(pn.value.data).subspan(n * psz, psz),
          std::span<const double>(self.grad.data).subspan(n * fsz, fsz), grad_span(fn, n * fsz, fsz),
          grad_span(kn, n * ksz, ksz), grad_span(pn, n * psz, psz));
  });
}

Var ParameterSet::add(const std::string& name, Tensor init) {
  require(find(name) == size(), "duplicate parameter name ", name);
  names_.push_back(name);
  vars_.push_back(param(std::move(init)));
  return vars_.back();
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t total = 0;
  for (const auto& v : vars_) total += v.value().size();
  return total;
}

void ParameterSet::zero_grad() {
  for (auto& v : vars_) v.zero_grad();
}

std::size_t ParameterSet::find(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return i;
  return names_.size();
}

Tensor he_uniform(Shape shape, int fan_in, Rng& rng, double gain) {
  require(fan_in > 0, "fan_in must be positive");
  const double bound = gain * std::sqrt(3.0 / fan_in);
  Tensor t(shape);
  for (double& v : t.data) v = rng.uniform(-bound, bound);
  return t;
}

}  // namespace dcls::nn
