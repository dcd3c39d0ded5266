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

#include "dcls/evalmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "dcls/common.hpp"
#include "dcls/rng.hpp"
#include "dcls/spectral.hpp"

namespace dcls::evalmetrics {

Image rgb_to_y(const Image& rgb) {
  require(rgb.channels() == 3, "rgb_to_y expects 3 channels, got ", rgb.channels());
  Image y(1, rgb.height(), rgb.width());
  auto r = rgb.plane(0), g = rgb.plane(1), b = rgb.plane(2);
  auto o = y.plane(0);
  for (std::size_t i = 0; i < o.size(); ++i)
    o[i] = (65.481 * r[i] + 128.553 * g[i] + 24.966 * b[i] + 16.0) / 255.0;
  return y;
}

double psnr(const Image& a, const Image& b, int border) {
  require(a.same_shape(b), "psnr of differently shaped images");
  require(border >= 0, "border must be >= 0");
  require(2 * border < a.height() && 2 * border < a.width(), "border ", border,
          " leaves nothing of a ", a.height(), "x", a.width(), " image");
  double sse = 0.0;
  std::size_t count = 0;
  for (int c = 0; c < a.channels(); ++c)
    for (int y = border; y < a.height() - border; ++y)
      for (int x = border; x < a.width() - border; ++x) {
        const double d = a.at(c, y, x) - b.at(c, y, x);
        sse += d * d;
        ++count;
      }
  if (sse == 0.0) return kInfPsnr;
  return 10.0 * std::log10(static_cast<double>(count) / sse);
}

namespace {

constexpr int kWindow = 11;
constexpr double kWindowSigma = 1.5;

std::vector<double> gaussian_window_1d() {
  std::vector<double> g(kWindow);
  double sum = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double u = i - kWindow / 2;
    g[i] = std::exp(-u * u / (2.0 * kWindowSigma * kWindowSigma));
    sum += g[i];
  }
  for (double& v : g) v /= sum;
  return g;
}

// Valid-mode separable filtering of one plane.
std::vector<double> filter_valid(std::span<const double> img, int h, int w,
                                 const std::vector<double>& g) {
  const int oh = h - kWindow + 1, ow = w - kWindow + 1;
  std::vector<double> rows(static_cast<std::size_t>(h) * ow);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kWindow; ++k) acc += g[k] * img[y * w + x + k];
      rows[y * ow + x] = acc;
    }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kWindow; ++k) acc += g[k] * rows[(y + k) * ow + x];
      out[y * ow + x] = acc;
    }
  return out;
}

}  // namespace

double ssim(const Image& a, const Image& b) {
  require(a.same_shape(b), "ssim of differently shaped images");
  require(a.channels() == 1, "ssim expects one channel, got ", a.channels());
  require(a.height() >= kWindow && a.width() >= kWindow, "ssim needs at least ", kWindow, "x",
          kWindow, " pixels, got ", a.height(), "x", a.width());
  const int h = a.height(), w = a.width();
  const auto g = gaussian_window_1d();
  std::vector<double> aa(a.size()), bb(a.size()), ab(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    aa[i] = a.data()[i] * a.data()[i];
    bb[i] = b.data()[i] * b.data()[i];
    ab[i] = a.data()[i] * b.data()[i];
  }
  const auto mu_a = filter_valid(a.data(), h, w, g);
  const auto mu_b = filter_valid(b.data(), h, w, g);
  const auto s_aa = filter_valid(aa, h, w, g);
  const auto s_bb = filter_valid(bb, h, w, g);
  const auto s_ab = filter_valid(ab, h, w, g);
  constexpr double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double total = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a[i], mb = mu_b[i];
    const double va = s_aa[i] - ma * ma, vb = s_bb[i] - mb * mb, cov = s_ab[i] - ma * mb;
    total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
  }
  return total / static_cast<double>(mu_a.size());
}

double kernel_mse(const BlurKernel& estimate, const BlurKernel& truth) {
  require(!estimate.empty() && !truth.empty(), "kernel_mse of an empty kernel");
  const int n = std::max(estimate.size(), truth.size());
  const BlurKernel e = estimate.resized(n), t = truth.resized(n);
  const double pe = e.max(), pt = t.max();
  require(pe > 0.0 && pt > 0.0, "kernel_mse needs kernels with a positive peak");
  double acc = 0.0;
  for (std::size_t i = 0; i < e.weights().size(); ++i) {
    const double d = e.weights()[i] / pe - t.weights()[i] / pt;
    acc += d * d;
  }
  return acc;
}

double lr_psnr(const Image& y, const Image& x, const BlurKernel& k, int scale,
               degrade::Downsampler downsampler, int border) {
  const Image pred = degrade::apply_lr_degradation(degrade::downsample(x, scale, downsampler), k,
                                                   0.0, 0);
  require(pred.same_shape(y), "LR image does not match the downsampled HR image");
  if (y.channels() == 3) return psnr(rgb_to_y(clamp01(y)), rgb_to_y(clamp01(pred)), border);
  return psnr(y, pred, border);
}

Quality y_quality(const Image& sr, const Image& hr, int border) {
  require(sr.same_shape(hr), "SR output is ", sr.height(), "x", sr.width(), ", HR is ",
          hr.height(), "x", hr.width());
  Image a = sr.channels() == 3 ? rgb_to_y(sr) : sr;
  Image b = hr.channels() == 3 ? rgb_to_y(hr) : hr;
  Quality q;
  q.psnr = psnr(a, b, border);
  if (border > 0) {
    a = crop(a, border, border, a.height() - 2 * border, a.width() - 2 * border);
    b = crop(b, border, border, b.height() - 2 * border, b.width() - 2 * border);
  }
  q.ssim = ssim(a, b);
  return q;
}

Method bicubic_method() {
  return {"bicubic",
          [](const CaseContext& c) { return degrade::upsample_bicubic(c.lr, c.scale); }};
}

Method deconv_bicubic_method(bool cls, double lambda, double nsr) {
  return {cls ? "cls_rgb+bicubic" : "wiener_rgb+bicubic", [=](const CaseContext& c) {
            spectral::DeconvConfig cfg;
            cfg.cls.lambda = lambda;
            cfg.nsr = nsr;
            const Image d = spectral::deconv_rgb(
                c.lr, c.k_l, cls ? spectral::DeconvMethod::cls : spectral::DeconvMethod::wiener,
                cfg);
            return degrade::upsample_bicubic(d, c.scale);
          }};
}

EvalReport run_benchmark(const BenchmarkSpec& spec, const std::vector<Method>& methods) {
  require(!spec.hr_images.empty(), "benchmark needs at least one image");
  require(spec.image_ids.empty() || spec.image_ids.size() == spec.hr_images.size(),
          "image_ids must match hr_images");
  require(!spec.kernels.empty(), "benchmark needs at least one kernel");
  require(!methods.empty(), "benchmark needs at least one method");
  const int border = spec.border < 0 ? spec.scale : spec.border;
  EvalReport report;
  std::uint64_t case_index = 0;
  for (std::size_t i = 0; i < spec.hr_images.size(); ++i) {
    const Image hr = mod_crop(spec.hr_images[i], spec.scale);
    const std::string image_id =
        spec.image_ids.empty() ? "img" + std::to_string(i) : spec.image_ids[i];
    for (const auto& nk : spec.kernels) {
      degrade::ReformulationConfig rcfg;
      // Small LR grids cap the crop at the largest odd size that fits.
      const int fit = std::min(hr.height(), hr.width()) / spec.scale;
      rcfg.output_size = std::min(spec.kl_size, fit % 2 == 1 ? fit : fit - 1);
      rcfg.downsampler = spec.downsampler;
      const BlurKernel k_l = degrade::reformulate_kernel(hr, nk.kernel, spec.scale, rcfg);
      for (double noise : spec.noise_levels) {
        degrade::DegradationSpec ds;
        ds.scale = spec.scale;
        ds.kernel = nk.kernel;
        ds.noise_sigma = noise;
        ds.downsampler = spec.downsampler;
        ds.seed = split_seed(spec.seed, case_index++);
        const Image lr = degrade::classical_degrade(hr, ds);
        const CaseContext ctx{lr, nk.kernel, k_l, spec.scale};
        for (const auto& m : methods) {
          const Image sr = clamp01(m.run(ctx));
          const Quality q = y_quality(sr, hr, border);
          report.rows.push_back(
              {spec.dataset, spec.scale, nk.id, noise, m.name, image_id, q.psnr, q.ssim});
        }
      }
    }
  }
  return report;
}

std::vector<AggregateRow> EvalReport::aggregate() const {
  using Key = std::tuple<std::string, int, double, std::string>;
  struct Acc {
    double psnr = 0.0, ssim = 0.0;
    int count = 0;
  };
  std::map<Key, std::map<std::string, Acc>> groups;
  for (const auto& r : rows) {
    Acc& a = groups[{r.dataset, r.scale, r.noise, r.method}][r.kernel_id];
    a.psnr += r.psnr;
    a.ssim += r.ssim;
    ++a.count;
  }
  std::vector<AggregateRow> out;
  for (const auto& [key, kernels] : groups) {
    const auto& [dataset, scale, noise, method] = key;
    AggregateRow summary{dataset, scale, "", noise, method, 0.0, 0.0, 0};
    std::vector<AggregateRow> per_kernel;
    for (const auto& [kid, a] : kernels) {
      per_kernel.push_back(
          {dataset, scale, kid, noise, method, a.psnr / a.count, a.ssim / a.count, a.count});
      summary.psnr += per_kernel.back().psnr;
      summary.ssim += per_kernel.back().ssim;
      summary.count += a.count;
    }
    summary.psnr /= static_cast<double>(kernels.size());
    summary.ssim /= static_cast<double>(kernels.size());
    out.push_back(summary);
    out.insert(out.end(), per_kernel.begin(), per_kernel.end());
  }
  return out;
}

namespace {

std::string fixed(double v, int digits) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

nlohmann::json number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

}  // namespace

std::string report_tsv(const EvalReport& report) {
  std::ostringstream os;
  os << "dataset\tscale\tkernel\tnoise\tmethod\tpsnr\tssim\tcount\n";
  for (const auto& a : report.aggregate())
    os << a.dataset << '\t' << a.scale << '\t' << (a.kernel_id.empty() ? "all" : a.kernel_id)
       << '\t' << fixed(a.noise, 1) << '\t' << a.method << '\t' << fixed(a.psnr, 2) << '\t'
       << fixed(a.ssim, 4) << '\t' << a.count << '\n';
  return os.str();
}

std::string report_json(const EvalReport& report) {
  nlohmann::json j;
  j["rows"] = nlohmann::json::array();
  for (const auto& r : report.rows)
    j["rows"].push_back({{"dataset", r.dataset},
                         {"scale", r.scale},
                         {"kernel", r.kernel_id},
                         {"noise", r.noise},
                         {"method", r.method},
                         {"image", r.image_id},
                         {"psnr", number(r.psnr)},
                         {"ssim", number(r.ssim)}});
  j["aggregate"] = nlohmann::json::array();
  for (const auto& a : report.aggregate())
    j["aggregate"].push_back({{"dataset", a.dataset},
                              {"scale", a.scale},
                              {"kernel", a.kernel_id.empty() ? "all" : a.kernel_id},
                              {"noise", a.noise},
                              {"method", a.method},
                              {"psnr", number(a.psnr)},
                              {"ssim", number(a.ssim)},
                              {"count", a.count}});
  return j.dump(2) + "\n";
}

std::vector<Curve> sigma_curves(const EvalReport& report, const std::vector<std::string>& kernel_ids,
                                const std::vector<double>& widths, double noise) {
  require(kernel_ids.size() == widths.size(), "one width per kernel id");
  std::map<std::string, Curve> by_method;
  const auto agg = report.aggregate();
  for (std::size_t i = 0; i < kernel_ids.size(); ++i)
    for (const auto& a : agg) {
      if (a.kernel_id != kernel_ids[i] || a.noise != noise) continue;
      Curve& c = by_method[a.method];
      c.method = a.method;
      c.sigma.push_back(widths[i]);
      c.psnr.push_back(a.psnr);
    }
  std::vector<Curve> out;
  for (auto& [name, c] : by_method) out.push_back(std::move(c));
  return out;
}

std::string curves_csv(const std::vector<Curve>& curves) {
  std::ostringstream os;
  os << "method,sigma,psnr\n";
  for (const auto& c : curves)
    for (std::size_t i = 0; i < c.sigma.size(); ++i)
      os << c.method << ',' << fixed(c.sigma[i], 2) << ',' << fixed(c.psnr[i], 4) << '\n';
  return os.str();
}

std::string curves_svg(const std::vector<Curve>& curves, const std::string& title) {
  require(!curves.empty(), "nothing to plot");
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& c : curves)
    for (std::size_t i = 0; i < c.sigma.size(); ++i) {
      xmin = std::min(xmin, c.sigma[i]);
      xmax = std::max(xmax, c.sigma[i]);
      if (std::isfinite(c.psnr[i])) {
        ymin = std::min(ymin, c.psnr[i]);
        ymax = std::max(ymax, c.psnr[i]);
      }
    }
  require(xmin <= xmax && ymin <= ymax, "curves have no finite points");
  if (xmax == xmin) xmax = xmin + 1.0;
  ymin = std::floor(ymin - 0.5);
  ymax = std::ceil(ymax + 0.5);
  constexpr double W = 640, H = 420, L = 60, R = 170, T = 40, B = 50;
  auto px = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - ymin) / (ymax - ymin) * (H - T - B); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << title
     << "</text>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B
     << "\" stroke=\"black\"/>\n";
  for (double x : curves.front().sigma)
    os << "<text x=\"" << px(x) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">"
       << fixed(x, 1) << "</text>\n";
  for (double y = ymin; y <= ymax + 1e-9; y += 1.0)
    os << "<text x=\"" << L - 6 << "\" y=\"" << py(y) + 4 << "\" text-anchor=\"end\">"
       << fixed(y, 0) << "</text>\n";
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12
     << "\" text-anchor=\"middle\">kernel width</text>\n";
  os << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" transform=\"rotate(-90 16 "
     << (T + H - B) / 2 << ")\" text-anchor=\"middle\">PSNR (dB)</text>\n";
  for (std::size_t m = 0; m < curves.size(); ++m) {
    const char* color = colors[m % 6];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < curves[m].sigma.size(); ++i)
      if (std::isfinite(curves[m].psnr[i]))
        os << px(curves[m].sigma[i]) << ',' << py(curves[m].psnr[i]) << ' ';
    os << "\"/>\n";
    const double ly = T + 16 + 18 * m;
    os << "<line x1=\"" << W - R + 12 << "\" y1=\"" << ly << "\" x2=\"" << W - R + 32
       << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << W - R + 38 << "\" y=\"" << ly + 4 << "\">" << curves[m].method
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace dcls::evalmetrics
