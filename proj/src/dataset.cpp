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

#include "dcls/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "dcls/common.hpp"
#include "dcls/file_util.hpp"
#include "dcls/image_io.hpp"
#include "dcls/kernel_io.hpp"
#include "dcls/kernelgen.hpp"
#include "dcls/rng.hpp"

namespace dcls::dataset {

namespace fs = std::filesystem;

std::string downsampler_name(degrade::Downsampler d) {
  return d == degrade::Downsampler::bicubic ? "bicubic" : "decimate";
}

degrade::Downsampler parse_downsampler(const std::string& name) {
  if (name == "decimate") return degrade::Downsampler::decimate;
  if (name == "bicubic") return degrade::Downsampler::bicubic;
  throw InvalidArgument("unknown downsampler '" + name + "' (decimate|bicubic)");
}

KernelSource parse_kernel_source(const std::string& name) {
  if (name == "gaussian8") return KernelSource::gaussian8;
  if (name == "isotropic") return KernelSource::isotropic;
  if (name == "anisotropic") return KernelSource::anisotropic;
  throw InvalidArgument("unknown kernel source '" + name + "' (gaussian8|isotropic|anisotropic)");
}

std::vector<std::string> gaussian8_ids(int scale) {
  std::vector<std::string> ids;
  for (double w : kernelgen::gaussian8_widths(scale)) {
    char id[32];
    std::snprintf(id, sizeof id, "g8x%d_%.2f", scale, w);
    ids.emplace_back(id);
  }
  return ids;
}

namespace {

constexpr const char* kHeader =
    "hr_path\tlr_path\tkernel_path\tkl_path\tscale\tnoise_sigma\tdownsampler\tseed\tkernel_id";

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string relative_to(const fs::path& p, const fs::path& base) {
  return fs::relative(fs::absolute(p), fs::absolute(base)).generic_string();
}

}  // namespace

std::string manifest_tsv(const std::vector<ManifestRow>& rows) {
  std::ostringstream os;
  os << kHeader << '\n';
  for (const auto& r : rows)
    os << r.hr_path << '\t' << r.lr_path << '\t' << r.kernel_path << '\t' << r.kl_path << '\t'
       << r.scale << '\t' << num(r.noise_sigma) << '\t' << downsampler_name(r.downsampler) << '\t'
       << r.seed << '\t' << r.kernel_id << '\n';
  return os.str();
}

std::vector<ManifestRow> parse_manifest(const std::string& text, const std::string& origin) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != kHeader)
    throw IoError(origin + ": missing or unexpected manifest header");
  std::vector<ManifestRow> rows;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, '\t')) f.push_back(cell);
    if (f.size() != 9)
      throw IoError(origin + ":" + std::to_string(lineno) + ": expected 9 columns, got " +
                    std::to_string(f.size()));
    try {
      rows.push_back({f[0], f[1], f[2], f[3], std::stoi(f[4]), std::stod(f[5]),
                      parse_downsampler(f[6]), std::stoull(f[7]), f[8]});
    } catch (const std::exception& e) {
      throw IoError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return rows;
}

std::vector<ManifestRow> read_manifest(const fs::path& path) {
  auto rows = parse_manifest(read_file(path), path.string());
  const fs::path base = fs::absolute(path).parent_path();
  auto fix = [&](std::string& p) {
    if (!p.empty() && !fs::path(p).is_absolute()) p = (base / p).lexically_normal().string();
  };
  for (auto& r : rows) {
    fix(r.hr_path);
    fix(r.lr_path);
    fix(r.kernel_path);
    fix(r.kl_path);
  }
  return rows;
}

std::vector<fs::path> list_images(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError(dir.string() + ": not a directory");
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::string ext = e.path().extension().string();
    std::ranges::transform(ext, ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png" || ext == ".dcli") out.push_back(e.path());
  }
  std::ranges::sort(out);
  return out;
}

std::vector<ManifestRow> synthesize(const SynthConfig& cfg) {
  require(!cfg.hr_paths.empty(), "synth needs at least one HR image");
  require(!cfg.noise_levels.empty(), "synth needs at least one noise level");
  require(cfg.kernels_per_image >= 1, "kernels_per_image must be >= 1");
  require(cfg.lr_format == "png" || cfg.lr_format == "dcli", "lr_format must be png or dcli");
  const fs::path out = cfg.out_dir;
  fs::create_directories(out / "lr");
  fs::create_directories(out / "kernels");
  fs::create_directories(out / "kl");

  std::vector<std::pair<std::string, BlurKernel>> shared;
  if (cfg.kernels == KernelSource::gaussian8) {
    const auto ks = kernelgen::gaussian8_set(cfg.scale);
    const auto ids = gaussian8_ids(cfg.scale);
    for (std::size_t i = 0; i < ks.size(); ++i) {
      shared.emplace_back(ids[i], ks[i]);
      kernel_io::write(out / "kernels" / (ids[i] + ".txt"), ks[i]);
    }
  }
  const auto protocol = cfg.kernels == KernelSource::anisotropic ? kernelgen::Protocol::anisotropic
                                                                 : kernelgen::Protocol::isotropic;
  std::vector<ManifestRow> rows;
  for (std::size_t img = 0; img < cfg.hr_paths.size(); ++img) {
    const Image hr = mod_crop(image_io::read_image(cfg.hr_paths[img]), cfg.scale);
    const std::string stem = cfg.hr_paths[img].stem().string();
    std::vector<std::pair<std::string, BlurKernel>> kernels = shared;
    if (kernels.empty())
      for (int j = 0; j < cfg.kernels_per_image; ++j) {
        const std::uint64_t s = split_seed(split_seed(cfg.seed, 1), img * cfg.kernels_per_image + j);
        const std::string id = stem + "_k" + std::to_string(j);
        kernels.emplace_back(id, kernelgen::sample_training_kernel(protocol, cfg.scale, s));
        kernel_io::write(out / "kernels" / (id + ".txt"), kernels.back().second);
      }
    for (const auto& [kid, k] : kernels) {
      degrade::ReformulationConfig rc;
      rc.epsilon = cfg.epsilon;
      rc.output_size = cfg.kl_size;
      rc.downsampler = cfg.downsampler;
      const fs::path kl_path = out / "kl" / (stem + "_" + kid + ".txt");
      kernel_io::write(kl_path, degrade::reformulate_kernel(hr, k, cfg.scale, rc));
      for (double noise : cfg.noise_levels) {
        degrade::DegradationSpec ds;
        ds.scale = cfg.scale;
        ds.kernel = k;
        ds.noise_sigma = noise;
        ds.downsampler = cfg.downsampler;
        ds.seed = split_seed(split_seed(cfg.seed, 2), rows.size());
        char name[64];
        std::snprintf(name, sizeof name, "_n%g.%s", noise, cfg.lr_format.c_str());
        const fs::path lr_path = out / "lr" / (stem + "_" + kid + name);
        image_io::write_image(lr_path, degrade::classical_degrade(hr, ds));
        rows.push_back({relative_to(cfg.hr_paths[img], out), relative_to(lr_path, out),
                        relative_to(out / "kernels" / (kid + ".txt"), out), relative_to(kl_path, out),
                        cfg.scale, noise, cfg.downsampler, ds.seed, kid});
      }
    }
  }
  write_file_atomic(out / "manifest.tsv", manifest_tsv(rows));
  return rows;
}

}  // namespace dcls::dataset
