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
#include <filesystem>
#include <string>
#include <vector>

#include "dcls/degrade.hpp"
#include "dcls/image.hpp"
#include "dcls/kernel.hpp"

/// Dataset manifests and LR synthesis.
///
/// A manifest is a TSV with the header
///   hr_path lr_path kernel_path kl_path scale noise_sigma downsampler seed kernel_id
/// Relative paths are resolved against the manifest's directory.
namespace dcls::dataset {

struct ManifestRow {
  std::string hr_path;
  std::string lr_path;
  std::string kernel_path;
  std::string kl_path;
  int scale = 4;
  double noise_sigma = 0.0;
  degrade::Downsampler downsampler = degrade::Downsampler::decimate;
  std::uint64_t seed = 0;
  std::string kernel_id;

  bool operator==(const ManifestRow&) const = default;
};

std::string downsampler_name(degrade::Downsampler d);
degrade::Downsampler parse_downsampler(const std::string& name);

std::string manifest_tsv(const std::vector<ManifestRow>& rows);
std::vector<ManifestRow> parse_manifest(const std::string& text, const std::string& origin);
/// Reads a manifest and makes its paths absolute.
std::vector<ManifestRow> read_manifest(const std::filesystem::path& path);

enum class KernelSource { gaussian8, isotropic, anisotropic };
KernelSource parse_kernel_source(const std::string& name);
/// Ids of gaussian8_set(scale), e.g. "g8x4_1.80".
std::vector<std::string> gaussian8_ids(int scale);

struct SynthConfig {
  std::vector<std::filesystem::path> hr_paths;
  std::filesystem::path out_dir;
  int scale = 4;
  KernelSource kernels = KernelSource::gaussian8;
  /// Random protocols draw this many kernels per image.
  int kernels_per_image = 1;
  std::vector<double> noise_levels{0.0};
  degrade::Downsampler downsampler = degrade::Downsampler::decimate;
  std::uint64_t seed = 0;
  int kl_size = 21;
  double epsilon = 1e-2;
  /// "png" (8-bit) or "dcli" (lossless float) LR files.
  std::string lr_format = "png";
};

/// Image files (.png and .dcli) directly inside `dir`, sorted by name.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

/// Writes kernels/, kl/, lr/ and manifest.tsv under cfg.out_dir and returns
/// the rows. Outputs are a pure function of the inputs and the seed.
std::vector<ManifestRow> synthesize(const SynthConfig& cfg);

}  // namespace dcls::dataset
