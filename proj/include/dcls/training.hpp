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

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dcls/config.hpp"
#include "dcls/degrade.hpp"
#include "dcls/dpan.hpp"
#include "dcls/image.hpp"
#include "dcls/kernel.hpp"
#include "dcls/kernelgen.hpp"
#include "dcls/nn.hpp"

/// Joint training of the kernel estimator and the reconstruction network.
namespace dcls::training {

struct TrainConfig {
  int batch_size = 64;
  /// LR patch side; HR patches are scale times larger.
  int lr_patch = 64;
  long iterations = 500000;
  double lr_init = 4e-4;
  long lr_halving_interval = 200000;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.99;
  kernelgen::Protocol protocol = kernelgen::Protocol::isotropic;
  /// Training noise sigma (0-255 scale) is drawn from U[noise_min, noise_max].
  double noise_min = 0.0;
  double noise_max = 0.0;
  std::uint64_t seed = 0;
  double grad_clip = 10.0;
  double kernel_weight = 1.0;
  double image_weight = 1.0;
  /// Kernels drawn per training image; each (image, kernel) pair gets its
  /// own cached LR-space target.
  int kernels_per_image = 8;
  long val_interval = 500;
  long log_interval = 100;
  /// 0 disables intermediate checkpoints.
  long checkpoint_interval = 0;
  degrade::Downsampler downsampler = degrade::Downsampler::decimate;
  double epsilon = 1e-2;
  bool augment = true;
  /// Only single-worker runs are deterministic; this build always runs one.
  int workers = 1;
  dpan::ModelConfig model;

  int scale() const { return model.dpan.scale; }
  void validate() const;
};

/// Reads "train.*" and "model.*" keys over the defaults.
TrainConfig train_config_from(const config::Config& c);
/// Writes every field back as keys, so train_config_from(to_config(t)) == t.
config::Config to_config(const TrainConfig& t);
bool same_config(const TrainConfig& a, const TrainConfig& b);

/// kernel_weight * l1(k_est, k_target) + image_weight * l1(sr, hr).
nn::Var joint_loss(const nn::Var& sr, const nn::Var& hr, const nn::Var& k_est,
                   const nn::Var& k_target, double kernel_weight = 1.0, double image_weight = 1.0);

// Dihedral transforms. t in [0, 8): t % 4 counter-clockwise quarter turns,
// followed by a horizontal flip when t >= 4.

/// Source pixel of output pixel (i, j) for an input of size h x w.
std::pair<int, int> dihedral_source(int t, int h, int w, int i, int j);
Image dihedral(const Image& img, int t);
BlurKernel dihedral(const BlurKernel& k, int t);
int dihedral_inverse(int t);
/// Window (top, left, size x size) of dihedral(img, t), read without
/// transforming the whole image.
Image dihedral_crop(const Image& img, int t, int top, int left, int size);

struct Sample {
  Image hr;
  Image lr;
  BlurKernel k_h;
  BlurKernel k_l;
};

/// Transform drawn from `seed`, applied to every field that is set.
int augment_transform(std::uint64_t seed);
Sample augment(const Sample& s, std::uint64_t seed);

/// One (HR image, blur kernel) pair and its lazily computed LR-space targets,
/// one per dihedral transform of the full image.
struct Source {
  Image hr;
  BlurKernel k_h;
  mutable std::array<std::optional<BlurKernel>, 8> k_l;
};

struct Batch {
  nn::Tensor lr;
  nn::Tensor hr;
  nn::Tensor k_l;
  struct Entry {
    std::size_t source;
    int transform;
    int top, left;
    double noise;
    std::uint64_t noise_seed;
  };
  std::vector<Entry> entries;
};

/// Draws training patches. Each LR patch is classical_degrade of the
/// (transformed) HR patch with the (transformed) kernel, so the pair is exact
/// and the target k_l is the reformulation of the transformed full image.
class PatchSampler {
 public:
  PatchSampler(std::vector<Source> sources, const TrainConfig& cfg);

  /// Kernels for each image drawn by the configured protocol.
  static std::vector<Source> draw_sources(const std::vector<Image>& hr_images,
                                          const TrainConfig& cfg);

  /// Deterministic in (cfg.seed, iteration).
  Batch sample(long iteration) const;
  const BlurKernel& target(std::size_t source, int transform) const;
  std::size_t size() const { return sources_.size(); }
  const Source& source(std::size_t i) const { return sources_.at(i); }

 private:
  std::vector<Source> sources_;
  TrainConfig cfg_;
};

/// Held-out full images degraded once with fixed kernels.
struct ValidationSet {
  std::vector<Image> hr;
  std::vector<Image> lr;
  std::vector<BlurKernel> k_h;
  std::vector<BlurKernel> k_l;
};

ValidationSet make_validation_set(const std::vector<Image>& hr_images, const TrainConfig& cfg,
                                  std::uint64_t seed);

struct ValMetrics {
  long iteration = 0;
  double psnr = 0.0;
  double bicubic_psnr = 0.0;
  double kernel_l1_median = 0.0;
  double kernel_l1_mean = 0.0;
  std::vector<double> psnr_per_image;
};

/// SR output and kernel estimate for one LR image.
using SrFunction = std::function<std::pair<Image, BlurKernel>(const Image& lr)>;

/// Mean Y-PSNR (border = scale) of `sr` and of bicubic upsampling, and kernel
/// L1 against the cached targets.
ValMetrics evaluate(const ValidationSet& val, int scale, const SrFunction& sr);
ValMetrics evaluate(const ValidationSet& val, const dpan::DclsModel& model);

struct TrainOptions {
  /// Empty disables metrics/checkpoint files.
  std::filesystem::path out_dir;
  /// Starting weights; its config must match. Null means a fresh model.
  const dpan::DclsModel* init = nullptr;
  std::function<void(const ValMetrics&)> on_validation;
  std::function<void(long iteration, double loss)> on_log;
};

struct TrainResult {
  std::unique_ptr<dpan::DclsModel> model;
  std::vector<ValMetrics> validation;
  /// Loss of every iteration.
  std::vector<double> losses;
};

/// Adam on the joint loss with step halving and gradient clipping. Validates
/// at iteration 0, every val_interval and at the end. A non-finite loss
/// writes <out_dir>/nan_snapshot.ckpt and throws NumericalError.
TrainResult train(const TrainConfig& cfg, const PatchSampler& sampler, const ValidationSet& val,
                  const TrainOptions& opts = {});

}  // namespace dcls::training
