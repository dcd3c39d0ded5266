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

#include "dcls/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dcls/checkpoint.hpp"
#include "dcls/common.hpp"
#include "dcls/dataset.hpp"
#include "dcls/ddlk.hpp"
#include "dcls/evalmetrics.hpp"
#include "dcls/optim.hpp"
#include "dcls/rng.hpp"

namespace dcls::training {

namespace fs = std::filesystem;

void TrainConfig::validate() const {
  require(batch_size >= 1, "batch_size must be >= 1");
  require(iterations >= 0, "iterations must be >= 0");
  require(lr_init > 0, "lr_init must be positive");
  require(lr_halving_interval > 0, "lr_halving_interval must be positive");
  require(noise_min >= 0 && noise_max >= noise_min, "noise range must satisfy 0 <= min <= max");
  require(grad_clip > 0, "grad_clip must be positive");
  require(kernel_weight >= 0 && image_weight >= 0, "loss weights must be >= 0");
  require(kernels_per_image >= 1, "kernels_per_image must be >= 1");
  require(val_interval >= 1 && log_interval >= 1, "intervals must be >= 1");
  require(workers == 1, "only single-worker loading is implemented");
  model.estimator.validate();
  model.dpan.validate();
  require(lr_patch >= model.estimator.kernel_size(), "lr_patch ", lr_patch,
          " is smaller than the kernel crop ", model.estimator.kernel_size());
}

namespace {

std::string protocol_name(kernelgen::Protocol p) {
  return p == kernelgen::Protocol::anisotropic ? "anisotropic" : "isotropic";
}

kernelgen::Protocol parse_protocol(const std::string& s) {
  if (s == "isotropic") return kernelgen::Protocol::isotropic;
  if (s == "anisotropic") return kernelgen::Protocol::anisotropic;
  throw InvalidArgument("unknown kernel protocol '" + s + "' (isotropic|anisotropic)");
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

TrainConfig train_config_from(const config::Config& c) {
  TrainConfig t;
  t.batch_size = static_cast<int>(c.get_int("train.batch_size", t.batch_size));
  t.lr_patch = static_cast<int>(c.get_int("train.lr_patch", t.lr_patch));
  t.iterations = c.get_int("train.iterations", t.iterations);
  t.lr_init = c.get_double("train.lr_init", t.lr_init);
  t.lr_halving_interval = c.get_int("train.lr_halving_interval", t.lr_halving_interval);
  t.adam_beta1 = c.get_double("train.adam_beta1", t.adam_beta1);
  t.adam_beta2 = c.get_double("train.adam_beta2", t.adam_beta2);
  t.protocol = parse_protocol(c.get_string("train.protocol", protocol_name(t.protocol)));
  t.noise_min = c.get_double("train.noise_min", t.noise_min);
  t.noise_max = c.get_double("train.noise_max", t.noise_max);
  t.seed = static_cast<std::uint64_t>(c.get_int("seed", static_cast<long>(t.seed)));
  t.grad_clip = c.get_double("train.grad_clip", t.grad_clip);
  t.kernel_weight = c.get_double("train.kernel_weight", t.kernel_weight);
  t.image_weight = c.get_double("train.image_weight", t.image_weight);
  t.kernels_per_image = static_cast<int>(c.get_int("train.kernels_per_image", t.kernels_per_image));
  t.val_interval = c.get_int("train.val_interval", t.val_interval);
  t.log_interval = c.get_int("train.log_interval", t.log_interval);
  t.checkpoint_interval = c.get_int("train.checkpoint_interval", t.checkpoint_interval);
  t.downsampler = dataset::parse_downsampler(
      c.get_string("train.downsampler", dataset::downsampler_name(t.downsampler)));
  t.epsilon = c.get_double("train.epsilon", t.epsilon);
  t.augment = c.get_bool("train.augment", t.augment);
  t.workers = static_cast<int>(c.get_int("train.workers", t.workers));

  auto& e = t.model.estimator;
  auto& d = t.model.dpan;
  e.layer_sizes = c.get_ints("model.estimator.layer_sizes", e.layer_sizes);
  e.trunk_layers = static_cast<int>(c.get_int("model.estimator.trunk_layers", e.trunk_layers));
  e.feature_width = static_cast<int>(c.get_int("model.estimator.feature_width", e.feature_width));
  d.in_channels = static_cast<int>(c.get_int("model.in_channels", d.in_channels));
  e.in_channels = d.in_channels;
  d.out_channels = static_cast<int>(c.get_int("model.out_channels", d.out_channels));
  d.scale = static_cast<int>(c.get_int("model.scale", d.scale));
  d.width = static_cast<int>(c.get_int("model.width", d.width));
  d.cr_width = static_cast<int>(c.get_int("model.cr_width", d.cr_width));
  d.groups = static_cast<int>(c.get_int("model.groups", d.groups));
  d.blocks_per_group = static_cast<int>(c.get_int("model.blocks_per_group", d.blocks_per_group));
  d.extractor_layers = static_cast<int>(c.get_int("model.extractor_layers", d.extractor_layers));
  d.smooth_size = static_cast<int>(c.get_int("model.smooth_size", d.smooth_size));
  d.ca_reduction = static_cast<int>(c.get_int("model.ca_reduction", d.ca_reduction));
  return t;
}

config::Config to_config(const TrainConfig& t) {
  config::Config c;
  c.set("train.batch_size", std::to_string(t.batch_size));
  c.set("train.lr_patch", std::to_string(t.lr_patch));
  c.set("train.iterations", std::to_string(t.iterations));
  c.set("train.lr_init", num(t.lr_init));
  c.set("train.lr_halving_interval", std::to_string(t.lr_halving_interval));
  c.set("train.adam_beta1", num(t.adam_beta1));
  c.set("train.adam_beta2", num(t.adam_beta2));
  c.set("train.protocol", protocol_name(t.protocol));
  c.set("train.noise_min", num(t.noise_min));
  c.set("train.noise_max", num(t.noise_max));
  c.set("seed", std::to_string(t.seed));
  c.set("train.grad_clip", num(t.grad_clip));
  c.set("train.kernel_weight", num(t.kernel_weight));
  c.set("train.image_weight", num(t.image_weight));
  c.set("train.kernels_per_image", std::to_string(t.kernels_per_image));
  c.set("train.val_interval", std::to_string(t.val_interval));
  c.set("train.log_interval", std::to_string(t.log_interval));
  c.set("train.checkpoint_interval", std::to_string(t.checkpoint_interval));
  c.set("train.downsampler", dataset::downsampler_name(t.downsampler));
  c.set("train.epsilon", num(t.epsilon));
  c.set("train.augment", t.augment ? "true" : "false");
  c.set("train.workers", std::to_string(t.workers));
  const auto& e = t.model.estimator;
  const auto& d = t.model.dpan;
  c.set("model.estimator.layer_sizes", config::join(e.layer_sizes));
  c.set("model.estimator.trunk_layers", std::to_string(e.trunk_layers));
  c.set("model.estimator.feature_width", std::to_string(e.feature_width));
  c.set("model.in_channels", std::to_string(d.in_channels));
  c.set("model.out_channels", std::to_string(d.out_channels));
  c.set("model.scale", std::to_string(d.scale));
  c.set("model.width", std::to_string(d.width));
  c.set("model.cr_width", std::to_string(d.cr_width));
  c.set("model.groups", std::to_string(d.groups));
  c.set("model.blocks_per_group", std::to_string(d.blocks_per_group));
  c.set("model.extractor_layers", std::to_string(d.extractor_layers));
  c.set("model.smooth_size", std::to_string(d.smooth_size));
  c.set("model.ca_reduction", std::to_string(d.ca_reduction));
  return c;
}

bool same_config(const TrainConfig& a, const TrainConfig& b) { return to_config(a) == to_config(b); }

nn::Var joint_loss(const nn::Var& sr, const nn::Var& hr, const nn::Var& k_est,
                   const nn::Var& k_target, double kernel_weight, double image_weight) {
  return nn::add(nn::mul(nn::l1_loss(k_est, k_target), kernel_weight),
                 nn::mul(nn::l1_loss(sr, hr), image_weight));
}

// Dihedral transforms ------------------------------------------------------

std::pair<int, int> dihedral_source(int t, int h, int w, int i, int j) {
  require(t >= 0 && t < 8, "dihedral transform must be in [0, 8), got ", t);
  const int turns = t % 4;
  // Output dims after `m` quarter turns.
  auto dims = [&](int m) { return m % 2 == 0 ? std::pair{h, w} : std::pair{w, h}; };
  if (t >= 4) j = dims(turns).second - 1 - j;
  for (int m = turns; m >= 1; --m) {
    const int ww = dims(m - 1).second;
    const int ni = j, nj = ww - 1 - i;
    i = ni;
    j = nj;
  }
  return {i, j};
}

Image dihedral(const Image& img, int t) {
  const bool swap = (t % 4) % 2 == 1;
  const int h = swap ? img.width() : img.height();
  const int w = swap ? img.height() : img.width();
  Image out(img.channels(), h, w);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      const auto [si, sj] = dihedral_source(t, img.height(), img.width(), i, j);
      for (int c = 0; c < img.channels(); ++c) out.at(c, i, j) = img.at(c, si, sj);
    }
  return out;
}

BlurKernel dihedral(const BlurKernel& k, int t) {
  BlurKernel out(k.size());
  for (int i = 0; i < k.size(); ++i)
    for (int j = 0; j < k.size(); ++j) {
      const auto [si, sj] = dihedral_source(t, k.size(), k.size(), i, j);
      out(i, j) = k(si, sj);
    }
  return out;
}

int dihedral_inverse(int t) {
  require(t >= 0 && t < 8, "dihedral transform must be in [0, 8), got ", t);
  return t < 4 ? (4 - t) % 4 : t;
}

Image dihedral_crop(const Image& img, int t, int top, int left, int size) {
  const bool swap = (t % 4) % 2 == 1;
  const int h = swap ? img.width() : img.height();
  const int w = swap ? img.height() : img.width();
  require(top >= 0 && left >= 0 && top + size <= h && left + size <= w,
          "crop window outside the transformed image");
  Image out(img.channels(), size, size);
  for (int i = 0; i < size; ++i)
    for (int j = 0; j < size; ++j) {
      const auto [si, sj] = dihedral_source(t, img.height(), img.width(), top + i, left + j);
      for (int c = 0; c < img.channels(); ++c) out.at(c, i, j) = img.at(c, si, sj);
    }
  return out;
}

int augment_transform(std::uint64_t seed) {
  Rng rng(seed);
  return static_cast<int>(rng.below(8));
}

Sample augment(const Sample& s, std::uint64_t seed) {
  const int t = augment_transform(seed);
  Sample out;
  if (!s.hr.empty()) out.hr = dihedral(s.hr, t);
  if (!s.lr.empty()) out.lr = dihedral(s.lr, t);
  if (!s.k_h.empty()) out.k_h = dihedral(s.k_h, t);
  if (!s.k_l.empty()) out.k_l = dihedral(s.k_l, t);
  return out;
}

// Sampling -----------------------------------------------------------------

PatchSampler::PatchSampler(std::vector<Source> sources, const TrainConfig& cfg)
    : sources_(std::move(sources)), cfg_(cfg) {
  cfg_.validate();
  require(!sources_.empty(), "training needs at least one source");
  const int s = cfg_.scale(), p = s * cfg_.lr_patch;
  for (auto& src : sources_) {
    src.hr = mod_crop(src.hr, s);
    require(src.hr.channels() == cfg_.model.dpan.in_channels, "training image has ",
            src.hr.channels(), " channels, model expects ", cfg_.model.dpan.in_channels);
    require(src.hr.height() >= p && src.hr.width() >= p, "training image of ", src.hr.height(),
            "x", src.hr.width(), " is smaller than the HR patch ", p);
    require(src.k_h.size() <= p, "kernel of size ", src.k_h.size(), " exceeds the HR patch");
  }
}

std::vector<Source> PatchSampler::draw_sources(const std::vector<Image>& hr_images,
                                               const TrainConfig& cfg) {
  std::vector<Source> out;
  const std::uint64_t base = split_seed(cfg.seed, 11);
  for (std::size_t i = 0; i < hr_images.size(); ++i)
    for (int j = 0; j < cfg.kernels_per_image; ++j) {
      const std::uint64_t s = split_seed(base, i * cfg.kernels_per_image + j);
      out.push_back({hr_images[i], kernelgen::sample_training_kernel(cfg.protocol, cfg.scale(), s), {}});
    }
  return out;
}

const BlurKernel& PatchSampler::target(std::size_t source, int transform) const {
  const Source& src = sources_.at(source);
  auto& slot = src.k_l.at(transform);
  if (!slot) {
    degrade::ReformulationConfig rc;
    rc.epsilon = cfg_.epsilon;
    rc.output_size = cfg_.model.estimator.kernel_size();
    rc.downsampler = cfg_.downsampler;
    slot = degrade::reformulate_kernel(dihedral(src.hr, transform), dihedral(src.k_h, transform),
                                       cfg_.scale(), rc);
  }
  return *slot;
}

Batch PatchSampler::sample(long iteration) const {
  Rng rng(split_seed(split_seed(cfg_.seed, 12), static_cast<std::uint64_t>(iteration)));
  const int s = cfg_.scale(), p = cfg_.lr_patch, hp = s * p;
  const int K = cfg_.model.estimator.kernel_size();
  std::vector<Image> hrs, lrs;
  Batch b;
  b.k_l = nn::Tensor({cfg_.batch_size, 1, K, K});
  for (int n = 0; n < cfg_.batch_size; ++n) {
    Batch::Entry e{};
    e.source = rng.below(sources_.size());
    e.transform = cfg_.augment ? static_cast<int>(rng.below(8)) : 0;
    const Source& src = sources_[e.source];
    const bool swap = (e.transform % 4) % 2 == 1;
    const int h = swap ? src.hr.width() : src.hr.height();
    const int w = swap ? src.hr.height() : src.hr.width();
    // Aligned to the scale so the decimation phase matches the full image.
    e.top = s * static_cast<int>(rng.below((h - hp) / s + 1));
    e.left = s * static_cast<int>(rng.below((w - hp) / s + 1));
    e.noise = rng.uniform(cfg_.noise_min, cfg_.noise_max);
    e.noise_seed = rng.next_u64();
    hrs.push_back(dihedral_crop(src.hr, e.transform, e.top, e.left, hp));
    degrade::DegradationSpec ds;
    ds.scale = s;
    ds.kernel = dihedral(src.k_h, e.transform);
    ds.noise_sigma = e.noise;
    ds.downsampler = cfg_.downsampler;
    ds.seed = e.noise_seed;
    lrs.push_back(degrade::classical_degrade(hrs.back(), ds));
    const BlurKernel& kl = target(e.source, e.transform);
    std::copy(kl.weights().begin(), kl.weights().end(), b.k_l.data.begin() + n * K * K);
    b.entries.push_back(e);
  }
  b.hr = ddlk::stack_images(hrs);
  b.lr = ddlk::stack_images(lrs);
  return b;
}

// Validation ---------------------------------------------------------------

ValidationSet make_validation_set(const std::vector<Image>& hr_images, const TrainConfig& cfg,
                                  std::uint64_t seed) {
  ValidationSet v;
  const int s = cfg.scale();
  for (std::size_t i = 0; i < hr_images.size(); ++i) {
    const std::uint64_t si = split_seed(seed, i);
    Rng rng(split_seed(si, 1));
    const Image hr = mod_crop(hr_images[i], s);
    const BlurKernel k = kernelgen::sample_training_kernel(cfg.protocol, s, split_seed(si, 0));
    degrade::DegradationSpec ds;
    ds.scale = s;
    ds.kernel = k;
    ds.noise_sigma = rng.uniform(cfg.noise_min, cfg.noise_max);
    ds.downsampler = cfg.downsampler;
    ds.seed = rng.next_u64();
    degrade::ReformulationConfig rc;
    rc.epsilon = cfg.epsilon;
    rc.output_size = cfg.model.estimator.kernel_size();
    rc.downsampler = cfg.downsampler;
    v.hr.push_back(hr);
    v.lr.push_back(degrade::classical_degrade(hr, ds));
    v.k_h.push_back(k);
    v.k_l.push_back(degrade::reformulate_kernel(hr, k, s, rc));
  }
  return v;
}

ValMetrics evaluate(const ValidationSet& val, int scale, const SrFunction& sr) {
  require(!val.hr.empty(), "empty validation set");
  ValMetrics m;
  std::vector<double> l1;
  for (std::size_t i = 0; i < val.hr.size(); ++i) {
    const auto [out, k] = sr(val.lr[i]);
    const double p = evalmetrics::psnr(evalmetrics::rgb_to_y(clamp01(out)),
                                       evalmetrics::rgb_to_y(val.hr[i]), scale);
    const Image bic = clamp01(degrade::upsample_bicubic(val.lr[i], scale));
    m.bicubic_psnr += evalmetrics::psnr(evalmetrics::rgb_to_y(bic), evalmetrics::rgb_to_y(val.hr[i]),
                                        scale);
    m.psnr_per_image.push_back(p);
    m.psnr += p;
    l1.push_back(ddlk::kernel_loss(k, val.k_l[i]));
  }
  const double n = static_cast<double>(val.hr.size());
  m.psnr /= n;
  m.bicubic_psnr /= n;
  for (double v : l1) m.kernel_l1_mean += v / n;
  std::ranges::sort(l1);
  m.kernel_l1_median = l1.size() % 2 ? l1[l1.size() / 2]
                                     : 0.5 * (l1[l1.size() / 2 - 1] + l1[l1.size() / 2]);
  return m;
}

ValMetrics evaluate(const ValidationSet& val, const dpan::DclsModel& model) {
  return evaluate(val, model.config().dpan.scale,
                  [&](const Image& lr) { return model.super_resolve(lr); });
}

// Training loop ------------------------------------------------------------

namespace {

void write_line(std::ofstream* os, const nlohmann::json& j) {
  if (!os) return;
  *os << j.dump() << '\n';
  os->flush();
}

nlohmann::json val_record(const ValMetrics& m) {
  return {{"type", "val"},
          {"iter", m.iteration},
          {"psnr", m.psnr},
          {"bicubic_psnr", m.bicubic_psnr},
          {"kernel_l1_median", m.kernel_l1_median},
          {"kernel_l1_mean", m.kernel_l1_mean}};
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const PatchSampler& sampler, const ValidationSet& val,
                  const TrainOptions& opts) {
  cfg.validate();
  TrainResult result;
  result.model = std::make_unique<dpan::DclsModel>(cfg.model, split_seed(cfg.seed, 13));
  dpan::DclsModel& model = *result.model;
  nn::ParameterSet& params = model.params();
  if (opts.init) {
    require(checkpoint::model_config_json(opts.init->config()) ==
                checkpoint::model_config_json(cfg.model),
            "initial model does not match the configured architecture");
    for (std::size_t i = 0; i < params.size(); ++i)
      params[i].mutable_value() = opts.init->params()[i].value();
  }
  optim::Adam adam(params, {cfg.adam_beta1, cfg.adam_beta2});
  const optim::HalvingSchedule schedule{cfg.lr_init, static_cast<int>(cfg.lr_halving_interval)};
  const std::string extra = nlohmann::json{{"train_config", to_config(cfg).serialize()}}.dump();

  std::ofstream metrics;
  std::ofstream* log = nullptr;
  if (!opts.out_dir.empty()) {
    fs::create_directories(opts.out_dir);
    metrics.open(opts.out_dir / "metrics.jsonl", std::ios::trunc);
    if (!metrics) throw IoError((opts.out_dir / "metrics.jsonl").string() + ": cannot open");
    log = &metrics;
  }
  auto validate = [&](long it) {
    if (val.hr.empty()) return;
    ValMetrics m = evaluate(val, model);
    m.iteration = it;
    write_line(log, val_record(m));
    if (opts.on_validation) opts.on_validation(m);
    result.validation.push_back(std::move(m));
  };
  auto abort_nan = [&](long it, const std::string& what, double value) {
    std::string where = "(no snapshot directory)";
    if (!opts.out_dir.empty()) {
      const fs::path snap = opts.out_dir / "nan_snapshot.ckpt";
      checkpoint::save(snap, model, it,
                       nlohmann::json{{"reason", what}, {"value", std::to_string(value)}}.dump());
      where = snap.string();
    }
    throw NumericalError("non-finite " + what + " at iteration " + std::to_string(it) +
                         "; snapshot " + where);
  };

  for (long it = 0; it < cfg.iterations; ++it) {
    if (it % cfg.val_interval == 0) validate(it);
    const Batch batch = sampler.sample(it);
    params.zero_grad();
    const dpan::ModelOutput out = model.forward(nn::constant(batch.lr));
    const nn::Var lk = nn::l1_loss(out.kernel, nn::constant(batch.k_l));
    const nn::Var li = nn::l1_loss(out.image, nn::constant(batch.hr));
    const nn::Var loss = nn::add(nn::mul(lk, cfg.kernel_weight), nn::mul(li, cfg.image_weight));
    const double lv = loss.value().data[0];
    if (!std::isfinite(lv)) abort_nan(it, "loss", lv);
    nn::backward(loss);
    const double gn = optim::clip_grad_norm(params, cfg.grad_clip);
    if (!std::isfinite(gn)) abort_nan(it, "gradient norm", gn);
    const double lr = schedule.at(it);
    adam.step(params, lr);
    result.losses.push_back(lv);
    if ((it + 1) % cfg.log_interval == 0 || it == 0) {
      write_line(log, {{"type", "train"},
                       {"iter", it + 1},
                       {"loss", lv},
                       {"kernel_l1", lk.value().data[0]},
                       {"image_l1", li.value().data[0]},
                       {"lr", lr},
                       {"grad_norm", gn}});
      if (opts.on_log) opts.on_log(it + 1, lv);
    }
    if (cfg.checkpoint_interval > 0 && (it + 1) % cfg.checkpoint_interval == 0 &&
        !opts.out_dir.empty())
      checkpoint::save(opts.out_dir / ("model_" + std::to_string(it + 1) + ".ckpt"), model, it + 1,
                       extra);
  }
  validate(cfg.iterations);
  if (!opts.out_dir.empty()) checkpoint::save(opts.out_dir / "model.ckpt", model, cfg.iterations, extra);
  return result;
}

}  // namespace dcls::training
