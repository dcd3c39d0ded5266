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

// dcls: synthesis, reformulation, inference, training and evaluation.
//
// Every subcommand resolves a flat key/value config from, in order, its
// defaults, --config, explicit flags and --override, then writes the result
// to <out>/<command>.config. Errors go to stderr as one JSON line.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dcls/checkpoint.hpp"
#include "dcls/common.hpp"
#include "dcls/config.hpp"
#include "dcls/dataset.hpp"
#include "dcls/degrade.hpp"
#include "dcls/evalmetrics.hpp"
#include "dcls/file_util.hpp"
#include "dcls/image_io.hpp"
#include "dcls/kernel_io.hpp"
#include "dcls/kernelgen.hpp"
#include "dcls/rng.hpp"
#include "dcls/spectral.hpp"
#include "dcls/training.hpp"

namespace fs = std::filesystem;
using namespace dcls;

namespace {

struct Command {
  std::string name;
  CLI::App* app = nullptr;
  config::Config defaults;
  std::vector<std::string> required;
  // Flag values by key; only flags given on the command line are applied.
  std::map<std::string, std::string> flags;
  std::map<std::string, CLI::Option*> options;
  std::string config_path;
  std::vector<std::string> overrides;
};

void add_key(Command& c, const std::string& key, const std::string& fallback,
             const std::string& help) {
  c.defaults.set(key, fallback);
  std::string flag = "--" + key;
  std::replace(flag.begin(), flag.end(), '_', '-');
  std::replace(flag.begin(), flag.end(), '.', '-');
  c.options[key] = c.app->add_option(flag, c.flags[key], help);
}

void add_required(Command& c, const std::string& key, const std::string& help) {
  add_key(c, key, "", help);
  c.required.push_back(key);
}

// Options bind to members, so a Command must not move after creation.
Command& make_command(std::vector<std::unique_ptr<Command>>& cmds, CLI::App& root,
                      const std::string& name, const std::string& help) {
  Command& c = *cmds.emplace_back(std::make_unique<Command>());
  c.name = name;
  c.app = root.add_subcommand(name, help);
  c.app->add_option("--config", c.config_path, "Flat key = value config file");
  c.app->add_option("--override", c.overrides, "key=value, applied last")->take_all();
  add_key(c, "seed", "0", "Top-level seed");
  add_key(c, "out", "", "Output directory (default $DCLS_OUTPUT_ROOT/<command>)");
  return c;
}

config::Config resolve(const Command& c) {
  config::Config cfg = c.defaults;
  if (!c.config_path.empty()) {
    const config::Config file = config::Config::load(c.config_path);
    for (const auto& [k, v] : file.values()) cfg.set(k, v);
  }
  for (const auto& [key, opt] : c.options)
    if (opt->count() > 0) cfg.set(key, c.flags.at(key));
  for (const auto& o : c.overrides) cfg.apply_override(o);
  for (const auto& [k, v] : cfg.values())
    require(c.defaults.has(k), "unknown key '", k, "' for command ", c.name);
  for (const auto& k : c.required)
    require(!cfg.get_string(k, "").empty(), "missing required key '", k, "'");
  if (cfg.get_string("out", "").empty()) {
    const char* root = std::getenv("DCLS_OUTPUT_ROOT");
    cfg.set("out", (fs::path(root && *root ? root : ".") / c.name).string());
  }
  return cfg;
}

fs::path prepare_out(const config::Config& cfg, const std::string& command) {
  const fs::path out = cfg.get_string("out", ".");
  fs::create_directories(out);
  write_file_atomic(out / (command + ".config"), cfg.serialize());
  return out;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

// Max-normalized gray rendering of a kernel.
Image kernel_image(const BlurKernel& k) {
  const double peak = k.max();
  Image img(1, k.size(), k.size());
  for (int i = 0; i < k.size(); ++i)
    for (int j = 0; j < k.size(); ++j) img.at(0, i, j) = peak > 0 ? std::max(0.0, k(i, j)) / peak : 0;
  return img;
}

std::string format_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

void print_json(const nlohmann::json& j) { std::cout << j.dump() << '\n'; }

// Subcommands ---------------------------------------------------------------

void run_synth(const config::Config& cfg) {
  dataset::SynthConfig sc;
  sc.hr_paths = dataset::list_images(cfg.require_string("hr_dir"));
  require(!sc.hr_paths.empty(), "no .png or .dcli images in ", cfg.get_string("hr_dir", ""));
  sc.out_dir = prepare_out(cfg, "synth");
  sc.scale = static_cast<int>(cfg.get_int("scale", 4));
  sc.kernels = dataset::parse_kernel_source(cfg.get_string("kernels", "gaussian8"));
  sc.kernels_per_image = static_cast<int>(cfg.get_int("kernels_per_image", 1));
  sc.noise_levels = cfg.get_doubles("noise", {0.0});
  sc.downsampler = dataset::parse_downsampler(cfg.get_string("downsampler", "decimate"));
  sc.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
  sc.kl_size = static_cast<int>(cfg.get_int("kl_size", 21));
  sc.epsilon = cfg.get_double("epsilon", 1e-2);
  sc.lr_format = cfg.get_string("format", "png");
  const auto rows = dataset::synthesize(sc);
  print_json({{"manifest", (sc.out_dir / "manifest.tsv").string()}, {"rows", rows.size()}});
}

void run_reformulate(const config::Config& cfg) {
  const Image hr = image_io::read_image(cfg.require_string("hr"));
  const BlurKernel k = kernel_io::read(cfg.require_string("kernel"));
  const int scale = static_cast<int>(cfg.get_int("scale", 4));
  const std::vector<double> eps = cfg.get_doubles("epsilon", {1e-2});
  require(!eps.empty(), "epsilon list is empty");
  degrade::ReformulationConfig rc;
  rc.output_size = static_cast<int>(cfg.get_int("kl_size", 21));
  rc.relative_epsilon = cfg.get_bool("relative_epsilon", true);
  rc.downsampler = dataset::parse_downsampler(cfg.get_string("downsampler", "decimate"));
  const fs::path out = prepare_out(cfg, "reformulate");
  nlohmann::json files = nlohmann::json::array();
  const Image x = mod_crop(hr, scale);
  for (double e : eps) {
    rc.epsilon = e;
    const BlurKernel kl = degrade::reformulate_kernel(x, k, scale, rc);
    const std::string stem = "kl_eps" + format_g(e);
    kernel_io::write(out / (stem + ".txt"), kl);
    image_io::write_png(out / (stem + ".png"), kernel_image(kl));
    files.push_back((out / (stem + ".txt")).string());
  }
  print_json({{"kernels", files}});
}

std::unique_ptr<dpan::DclsModel> load_model(const config::Config& cfg) {
  return checkpoint::load(cfg.require_string("checkpoint")).model;
}

void run_estimate(const config::Config& cfg) {
  const auto model = load_model(cfg);
  const Image lr = image_io::read_image(cfg.require_string("lr"));
  const BlurKernel k = model->estimator().estimate_kernel(lr);
  const fs::path out = prepare_out(cfg, "estimate");
  kernel_io::write(out / "kernel.txt", k);
  image_io::write_png(out / "kernel.png", kernel_image(k));
  print_json({{"kernel", (out / "kernel.txt").string()}, {"size", k.size()}});
}

void run_deconv(const config::Config& cfg) {
  const Image lr = image_io::read_image(cfg.require_string("lr"));
  const BlurKernel k = kernel_io::read(cfg.require_string("kernel"));
  const std::string m = cfg.get_string("method", "cls");
  spectral::DeconvMethod method;
  if (m == "wiener") method = spectral::DeconvMethod::wiener;
  else if (m == "cls") method = spectral::DeconvMethod::cls;
  else if (m == "dcls_rgb") method = spectral::DeconvMethod::dcls_rgb;
  else throw InvalidArgument("unknown deconv method '" + m + "' (wiener|cls|dcls_rgb)");
  spectral::DeconvConfig dc;
  dc.cls.lambda = cfg.get_double("lambda", 100.0);
  dc.nsr = cfg.get_double("nsr", 1e-2);
  const Image x = spectral::deconv_rgb(lr, k, method, dc);
  const fs::path out = prepare_out(cfg, "deconv");
  const fs::path file = out / ("deconv." + cfg.get_string("format", "png"));
  image_io::write_image(file, cfg.get_string("format", "png") == "png" ? clamp01(x) : x);
  print_json({{"image", file.string()}});
}

void run_sr(const config::Config& cfg) {
  const Image lr = image_io::read_image(cfg.require_string("lr"));
  const std::string method = cfg.get_string("method", "model");
  Image sr;
  const fs::path out = prepare_out(cfg, "sr");
  if (method == "model") {
    const auto model = load_model(cfg);
    auto [img, k] = model->super_resolve(lr);
    sr = std::move(img);
    kernel_io::write(out / "kernel.txt", k);
  } else if (method == "bicubic") {
    sr = degrade::upsample_bicubic(lr, static_cast<int>(cfg.get_int("scale", 4)));
  } else {
    throw InvalidArgument("unknown sr method '" + method + "' (model|bicubic)");
  }
  const std::string fmt = cfg.get_string("format", "png");
  const fs::path file = out / ("sr." + fmt);
  image_io::write_image(file, clamp01(sr));
  print_json({{"image", file.string()}, {"height", sr.height()}, {"width", sr.width()}});
}

std::vector<Image> read_images(const fs::path& dir) {
  std::vector<Image> out;
  for (const auto& p : dataset::list_images(dir)) out.push_back(image_io::read_image(p));
  require(!out.empty(), "no .png or .dcli images in ", dir.string());
  return out;
}

void run_train(const config::Config& cfg) {
  config::Config tc;
  for (const auto& [k, v] : cfg.values())
    if (k == "seed" || k.starts_with("train.") || k.starts_with("model.")) tc.set(k, v);
  const training::TrainConfig t = training::train_config_from(tc);
  t.validate();

  std::vector<training::Source> sources;
  const std::string manifest = cfg.get_string("manifest", "");
  const std::string hr_dir = cfg.get_string("hr_dir", "");
  require(manifest.empty() != hr_dir.empty(), "train needs exactly one of manifest or hr_dir");
  if (!manifest.empty()) {
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& row : dataset::read_manifest(manifest)) {
      require(row.scale == t.scale(), "manifest scale ", row.scale, " differs from model.scale ",
              t.scale());
      if (!seen.insert({row.hr_path, row.kernel_path}).second) continue;
      sources.push_back({image_io::read_image(row.hr_path), kernel_io::read(row.kernel_path), {}});
    }
  } else {
    sources = training::PatchSampler::draw_sources(read_images(hr_dir), t);
  }
  const training::PatchSampler sampler(std::move(sources), t);
  training::ValidationSet val;
  if (const std::string vd = cfg.get_string("val_dir", ""); !vd.empty())
    val = training::make_validation_set(read_images(vd), t, split_seed(t.seed, 14));

  training::TrainOptions opts;
  opts.out_dir = cfg.get_string("out", ".");
  fs::create_directories(opts.out_dir);
  config::Config resolved = cfg;
  const config::Config echoed = training::to_config(t);
  for (const auto& [k, v] : echoed.values()) resolved.set(k, v);
  write_file_atomic(opts.out_dir / "train.config", resolved.serialize());
  opts.on_log = [](long it, double loss) { print_json({{"iter", it}, {"loss", loss}}); };
  opts.on_validation = [](const training::ValMetrics& m) {
    print_json({{"iter", m.iteration},
                {"val_psnr", m.psnr},
                {"bicubic_psnr", m.bicubic_psnr},
                {"kernel_l1_median", m.kernel_l1_median}});
  };
  training::train(t, sampler, val, opts);
  print_json({{"checkpoint", (opts.out_dir / "model.ckpt").string()}});
}

void run_eval(const config::Config& cfg) {
  evalmetrics::BenchmarkSpec spec;
  const fs::path hr_dir = cfg.require_string("hr_dir");
  for (const auto& p : dataset::list_images(hr_dir)) {
    spec.image_ids.push_back(p.stem().string());
    spec.hr_images.push_back(image_io::read_image(p));
  }
  require(!spec.hr_images.empty(), "no .png or .dcli images in ", hr_dir.string());
  spec.dataset = cfg.get_string("dataset", "");
  if (spec.dataset.empty()) spec.dataset = fs::absolute(hr_dir).lexically_normal().filename().string();
  if (spec.dataset.empty()) spec.dataset = "custom";
  spec.scale = static_cast<int>(cfg.get_int("scale", 4));
  spec.noise_levels = cfg.get_doubles("noise", {0.0});
  spec.downsampler = dataset::parse_downsampler(cfg.get_string("downsampler", "decimate"));
  spec.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
  spec.border = static_cast<int>(cfg.get_int("border", -1));
  spec.kl_size = static_cast<int>(cfg.get_int("kl_size", 21));

  const std::string kernels = cfg.get_string("kernels", "gaussian8");
  std::vector<double> widths;
  if (kernels == "gaussian8") {
    const auto ids = dataset::gaussian8_ids(spec.scale);
    const auto ks = kernelgen::gaussian8_set(spec.scale);
    for (std::size_t i = 0; i < ks.size(); ++i) spec.kernels.push_back({ids[i], ks[i]});
    widths = kernelgen::gaussian8_widths(spec.scale);
  } else {
    require(fs::is_directory(kernels), "kernels must be gaussian8 or a directory: ", kernels);
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(kernels))
      if (e.is_regular_file()) files.push_back(e.path());
    std::ranges::sort(files);
    for (const auto& f : files) spec.kernels.push_back({f.stem().string(), kernel_io::read(f)});
    require(!spec.kernels.empty(), "no kernel files in ", kernels);
  }

  std::unique_ptr<dpan::DclsModel> model;
  std::vector<evalmetrics::Method> methods;
  for (const auto& m : split_list(cfg.get_string("methods", "bicubic"))) {
    if (m == "bicubic") {
      methods.push_back(evalmetrics::bicubic_method());
    } else if (m == "cls_rgb+bicubic" || m == "wiener_rgb+bicubic") {
      methods.push_back(evalmetrics::deconv_bicubic_method(m[0] == 'c'));
    } else if (m == "dcls") {
      model = load_model(cfg);
      require(model->config().dpan.scale == spec.scale, "checkpoint scale ",
              model->config().dpan.scale, " differs from scale ", spec.scale);
      const dpan::DclsModel* mp = model.get();
      methods.push_back({"dcls", [mp](const evalmetrics::CaseContext& c) {
                           return mp->super_resolve(c.lr).first;
                         }});
    } else {
      throw InvalidArgument("unknown method '" + m +
                            "' (bicubic|cls_rgb+bicubic|wiener_rgb+bicubic|dcls)");
    }
  }
  require(!methods.empty(), "no methods selected");

  const fs::path out = prepare_out(cfg, "eval");
  const evalmetrics::EvalReport report = evalmetrics::run_benchmark(spec, methods);
  write_file_atomic(out / "report.tsv", evalmetrics::report_tsv(report));
  write_file_atomic(out / "report.json", evalmetrics::report_json(report));
  if (!widths.empty()) {
    std::vector<std::string> ids;
    for (const auto& k : spec.kernels) ids.push_back(k.id);
    write_file_atomic(out / "curves.csv", evalmetrics::curves_csv(evalmetrics::sigma_curves(
                                              report, ids, widths, spec.noise_levels.front())));
  }
  std::cout << evalmetrics::report_tsv(report);
}

std::vector<evalmetrics::Curve> parse_curves(const std::string& text, const std::string& origin) {
  std::istringstream is(text);
  std::string line;
  require(static_cast<bool>(std::getline(is, line)) && line == "method,sigma,psnr", origin,
          ": expected header method,sigma,psnr");
  std::vector<evalmetrics::Curve> curves;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_list(line);
    if (f.size() != 3) throw IoError(origin + ":" + std::to_string(lineno) + ": expected 3 fields");
    if (curves.empty() || curves.back().method != f[0]) curves.push_back({f[0], {}, {}});
    try {
      curves.back().sigma.push_back(std::stod(f[1]));
      curves.back().psnr.push_back(std::stod(f[2]));
    } catch (const std::exception&) {
      throw IoError(origin + ":" + std::to_string(lineno) + ": bad number");
    }
  }
  require(!curves.empty(), origin, ": no curve points");
  return curves;
}

void run_plot(const config::Config& cfg) {
  const fs::path in = cfg.require_string("curves");
  const auto curves = parse_curves(read_file(in), in.string());
  const fs::path out = prepare_out(cfg, "plot");
  const fs::path file = out / "curves.svg";
  write_file_atomic(file, evalmetrics::curves_svg(curves, cfg.get_string("title", "PSNR vs kernel width")));
  print_json({{"plot", file.string()}, {"curves", curves.size()}});
}

std::string error_kind(const std::exception& e) {
  if (dynamic_cast<const InvalidArgument*>(&e)) return "invalid_argument";
  if (dynamic_cast<const IoError*>(&e)) return "io_error";
  if (dynamic_cast<const NumericalError*>(&e)) return "numerical_error";
  if (dynamic_cast<const SingularOperator*>(&e)) return "singular_operator";
  if (dynamic_cast<const fs::filesystem_error*>(&e)) return "io_error";
  return "internal";
}

void report_error(const std::string& command, const std::string& kind, const std::string& msg) {
  std::cerr << nlohmann::json{{"error", kind}, {"command", command}, {"message", msg}}.dump()
            << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dcls: blind super-resolution tools"};
  app.require_subcommand(1);

  std::vector<std::unique_ptr<Command>> cmds;
  {
    Command& c = make_command(cmds, app, "synth", "Synthesize an LR dataset from HR images");
    add_required(c, "hr_dir", "Directory of HR images");
    add_key(c, "scale", "4", "Scale factor");
    add_key(c, "kernels", "gaussian8", "gaussian8|isotropic|anisotropic");
    add_key(c, "kernels_per_image", "1", "Random kernels per image");
    add_key(c, "noise", "0", "Comma-separated noise sigmas (0-255)");
    add_key(c, "downsampler", "decimate", "decimate|bicubic");
    add_key(c, "kl_size", "21", "Size of the cached LR-space kernels");
    add_key(c, "epsilon", "0.01", "Reformulation regularizer");
    add_key(c, "format", "png", "png|dcli");
  }
  {
    Command& c = make_command(cmds, app, "reformulate", "Compute the LR-space kernel of an HR image");
    add_required(c, "hr", "HR image");
    add_required(c, "kernel", "Blur kernel file");
    add_key(c, "scale", "4", "Scale factor");
    add_key(c, "epsilon", "0.01", "Comma-separated regularizers, one kernel each");
    add_key(c, "relative_epsilon", "true", "Scale epsilon by the mean spectral power");
    add_key(c, "kl_size", "21", "Output kernel size");
    add_key(c, "downsampler", "decimate", "decimate|bicubic");
  }
  {
    Command& c = make_command(cmds, app, "estimate", "Estimate the LR-space kernel of an LR image");
    add_required(c, "checkpoint", "Model checkpoint");
    add_required(c, "lr", "LR image");
  }
  {
    Command& c = make_command(cmds, app, "deconv", "Deblur an LR image with a given kernel");
    add_required(c, "lr", "LR image");
    add_required(c, "kernel", "Kernel file");
    add_key(c, "method", "cls", "wiener|cls|dcls_rgb");
    add_key(c, "lambda", "100", "CLS regularization weight");
    add_key(c, "nsr", "0.01", "Wiener noise-to-signal ratio");
    add_key(c, "format", "png", "png|dcli");
  }
  {
    Command& c = make_command(cmds, app, "sr", "Super-resolve an LR image");
    add_key(c, "checkpoint", "", "Model checkpoint (method=model)");
    add_required(c, "lr", "LR image");
    add_key(c, "method", "model", "model|bicubic");
    add_key(c, "scale", "4", "Scale factor for method=bicubic");
    add_key(c, "format", "png", "png|dcli");
  }
  {
    Command& c = make_command(cmds, app, "train", "Train the estimator and reconstruction network");
    add_key(c, "manifest", "", "Training manifest (HR image and kernel per row)");
    add_key(c, "hr_dir", "", "HR directory; kernels come from train.protocol");
    add_key(c, "val_dir", "", "Held-out HR images for validation");
    const config::Config train_defaults = training::to_config(training::TrainConfig{});
    for (const auto& [k, v] : train_defaults.values())
      if (k != "seed") add_key(c, k, v, "");
  }
  {
    Command& c = make_command(cmds, app, "eval", "Benchmark methods on HR images");
    add_required(c, "hr_dir", "Directory of HR test images");
    add_key(c, "dataset", "", "Dataset name for the report (default: directory name)");
    add_key(c, "scale", "4", "Scale factor");
    add_key(c, "kernels", "gaussian8", "gaussian8 or a directory of kernel files");
    add_key(c, "noise", "0", "Comma-separated noise sigmas (0-255)");
    add_key(c, "downsampler", "decimate", "decimate|bicubic");
    add_key(c, "methods", "bicubic", "Comma-separated: bicubic, cls_rgb+bicubic, wiener_rgb+bicubic, dcls");
    add_key(c, "checkpoint", "", "Model checkpoint for the dcls method");
    add_key(c, "border", "-1", "Border excluded from metrics (-1: scale)");
    add_key(c, "kl_size", "21", "Size of the oracle LR-space kernels");
  }
  {
    Command& c = make_command(cmds, app, "plot", "Render PSNR-vs-width curves to SVG");
    add_required(c, "curves", "curves.csv written by eval");
    add_key(c, "title", "PSNR vs kernel width", "Plot title");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error(app.get_subcommands().empty() ? "" : app.get_subcommands()[0]->get_name(),
                 "usage", e.what());
    return 2;
  }

  const std::map<std::string, void (*)(const config::Config&)> handlers{
      {"synth", run_synth}, {"reformulate", run_reformulate}, {"estimate", run_estimate},
      {"deconv", run_deconv}, {"sr", run_sr}, {"train", run_train},
      {"eval", run_eval}, {"plot", run_plot}};
  for (const auto& c : cmds) {
    if (!c->app->parsed()) continue;
    try {
      handlers.at(c->name)(resolve(*c));
      return 0;
    } catch (const std::exception& e) {
      report_error(c->name, error_kind(e), e.what());
      return 1;
    }
  }
  return 2;
}
