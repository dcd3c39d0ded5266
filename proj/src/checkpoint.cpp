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

#include "dcls/checkpoint.hpp"

#include <bit>
#include <cstring>

#include <json.hpp>

#include "dcls/common.hpp"
#include "dcls/file_util.hpp"

namespace dcls::checkpoint {

namespace {

using nlohmann::json;

constexpr char kMagic[] = "DCLSCKP1";
static_assert(std::endian::native == std::endian::little, "checkpoints assume a little-endian host");

json to_json(const dpan::ModelConfig& c) {
  const auto& e = c.estimator;
  const auto& d = c.dpan;
  return {{"estimator",
           {{"layer_sizes", e.layer_sizes},
            {"trunk_layers", e.trunk_layers},
            {"feature_width", e.feature_width},
            {"in_channels", e.in_channels}}},
          {"dpan",
           {{"in_channels", d.in_channels},
            {"out_channels", d.out_channels},
            {"scale", d.scale},
            {"width", d.width},
            {"cr_width", d.cr_width},
            {"groups", d.groups},
            {"blocks_per_group", d.blocks_per_group},
            {"extractor_layers", d.extractor_layers},
            {"smooth_size", d.smooth_size},
            {"ca_reduction", d.ca_reduction}}}};
}

dpan::ModelConfig from_json(const json& j) {
  dpan::ModelConfig c;
  const json& e = j.at("estimator");
  c.estimator.layer_sizes = e.at("layer_sizes").get<std::vector<int>>();
  c.estimator.trunk_layers = e.at("trunk_layers");
  c.estimator.feature_width = e.at("feature_width");
  c.estimator.in_channels = e.at("in_channels");
  const json& d = j.at("dpan");
  c.dpan.in_channels = d.at("in_channels");
  c.dpan.out_channels = d.at("out_channels");
  c.dpan.scale = d.at("scale");
  c.dpan.width = d.at("width");
  c.dpan.cr_width = d.at("cr_width");
  c.dpan.groups = d.at("groups");
  c.dpan.blocks_per_group = d.at("blocks_per_group");
  c.dpan.extractor_layers = d.at("extractor_layers");
  c.dpan.smooth_size = d.at("smooth_size");
  c.dpan.ca_reduction = d.at("ca_reduction");
  return c;
}

}  // namespace

std::string model_config_json(const dpan::ModelConfig& cfg) { return to_json(cfg).dump(); }

dpan::ModelConfig model_config_from_json(const std::string& text) {
  try {
    return from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("bad model config: ") + e.what());
  }
}

std::string encode(const dpan::DclsModel& model, long iteration, const std::string& extra_json) {
  const nn::ParameterSet& ps = model.params();
  json header;
  header["model"] = to_json(model.config());
  header["iteration"] = iteration;
  header["extra"] = json::parse(extra_json);
  header["params"] = json::array();
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const auto& s = ps[i].shape();
    header["params"].push_back({{"name", ps.name(i)}, {"shape", {s[0], s[1], s[2], s[3]}}});
  }
  const std::string h = header.dump();
  std::string out(kMagic, 8);
  const std::uint64_t len = h.size();
  out.append(reinterpret_cast<const char*>(&len), sizeof len);
  out += h;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const auto& d = ps[i].value().data;
    out.append(reinterpret_cast<const char*>(d.data()), d.size() * sizeof(double));
  }
  return out;
}

Loaded decode(const std::string& bytes, const std::string& origin) {
  auto fail = [&](const std::string& why) { return IoError(origin + ": " + why); };
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 8) != 0)
    throw fail("not a DCLSCKP1 checkpoint");
  std::uint64_t len = 0;
  std::memcpy(&len, bytes.data() + 8, sizeof len);
  if (len > bytes.size() - 16) throw fail("truncated header");
  json header;
  try {
    header = json::parse(bytes.substr(16, len));
  } catch (const json::exception& e) {
    throw fail(std::string("bad header: ") + e.what());
  }
  Loaded out;
  try {
    out.model = std::make_unique<dpan::DclsModel>(from_json(header.at("model")));
    out.iteration = header.value("iteration", 0L);
    out.extra_json = header.value("extra", json::object()).dump();
  } catch (const json::exception& e) {
    throw fail(std::string("bad header: ") + e.what());
  }
  nn::ParameterSet& ps = out.model->params();
  const json& plist = header.at("params");
  if (plist.size() != ps.size())
    throw fail("checkpoint has " + std::to_string(plist.size()) + " parameters, model expects " +
               std::to_string(ps.size()));
  std::size_t offset = 16 + len;
  for (const auto& entry : plist) {
    const std::string name = entry.at("name");
    const std::size_t idx = ps.find(name);
    if (idx == ps.size()) throw fail("unknown parameter " + name);
    const auto shape = entry.at("shape").get<std::vector<int>>();
    const auto& want = ps[idx].shape();
    if (shape.size() != 4 || !std::equal(shape.begin(), shape.end(), want.begin()))
      throw fail("shape mismatch for " + name);
    auto& data = ps[idx].mutable_value().data;
    const std::size_t n = data.size() * sizeof(double);
    if (offset + n > bytes.size()) throw fail("truncated weights");
    std::memcpy(data.data(), bytes.data() + offset, n);
    offset += n;
  }
  if (offset != bytes.size()) throw fail("trailing bytes after weights");
  return out;
}

void save(const std::filesystem::path& path, const dpan::DclsModel& model, long iteration,
          const std::string& extra_json) {
  write_file_atomic(path, encode(model, iteration, extra_json));
}

Loaded load(const std::filesystem::path& path) { return decode(read_file(path), path.string()); }

}  // namespace dcls::checkpoint
