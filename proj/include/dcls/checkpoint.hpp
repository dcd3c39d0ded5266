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

#include <filesystem>
#include <memory>
#include <string>

#include "dcls/dpan.hpp"

// Checkpoint layout:
//
//   "DCLSCKP1"                 8-byte magic
//   uint64 LE                  header length in bytes
//   JSON header                {"model": {...}, "iteration": n, "params": [{name, shape}...],
//                               "extra": {...}}
//   float64 LE                 parameter values in header order, NCHW
//
// The embedded model block makes a checkpoint self-describing.
namespace dcls::checkpoint {

struct Loaded {
  std::unique_ptr<dpan::DclsModel> model;
  long iteration = 0;
  /// Free-form JSON object stored with the weights (e.g. the training config).
  std::string extra_json = "{}";
};

std::string model_config_json(const dpan::ModelConfig& cfg);
dpan::ModelConfig model_config_from_json(const std::string& json);

std::string encode(const dpan::DclsModel& model, long iteration,
                   const std::string& extra_json = "{}");
Loaded decode(const std::string& bytes, const std::string& origin = "<bytes>");

/// Atomic write (temp file + rename).
void save(const std::filesystem::path& path, const dpan::DclsModel& model, long iteration,
          const std::string& extra_json = "{}");
Loaded load(const std::filesystem::path& path);

}  // namespace dcls::checkpoint
