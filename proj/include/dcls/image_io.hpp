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
#include <string>

#include "dcls/image.hpp"

// Image persistence.
//
//   PNG    8-bit gray or RGB. Reading drops alpha and expands palettes;
//          writing clamps to [0, 1] and rounds to the nearest code.
//   DCLI   lossless float container: magic "DCLSIMG1", then uint32 LE
//          channels, height, width, then float64 LE samples, planar.
//
// read_image/write_image dispatch on the ".png" extension; anything else is
// treated as a DCLI container.
namespace dcls::image_io {

Image read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image& img);

std::string encode_float(const Image& img);
Image decode_float(const std::string& bytes);

Image read_image(const std::filesystem::path& path);
void write_image(const std::filesystem::path& path, const Image& img);

}  // namespace dcls::image_io
