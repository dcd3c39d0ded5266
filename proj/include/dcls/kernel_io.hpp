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

#include "dcls/kernel.hpp"

// Kernel files come in two flavours:
//
//   text    "DCLSK1 <size>\n" followed by <size> rows of <size> space-separated
//           decimals written with 17 significant digits (exact for doubles).
//   binary  4-byte magic "DCKB", uint32 little-endian size, then size*size
//           little-endian float32 weights, row-major.
//
// Readers detect the flavour from the leading magic; writers pick binary when
// the path ends in ".bin" and text otherwise.
namespace dcls::kernel_io {

std::string to_text(const BlurKernel& k);
BlurKernel from_text(const std::string& text);

std::string to_binary(const BlurKernel& k);
BlurKernel from_binary(const std::string& bytes);

BlurKernel read(const std::filesystem::path& path);
void write(const std::filesystem::path& path, const BlurKernel& k);

}  // namespace dcls::kernel_io
