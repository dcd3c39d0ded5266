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

#include "dcls/kernel_io.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "dcls/common.hpp"
#include "dcls/file_util.hpp"

namespace dcls::kernel_io {

namespace {

constexpr char kTextMagic[] = "DCLSK1";
constexpr char kBinaryMagic[4] = {'D', 'C', 'K', 'B'};

static_assert(std::endian::native == std::endian::little,
              "binary kernel format assumes a little-endian host");

}  // namespace

std::string to_text(const BlurKernel& k) {
  std::string out = detail::concat(kTextMagic, " ", k.size(), "\n");
  char buf[40];
  for (int r = 0; r < k.size(); ++r) {
    for (int c = 0; c < k.size(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", k(r, c));
      if (c) out += ' ';
      out += buf;
    }
    out += '\n';
  }
  return out;
}

BlurKernel from_text(const std::string& text) {
  std::istringstream in(text);
  std::string magic;
  int size = 0;
  if (!(in >> magic >> size) || magic != kTextMagic)
    throw InvalidArgument("kernel text must start with 'DCLSK1 <size>'");
  require(size >= 1 && size % 2 == 1, "kernel size in header must be odd, got ", size);
  std::vector<double> w(static_cast<std::size_t>(size) * size);
  for (double& v : w)
    if (!(in >> v)) throw InvalidArgument("kernel text truncated: expected size*size values");
  std::string extra;
  if (in >> extra) throw InvalidArgument("trailing data after kernel weights");
  return BlurKernel(size, std::move(w));
}

std::string to_binary(const BlurKernel& k) {
  std::string out(8 + 4 * k.weights().size(), '\0');
  std::memcpy(out.data(), kBinaryMagic, 4);
  const auto size = static_cast<std::uint32_t>(k.size());
  std::memcpy(out.data() + 4, &size, 4);
  char* p = out.data() + 8;
  for (double w : k.weights()) {
    const auto f = static_cast<float>(w);
    std::memcpy(p, &f, 4);
    p += 4;
  }
  return out;
}

BlurKernel from_binary(const std::string& bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kBinaryMagic, 4) != 0)
    throw InvalidArgument("binary kernel must start with magic 'DCKB'");
  std::uint32_t size = 0;
  std::memcpy(&size, bytes.data() + 4, 4);
  require(size >= 1 && size % 2 == 1 && size < 4096, "bad binary kernel size ", size);
  const std::size_t n = static_cast<std::size_t>(size) * size;
  require(bytes.size() == 8 + 4 * n, "binary kernel payload is ", bytes.size() - 8,
          " bytes, expected ", 4 * n);
  std::vector<double> w(n);
  const char* p = bytes.data() + 8;
  for (double& v : w) {
    float f;
    std::memcpy(&f, p, 4);
    v = f;
    p += 4;
  }
  return BlurKernel(static_cast<int>(size), std::move(w));
}

BlurKernel read(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  try {
    if (bytes.rfind(kTextMagic, 0) == 0) return from_text(bytes);
    return from_binary(bytes);
  } catch (const InvalidArgument& e) {
    throw IoError(detail::concat(path.string(), ": ", e.what()));
  }
}

void write(const std::filesystem::path& path, const BlurKernel& k) {
  write_file_atomic(path, path.extension() == ".bin" ? to_binary(k) : to_text(k));
}

}  // namespace dcls::kernel_io
