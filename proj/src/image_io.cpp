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

#include "dcls/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <vector>

#include "dcls/common.hpp"
#include "dcls/file_util.hpp"

namespace dcls::image_io {

namespace {

constexpr char kFloatMagic[8] = {'D', 'C', 'L', 'S', 'I', 'M', 'G', '1'};

static_assert(std::endian::native == std::endian::little,
              "float image container assumes a little-endian host");

bool is_png(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::ranges::transform(ext, ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png";
}

}  // namespace

Image read_png(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  png_image png;
  std::memset(&png, 0, sizeof png);
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size()))
    throw IoError(detail::concat(path.string(), ": not a readable PNG (", png.message, ")"));
  const bool gray = (png.format & PNG_FORMAT_FLAG_COLOR) == 0;
  png.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  const int channels = gray ? 1 : 3;
  std::vector<unsigned char> buf(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&png);
    throw IoError(detail::concat(path.string(), ": PNG decode failed (", png.message, ")"));
  }
  const int h = static_cast<int>(png.height);
  const int w = static_cast<int>(png.width);
  Image img(channels, h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < channels; ++c)
        img.at(c, y, x) = buf[(static_cast<std::size_t>(y) * w + x) * channels + c] / 255.0;
  return img;
}

void write_png(const std::filesystem::path& path, const Image& img) {
  require(img.channels() == 1 || img.channels() == 3, "PNG export needs 1 or 3 channels, got ",
          img.channels());
  const int channels = img.channels();
  std::vector<unsigned char> buf(img.size());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < channels; ++c) {
        const double v = std::clamp(img.at(c, y, x), 0.0, 1.0);
        buf[(static_cast<std::size_t>(y) * img.width() + x) * channels + c] =
            static_cast<unsigned char>(std::lround(v * 255.0));
      }
  png_image png;
  std::memset(&png, 0, sizeof png);
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(img.width());
  png.height = static_cast<png_uint_32>(img.height());
  png.format = channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, buf.data(), 0, nullptr))
    throw IoError(detail::concat(path.string(), ": PNG encode failed (", png.message, ")"));
  std::string out(size, '\0');
  if (!png_image_write_to_memory(&png, out.data(), &size, 0, buf.data(), 0, nullptr))
    throw IoError(detail::concat(path.string(), ": PNG encode failed (", png.message, ")"));
  out.resize(size);
  write_file_atomic(path, out);
}

std::string encode_float(const Image& img) {
  std::string out(8 + 12 + 8 * img.size(), '\0');
  std::memcpy(out.data(), kFloatMagic, 8);
  const std::uint32_t dims[3] = {static_cast<std::uint32_t>(img.channels()),
                                 static_cast<std::uint32_t>(img.height()),
                                 static_cast<std::uint32_t>(img.width())};
  std::memcpy(out.data() + 8, dims, 12);
  std::memcpy(out.data() + 20, img.data().data(), 8 * img.size());
  return out;
}

Image decode_float(const std::string& bytes) {
  if (bytes.size() < 20 || std::memcmp(bytes.data(), kFloatMagic, 8) != 0)
    throw InvalidArgument("float image must start with magic 'DCLSIMG1'");
  std::uint32_t dims[3];
  std::memcpy(dims, bytes.data() + 8, 12);
  const std::size_t n = static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  require(n > 0 && bytes.size() == 20 + 8 * n, "float image payload size mismatch");
  Image img(static_cast<int>(dims[0]), static_cast<int>(dims[1]), static_cast<int>(dims[2]));
  std::memcpy(img.data().data(), bytes.data() + 20, 8 * n);
  return img;
}

Image read_image(const std::filesystem::path& path) {
  if (is_png(path)) return read_png(path);
  try {
    return decode_float(read_file(path));
  } catch (const InvalidArgument& e) {
    throw IoError(detail::concat(path.string(), ": ", e.what()));
  }
}

void write_image(const std::filesystem::path& path, const Image& img) {
  if (is_png(path)) {
    write_png(path, img);
    return;
  }
  write_file_atomic(path, encode_float(img));
}

}  // namespace dcls::image_io
