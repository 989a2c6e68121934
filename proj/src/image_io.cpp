//  Copyright 2026 The despec Authors
//
//  Licensed under the Apache License, Version 2.0 (the "License");
//  you may not use this file except in compliance with the License.
//  You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
//  Unless required by applicable law or agreed to in writing, software
//  distributed under the License is distributed on an "AS IS" BASIS,
//  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//  See the License for the specific language governing permissions and
//  limitations under the License.

#include "despec/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace despec {

namespace fs = std::filesystem;

namespace {

std::string lower_ext(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

float read_le_float(const unsigned char* p) {
  std::uint32_t bits = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                       (static_cast<std::uint32_t>(p[2]) << 16) |
                       (static_cast<std::uint32_t>(p[3]) << 24);
  return std::bit_cast<float>(bits);
}

void write_le_float(float v, unsigned char* p) {
  const auto bits = std::bit_cast<std::uint32_t>(v);
  p[0] = static_cast<unsigned char>(bits & 0xff);
  p[1] = static_cast<unsigned char>((bits >> 8) & 0xff);
  p[2] = static_cast<unsigned char>((bits >> 16) & 0xff);
  p[3] = static_cast<unsigned char>((bits >> 24) & 0xff);
}

}  // namespace

Image load_png(const fs::path& path) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    throw IoError("cannot decode PNG '" + path.string() + "': " + png.message);
  }
  if (png.format & PNG_FORMAT_FLAG_LINEAR) {
    png_image_free(&png);
    throw IoError("unsupported PNG bit depth in '" + path.string() + "' (expected 8-bit)");
  }
  const bool color = (png.format & PNG_FORMAT_FLAG_COLOR) != 0;
  png.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const int channels = color ? 3 : 1;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, buffer.data(), 0, nullptr)) {
    std::string msg = png.message;
    png_image_free(&png);
    throw IoError("cannot decode PNG '" + path.string() + "': " + msg);
  }
  Image img(static_cast<int>(png.height), static_cast<int>(png.width), channels, Range::LDR);
  auto dst = img.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<float>(buffer[i]) / 255.0f;
  return img;
}

void save_png(const Image& img, const fs::path& path) {
  if (img.empty()) throw IoError("cannot save empty image to '" + path.string() + "'");
  std::vector<png_byte> buffer(img.size());
  auto src = img.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const float v = std::clamp(src[i], 0.0f, 1.0f);
    buffer[i] = static_cast<png_byte>(std::lround(v * 255.0f));
  }
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(img.width());
  png.height = static_cast<png_uint_32>(img.height());
  png.format = img.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&png, path.c_str(), 0, buffer.data(), 0, nullptr)) {
    throw IoError("cannot write PNG '" + path.string() + "': " + png.message);
  }
}

Image load_pfm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string magic;
  int width = 0, height = 0;
  double scale_tag = 0.0;
  in >> magic >> width >> height >> scale_tag;
  if (!in || (magic != "PF" && magic != "Pf") || width <= 0 || height <= 0) {
    throw IoError("malformed PFM header in '" + path.string() + "'");
  }
  if (scale_tag >= 0.0) throw IoError("big-endian PFM not supported: '" + path.string() + "'");
  in.get();  // single whitespace after the scale line
  const int channels = magic == "PF" ? 3 : 1;
  const std::size_t count = static_cast<std::size_t>(width) * height * channels;
  std::vector<unsigned char> raw(count * 4);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
    throw IoError("truncated PFM data in '" + path.string() + "'");
  }
  Image img(height, width, channels, Range::HDR);
  const std::size_t row = static_cast<std::size_t>(width) * channels;
  for (int y = 0; y < height; ++y) {
    const unsigned char* src = raw.data() + static_cast<std::size_t>(height - 1 - y) * row * 4;
    float* dst = img.pixel(y, 0);
    for (std::size_t i = 0; i < row; ++i) dst[i] = read_le_float(src + i * 4);
  }
  return img;
}

void save_pfm(const Image& img, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << (img.channels() == 3 ? "PF" : "Pf") << "\n" << img.width() << " " << img.height() << "\n-1.0\n";
  const std::size_t row = static_cast<std::size_t>(img.width()) * img.channels();
  std::vector<unsigned char> raw(row * 4);
  for (int y = img.height() - 1; y >= 0; --y) {
    const float* src = img.pixel(y, 0);
    for (std::size_t i = 0; i < row; ++i) write_le_float(src[i], raw.data() + i * 4);
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

Image load_image(const fs::path& path) {
  const auto ext = lower_ext(path);
  if (ext == ".png") return load_png(path);
  if (ext == ".pfm") return load_pfm(path);
  throw IoError("unsupported image format: '" + path.string() + "'");
}

void save_image(const Image& img, const fs::path& path) {
  const auto ext = lower_ext(path);
  if (ext == ".png") return save_png(img, path);
  if (ext == ".pfm") return save_pfm(img, path);
  throw IoError("unsupported image format: '" + path.string() + "'");
}

std::pair<Image, Image> load_pair(const fs::path& a, const fs::path& b) {
  Image ia = load_image(a);
  Image ib = load_image(b);
  if (!ia.same_shape(ib)) {
    throw ShapeError("dimension mismatch between '" + a.string() + "' and '" + b.string() + "'");
  }
  return {std::move(ia), std::move(ib)};
}

}  // namespace despec
