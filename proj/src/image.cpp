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

#include "despec/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace despec {

Image::Image(int height, int width, int channels, Range range, float fill)
    : height_(height), width_(width), channels_(channels), range_(range) {
  if (height < 0 || width < 0) throw ShapeError("image dimensions must be nonnegative");
  if (channels != 1 && channels != 3) throw ShapeError("image must have 1 or 3 channels");
  data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
}

bool Image::satisfies_range(float tol) const {
  for (float v : data_) {
    if (!std::isfinite(v) || v < -tol) return false;
    if (range_ == Range::LDR && v > 1.0f + tol) return false;
  }
  return true;
}

Mask::Mask(int height, int width, bool fill)
    : height_(height), width_(width), data_(static_cast<std::size_t>(height) * width, fill ? 1 : 0) {}

std::size_t Mask::count() const {
  return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), 1));
}

Mask Mask::complement() const {
  Mask out = *this;
  for (auto& v : out.data_) v = v ? 0 : 1;
  return out;
}

void require_same_shape(const Image& a, const Image& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(what) + ": shape mismatch (" + std::to_string(a.height()) + "x" +
                     std::to_string(a.width()) + "x" + std::to_string(a.channels()) + " vs " +
                     std::to_string(b.height()) + "x" + std::to_string(b.width()) + "x" +
                     std::to_string(b.channels()) + ")");
  }
}

void require_channels(const Image& img, int channels, const char* what) {
  if (img.channels() != channels) {
    throw ShapeError(std::string(what) + ": expected " + std::to_string(channels) +
                     " channels, got " + std::to_string(img.channels()));
  }
}

namespace {

Range combined(const Image& a, const Image& b) {
  return (a.range() == Range::HDR || b.range() == Range::HDR) ? Range::HDR : Range::LDR;
}

template <typename F>
Image binary(const Image& a, const Image& b, const char* what, F f) {
  require_same_shape(a, b, what);
  Image out(a.height(), a.width(), a.channels(), combined(a, b));
  auto pa = a.data();
  auto pb = b.data();
  auto po = out.data();
  for (std::size_t i = 0; i < po.size(); ++i) po[i] = f(pa[i], pb[i]);
  return out;
}

template <typename F>
Image unary(const Image& a, Range range, F f) {
  Image out(a.height(), a.width(), a.channels(), range);
  auto pa = a.data();
  auto po = out.data();
  for (std::size_t i = 0; i < po.size(); ++i) po[i] = f(pa[i]);
  return out;
}

}  // namespace

Image add(const Image& a, const Image& b) {
  return binary(a, b, "add", [](float x, float y) { return x + y; });
}
Image sub(const Image& a, const Image& b) {
  return binary(a, b, "sub", [](float x, float y) { return x - y; });
}
Image mul(const Image& a, const Image& b) {
  return binary(a, b, "mul", [](float x, float y) { return x * y; });
}
Image scale(const Image& a, float s) {
  return unary(a, a.range(), [s](float x) { return x * s; });
}
Image add(const Image& a, float s) {
  return unary(a, a.range(), [s](float x) { return x + s; });
}
Image clamp01(const Image& a) {
  return unary(a, Range::LDR, [](float x) { return std::clamp(x, 0.0f, 1.0f); });
}
Image clamp_min0(const Image& a) {
  return unary(a, a.range(), [](float x) { return std::max(x, 0.0f); });
}

Image flip_horizontal(const Image& a) {
  Image out(a.height(), a.width(), a.channels(), a.range());
  const int c = a.channels();
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      const float* src = a.pixel(y, a.width() - 1 - x);
      std::copy(src, src + c, out.pixel(y, x));
    }
  }
  return out;
}

float max_abs_diff(const Image& a, const Image& b) {
  require_same_shape(a, b, "max_abs_diff");
  float m = 0.0f;
  auto pa = a.data();
  auto pb = b.data();
  for (std::size_t i = 0; i < pa.size(); ++i) m = std::max(m, std::abs(pa[i] - pb[i]));
  return m;
}

}  // namespace despec
