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

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "despec/error.hpp"

namespace despec {

enum class Range { LDR, HDR };

/// Row-major interleaved float raster (y, x, channel). LDR images live in
/// [0,1], HDR images in [0,inf).
class Image {
 public:
  Image() = default;
  Image(int height, int width, int channels, Range range = Range::LDR, float fill = 0.0f);

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  Range range() const { return range_; }
  void set_range(Range r) { range_ = r; }
  bool empty() const { return data_.empty(); }
  std::size_t size() const { return data_.size(); }
  std::size_t pixel_count() const { return static_cast<std::size_t>(height_) * width_; }

  float& at(int y, int x, int c) { return data_[index(y, x, c)]; }
  float at(int y, int x, int c) const { return data_[index(y, x, c)]; }
  float* pixel(int y, int x) { return data_.data() + index(y, x, 0); }
  const float* pixel(int y, int x) const { return data_.data() + index(y, x, 0); }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }

  bool same_shape(const Image& other) const {
    return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
  }

  // Checks the range invariant: LDR in [0,1] (within tol), HDR nonnegative.
  bool satisfies_range(float tol = 1e-6f) const;

 private:
  std::size_t index(int y, int x, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  Range range_ = Range::LDR;
  std::vector<float> data_;
};

/// Per-pixel boolean partition of an image.
class Mask {
 public:
  Mask() = default;
  Mask(int height, int width, bool fill = false);

  int height() const { return height_; }
  int width() const { return width_; }
  bool get(int y, int x) const { return data_[static_cast<std::size_t>(y) * width_ + x] != 0; }
  void set(int y, int x, bool v) { data_[static_cast<std::size_t>(y) * width_ + x] = v ? 1 : 0; }
  std::size_t count() const;
  Mask complement() const;
  std::span<const unsigned char> data() const { return data_; }

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<unsigned char> data_;
};

void require_same_shape(const Image& a, const Image& b, const char* what);
void require_channels(const Image& img, int channels, const char* what);

// Hexcone HSV with every component in [0,1]; hue = degrees / 360, and
// achromatic pixels get hue 0.
void rgb_to_hsv(float r, float g, float b, float& h, float& s, float& v);
void hsv_to_rgb(float h, float s, float v, float& r, float& g, float& b);
Image rgb_to_hsv(const Image& rgb);
Image hsv_to_rgb(const Image& hsv);

Image add(const Image& a, const Image& b);
Image sub(const Image& a, const Image& b);
Image mul(const Image& a, const Image& b);
Image scale(const Image& a, float s);
Image add(const Image& a, float s);
Image clamp01(const Image& a);
Image clamp_min0(const Image& a);
Image flip_horizontal(const Image& a);

float max_abs_diff(const Image& a, const Image& b);

}  // namespace despec
