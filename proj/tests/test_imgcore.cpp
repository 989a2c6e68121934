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

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <fstream>

#include "despec/image.hpp"
#include "despec/image_io.hpp"
#include "test_util.hpp"

using namespace despec;
using despec::testing::TempDir;
using despec::testing::random_image;

namespace {

// colorsys-style hexcone conversion, written independently of the library.
void hsv_oracle(double r, double g, double b, double& h, double& s, double& v) {
  const double maxc = std::max({r, g, b}), minc = std::min({r, g, b});
  v = maxc;
  if (maxc == minc) {
    h = 0.0;
    s = 0.0;
    return;
  }
  s = (maxc - minc) / maxc;
  const double rc = (maxc - r) / (maxc - minc);
  const double gc = (maxc - g) / (maxc - minc);
  const double bc = (maxc - b) / (maxc - minc);
  if (r == maxc) h = bc - gc;
  else if (g == maxc) h = 2.0 + rc - bc;
  else h = 4.0 + gc - rc;
  h = std::fmod(h / 6.0, 1.0);
  if (h < 0) h += 1.0;
}

}  // namespace

TEST(Image, ShapeAndFill) {
  Image img(4, 5, 3, Range::LDR, 0.25f);
  EXPECT_EQ(img.size(), 60u);
  EXPECT_EQ(img.pixel_count(), 20u);
  for (float v : img.data()) EXPECT_EQ(v, 0.25f);
  EXPECT_THROW(Image(2, 2, 2), ShapeError);
  EXPECT_THROW(Image(-1, 2, 3), ShapeError);
}

TEST(Image, RangeInvariant) {
  Image ldr(2, 2, 3, Range::LDR, 0.5f);
  EXPECT_TRUE(ldr.satisfies_range());
  ldr.at(0, 0, 0) = 1.1f;
  EXPECT_FALSE(ldr.satisfies_range());
  Image hdr(2, 2, 3, Range::HDR, 5.0f);
  EXPECT_TRUE(hdr.satisfies_range());
  hdr.at(1, 1, 2) = -0.1f;
  EXPECT_FALSE(hdr.satisfies_range());
}

TEST(Mask, CountAndComplement) {
  Mask m(3, 3);
  m.set(0, 0, true);
  m.set(2, 1, true);
  EXPECT_EQ(m.count(), 2u);
  const Mask c = m.complement();
  EXPECT_EQ(c.count(), 7u);
  EXPECT_FALSE(c.get(0, 0));
  EXPECT_TRUE(c.get(1, 1));
}

TEST(Color, NamedColors) {
  float h, s, v;
  rgb_to_hsv(1, 0, 0, h, s, v);
  EXPECT_FLOAT_EQ(h, 0.0f);
  EXPECT_FLOAT_EQ(s, 1.0f);
  EXPECT_FLOAT_EQ(v, 1.0f);
  rgb_to_hsv(0.5f, 0.5f, 0.5f, h, s, v);
  EXPECT_FLOAT_EQ(h, 0.0f);
  EXPECT_FLOAT_EQ(s, 0.0f);
  EXPECT_FLOAT_EQ(v, 0.5f);
  rgb_to_hsv(0, 1, 0, h, s, v);
  EXPECT_NEAR(h, 1.0 / 3.0, 1e-7);
  EXPECT_FLOAT_EQ(s, 1.0f);
  EXPECT_FLOAT_EQ(v, 1.0f);

  float r, g, b;
  hsv_to_rgb(0, 0, 0.5f, r, g, b);
  EXPECT_FLOAT_EQ(r, 0.5f);
  EXPECT_FLOAT_EQ(g, 0.5f);
  EXPECT_FLOAT_EQ(b, 0.5f);
  hsv_to_rgb(1.0f / 3.0f, 1, 1, r, g, b);
  EXPECT_NEAR(r, 0.0f, 1e-6);
  EXPECT_NEAR(g, 1.0f, 1e-6);
  EXPECT_NEAR(b, 0.0f, 1e-6);
}

TEST(Color, MatchesIndependentOracle) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (int i = 0; i < 2000; ++i) {
    const float r = u(rng), g = u(rng), b = u(rng);
    float h, s, v;
    rgb_to_hsv(r, g, b, h, s, v);
    double ho, so, vo;
    hsv_oracle(r, g, b, ho, so, vo);
    const double dh = std::min(std::abs(h - ho), 1.0 - std::abs(h - ho));
    EXPECT_LT(dh, 1e-6);
    EXPECT_NEAR(s, so, 1e-6);
    EXPECT_NEAR(v, vo, 1e-7);
  }
}

TEST(Color, RoundTripRandomPixels) {
  const Image rgb = random_image(10, 100, 3, 5);
  const Image back = hsv_to_rgb(rgb_to_hsv(rgb));
  EXPECT_LT(max_abs_diff(rgb, back), 1e-5f);
}

TEST(Color, HueWrapsModuloOne) {
  float r1, g1, b1, r2, g2, b2;
  hsv_to_rgb(0.2f, 0.7f, 0.8f, r1, g1, b1);
  hsv_to_rgb(1.2f, 0.7f, 0.8f, r2, g2, b2);
  EXPECT_NEAR(r1, r2, 1e-5);
  EXPECT_NEAR(g1, g2, 1e-5);
  EXPECT_NEAR(b1, b2, 1e-5);
}

TEST(Color, RejectsGray) {
  Image gray(2, 2, 1);
  EXPECT_THROW(rgb_to_hsv(gray), ShapeError);
}

TEST(Elementwise, Examples) {
  const Image a(3, 3, 3, Range::LDR, 0.5f), s(3, 3, 3, Range::LDR, 1.0f);
  {
    const Image out = mul(a, s);
    for (float v : out.data()) EXPECT_FLOAT_EQ(v, 0.5f);
  }
  const Image x = random_image(4, 4, 3, 2);
  {
    const Image out = sub(x, x);
    for (float v : out.data()) EXPECT_EQ(v, 0.0f);
  }
  Image big(1, 1, 3, Range::HDR, 1.3f);
  const Image c = clamp01(big);
  for (float v : c.data()) EXPECT_EQ(v, 1.0f);
  EXPECT_EQ(c.range(), Range::LDR);
  EXPECT_THROW(add(Image(2, 2, 3), Image(2, 3, 3)), ShapeError);
  {
    const Image out = scale(a, 2.0f);
    for (float v : out.data()) EXPECT_FLOAT_EQ(v, 1.0f);
  }
  {
    const Image out = add(a, 0.25f);
    for (float v : out.data()) EXPECT_FLOAT_EQ(v, 0.75f);
  }
}

TEST(Elementwise, FlipIsInvolution) {
  const Image x = random_image(5, 7, 3, 9);
  const Image f = flip_horizontal(x);
  EXPECT_EQ(f.at(2, 0, 1), x.at(2, 6, 1));
  EXPECT_EQ(max_abs_diff(flip_horizontal(f), x), 0.0f);
}

TEST(ImageIo, PfmRoundTripIsExact) {
  TempDir dir("io");
  const Image hdr = random_image(6, 9, 3, 3, 0.0f, 50.0f, Range::HDR);
  save_pfm(hdr, dir / "x.pfm");
  const Image back = load_pfm(dir / "x.pfm");
  ASSERT_TRUE(back.same_shape(hdr));
  EXPECT_EQ(back.range(), Range::HDR);
  for (std::size_t i = 0; i < hdr.size(); ++i) EXPECT_EQ(back.data()[i], hdr.data()[i]);

  const Image gray = random_image(3, 4, 1, 4, 0.0f, 2.0f, Range::HDR);
  save_pfm(gray, dir / "g.pfm");
  const Image gback = load_pfm(dir / "g.pfm");
  for (std::size_t i = 0; i < gray.size(); ++i) EXPECT_EQ(gback.data()[i], gray.data()[i]);
}

TEST(ImageIo, PfmHeaderLayout) {
  TempDir dir("io");
  Image img(2, 3, 3, Range::HDR);
  img.at(0, 0, 0) = 7.0f;  // top-left red
  save_pfm(img, dir / "h.pfm");
  const std::string bytes = despec::testing::read_file(dir / "h.pfm");
  const std::string header = "PF\n3 2\n-1.0\n";
  ASSERT_EQ(bytes.substr(0, header.size()), header);
  ASSERT_EQ(bytes.size(), header.size() + 2 * 3 * 3 * 4);
  // Bottom row is stored first, so the top-left pixel starts the second row.
  float first_of_top_row;
  std::memcpy(&first_of_top_row, bytes.data() + header.size() + 3 * 3 * 4, 4);
  EXPECT_EQ(first_of_top_row, 7.0f);
}

TEST(ImageIo, PngRoundTripWithinQuantization) {
  TempDir dir("io");
  const Image ldr = random_image(8, 11, 3, 6);
  save_png(ldr, dir / "x.png");
  const Image back = load_png(dir / "x.png");
  ASSERT_TRUE(back.same_shape(ldr));
  EXPECT_LE(max_abs_diff(ldr, back), 1.0f / 510.0f + 1e-7f);
  for (float v : back.data()) EXPECT_EQ(v, std::round(v * 255.0f) / 255.0f);
}

TEST(ImageIo, GrayPngRoundTrip) {
  TempDir dir("io");
  const Image g = random_image(5, 5, 1, 8);
  save_image(g, dir / "g.png");
  const Image back = load_image(dir / "g.png");
  EXPECT_EQ(back.channels(), 1);
  EXPECT_LE(max_abs_diff(g, back), 1.0f / 510.0f + 1e-7f);
}

TEST(ImageIo, TruncatedFilesRaiseErrors) {
  TempDir dir("io");
  save_png(random_image(16, 16, 3, 1), dir / "a.png");
  std::string bytes = despec::testing::read_file(dir / "a.png");
  {
    std::ofstream f(dir / "t.png", std::ios::binary);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
  }
  EXPECT_THROW(load_png(dir / "t.png"), IoError);

  save_pfm(random_image(4, 4, 3, 1, 0, 1, Range::HDR), dir / "a.pfm");
  bytes = despec::testing::read_file(dir / "a.pfm");
  {
    std::ofstream f(dir / "t.pfm", std::ios::binary);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 10));
  }
  EXPECT_THROW(load_pfm(dir / "t.pfm"), IoError);
  EXPECT_THROW(load_image(dir / "missing.png"), IoError);
  EXPECT_THROW(load_image(dir / "a.bmp"), IoError);
}

TEST(ImageIo, PairedLoadChecksShape) {
  TempDir dir("io");
  save_png(random_image(4, 4, 3, 1), dir / "a.png");
  save_png(random_image(4, 5, 3, 1), dir / "b.png");
  EXPECT_THROW(load_pair(dir / "a.png", dir / "b.png"), ShapeError);
  EXPECT_NO_THROW(load_pair(dir / "a.png", dir / "a.png"));
}
