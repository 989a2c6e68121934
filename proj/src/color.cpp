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

#include <algorithm>
#include <cmath>

#include "despec/image.hpp"

namespace despec {

void rgb_to_hsv(float r, float g, float b, float& h, float& s, float& v) {
  const double dr = r, dg = g, db = b;
  const double mx = std::max({dr, dg, db});
  const double mn = std::min({dr, dg, db});
  const double delta = mx - mn;
  v = static_cast<float>(mx);
  s = mx > 0.0 ? static_cast<float>(delta / mx) : 0.0f;
  if (delta <= 0.0) {
    h = 0.0f;
    return;
  }
  double hh;
  if (mx == dr) {
    hh = (dg - db) / delta;
    if (hh < 0.0) hh += 6.0;
  } else if (mx == dg) {
    hh = (db - dr) / delta + 2.0;
  } else {
    hh = (dr - dg) / delta + 4.0;
  }
  hh /= 6.0;
  if (hh >= 1.0) hh -= 1.0;
  h = static_cast<float>(hh);
  if (h >= 1.0f) h = 0.0f;
}

void hsv_to_rgb(float h, float s, float v, float& r, float& g, float& b) {
  double hh = static_cast<double>(h) - std::floor(static_cast<double>(h));
  const double ss = std::clamp(static_cast<double>(s), 0.0, 1.0);
  const double vv = std::clamp(static_cast<double>(v), 0.0, 1.0);
  const double h6 = hh * 6.0;
  int sector = static_cast<int>(std::floor(h6));
  const double f = h6 - sector;
  if (sector >= 6) sector = 0;
  const double p = vv * (1.0 - ss);
  const double q = vv * (1.0 - ss * f);
  const double t = vv * (1.0 - ss * (1.0 - f));
  double rr, gg, bb;
  switch (sector) {
    case 0: rr = vv; gg = t; bb = p; break;
    case 1: rr = q; gg = vv; bb = p; break;
    case 2: rr = p; gg = vv; bb = t; break;
    case 3: rr = p; gg = q; bb = vv; break;
    case 4: rr = t; gg = p; bb = vv; break;
    default: rr = vv; gg = p; bb = q; break;
  }
  r = static_cast<float>(rr);
  g = static_cast<float>(gg);
  b = static_cast<float>(bb);
}

Image rgb_to_hsv(const Image& rgb) {
  require_channels(rgb, 3, "rgb_to_hsv");
  Image out(rgb.height(), rgb.width(), 3, Range::LDR);
  auto src = rgb.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); i += 3) {
    rgb_to_hsv(src[i], src[i + 1], src[i + 2], dst[i], dst[i + 1], dst[i + 2]);
  }
  return out;
}

Image hsv_to_rgb(const Image& hsv) {
  require_channels(hsv, 3, "hsv_to_rgb");
  Image out(hsv.height(), hsv.width(), 3, Range::LDR);
  auto src = hsv.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); i += 3) {
    hsv_to_rgb(src[i], src[i + 1], src[i + 2], dst[i], dst[i + 1], dst[i + 2]);
  }
  return out;
}

}  // namespace despec
