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

#include "despec/dichromatic.hpp"

#include <algorithm>
#include <string>

namespace despec {

Image compose(const IntrinsicSet& set) {
  require_same_shape(set.albedo, set.shading, "compose");
  require_same_shape(set.albedo, set.residue, "compose");
  if (set.shading.range() != set.residue.range()) {
    throw ShapeError("compose: shading and residue carry different range tags");
  }
  Image out = add(mul(set.albedo, set.shading), set.residue);
  out.set_range(set.shading.range());
  if (out.range() == Range::LDR) return clamp01(out);
  return out;
}

Image diffuse_of(const Image& albedo, const Image& shading) {
  require_same_shape(albedo, shading, "diffuse_of");
  Image d = mul(albedo, shading);
  d.set_range(shading.range());
  return d;
}

Image residue_of(const Image& input, const Image& diffuse, ResidueMode mode) {
  require_same_shape(input, diffuse, "residue_of");
  Image r = sub(input, diffuse);
  r.set_range(input.range());
  if (input.range() == Range::LDR && mode == ResidueMode::Clamped) return clamp_min0(r);
  return r;
}

Image highlight_edit(const Image& diffuse, const Image& residue, float alpha) {
  if (!(alpha >= 0.0f)) throw UserError("highlight_edit: alpha must be >= 0, got " + std::to_string(alpha));
  require_same_shape(diffuse, residue, "highlight_edit");
  Image out(diffuse.height(), diffuse.width(), diffuse.channels(), Range::LDR);
  auto d = diffuse.data();
  auto r = residue.data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = std::clamp(d[i] + alpha * r[i], 0.0f, 1.0f);
  return out;
}

}  // namespace despec
