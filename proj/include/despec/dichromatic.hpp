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

#include "despec/image.hpp"

namespace despec {

/// Albedo, colored shading and specular residue of one view. All three
/// share a shape and a range tag.
struct IntrinsicSet {
  Image albedo;
  Image shading;
  Image residue;
};

enum class ResidueMode {
  Clamped,  // R = max(I - D, 0) in LDR
  Signed,   // R = I - D, no clamping
};

// I = A*S + R. LDR results are clamped to [0,1].
Image compose(const IntrinsicSet& set);

// D = A*S.
Image diffuse_of(const Image& albedo, const Image& shading);

// R = I - D. In LDR the result is clamped below at 0 unless mode is Signed.
Image residue_of(const Image& input, const Image& diffuse, ResidueMode mode = ResidueMode::Clamped);

// clamp01(D + alpha R): alpha < 1 attenuates the highlight, alpha > 1 boosts it.
Image highlight_edit(const Image& diffuse, const Image& residue, float alpha);

}  // namespace despec
