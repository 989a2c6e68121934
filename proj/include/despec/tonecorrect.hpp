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

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>

#include "despec/image.hpp"
#include "despec/synthgen.hpp"

namespace despec {

inline constexpr int kOtsuBins = 256;

enum class ResidueIntensity { Max, Mean };

struct OtsuResult {
  Mask highlight;      // M_h = {r > threshold}
  Mask non_highlight;  // M_n, complement of M_h
  float threshold = 0.0f;
  int bin = -1;  // last bin assigned to the non-highlight class; -1 when degenerate
  bool degenerate = false;
};

// Bin k covers (k/256, (k+1)/256]; zero falls into bin 0.
int otsu_bin(float r);
float residue_intensity(const float* rgb, int channels, ResidueIntensity mode);

// Otsu split of per-pixel residue intensity. Ties resolve to the smallest
// maximizing bin.
OtsuResult otsu_mask(const Image& residue, ResidueIntensity mode = ResidueIntensity::Max);

using ToneMatrix = std::array<std::array<double, 4>, 3>;

/// Affine map (h,s,v,1) -> (h',s',v') fitted over the non-highlight region.
struct ToneTransform {
  ToneMatrix matrix{};
  double fit_error = 0.0;   // mean per-pixel squared residual over the fitted pixels
  std::size_t n_pixels_fit = 0;
  bool degenerate = false;  // fit impossible; matrix is the identity mapping

  static ToneTransform identity();
};

enum class ToneErrorSpace { HSV, RGB };

struct ToneFitOptions {
  double ridge = 1e-8;
  ToneErrorSpace space = ToneErrorSpace::HSV;
  bool exclude_saturated = false;  // drop pixels where the input clips
};

ToneTransform fit_tone_transform(const Image& diffuse_gt, const Image& input, const Mask& non_highlight,
                                 const ToneFitOptions& options = {});

// Per pixel: HSV, multiply by the matrix, wrap hue, clamp s and v, back to RGB.
Image apply_tone_transform(const Image& img, const ToneTransform& t);
void apply_tone_matrix(const ToneMatrix& m, float h, float s, float v, float& ho, float& so, float& vo);

// Mean per-pixel squared error of `matrix` over the mask, in the given space.
double tone_error(const Image& diffuse_gt, const Image& input, const Mask& mask, const ToneMatrix& matrix,
                  ToneErrorSpace space = ToneErrorSpace::HSV);

struct ToneCorrectOptions {
  ResidueIntensity intensity = ResidueIntensity::Max;
  ToneFitOptions fit;
};

struct GroupToneResult {
  OtsuResult otsu;
  ToneTransform transform;
  Image tone_corrected;
};

GroupToneResult tonecorrect_group(const Image& input, const Image& specular_free, const Image& residue,
                                  const ToneCorrectOptions& options = {});

struct ToneDatasetSummary {
  int processed = 0;
  int degenerate = 0;
  int failed = 0;
};

// Writes diffuse_tc.png for every group and records fit metadata in the
// manifest records. Per-group failures are recorded and skipped.
ToneDatasetSummary tonecorrect_dataset(Manifest& manifest, const ToneCorrectOptions& options = {});

}  // namespace despec
