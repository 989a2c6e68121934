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

#include <filesystem>
#include <string>
#include <vector>

#include "despec/image.hpp"
#include "despec/pipeline/pipeline.hpp"

namespace despec::pipeline {

struct InferOutputs {
  Image d1;
  Image residue;
  Image d2;  // empty for variants without refinement
  Image d3;  // empty for variants without tone correction
  Image final;
};

/// Runs one LDR RGB image of any size through the pipeline; sizes that are
/// not multiples of 4 are mirror-padded and the outputs cropped back.
InferOutputs infer_image(const Pipeline<float>& model, const Image& input, Variant variant);

struct RemoveSummary {
  int images = 0;
  std::vector<std::filesystem::path> written;
};

/// `input` is a PNG, a directory of PNGs, or a manifest.json (only records
/// of `split` are processed; "all" selects every record). The full variant
/// writes <stem>_d1.png, <stem>_r.png, <stem>_d2.png and <stem>.png (D3);
/// the other variants write only <stem>.png.
RemoveSummary remove_highlights(const std::filesystem::path& checkpoint, const std::filesystem::path& input,
                                const std::filesystem::path& out_dir, Variant variant,
                                const std::string& split = "test");

}  // namespace despec::pipeline
