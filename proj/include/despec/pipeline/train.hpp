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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "despec/pipeline/pipeline.hpp"
#include "despec/synthgen.hpp"

namespace despec::pipeline {

struct TrainConfig {
  LossWeights weights;
  double lr = 1e-4;
  int lr_decay_epochs = 10;  // divide lr by 10 every this many epochs; 0 disables
  int epochs = 30;
  int batch = 4;
  int max_steps = 0;  // 0: run all epochs
  std::uint64_t seed = 1;
  bool flip = true;
  bool highlight_edit = true;
  double alpha_min = 0.5;
  double alpha_max = 1.5;
  Stage1Mode mode = Stage1Mode::Intrinsic;
  ResidueSource residue = ResidueSource::Stage1;
  Variant variant = Variant::Full;
  int base_width = 16;
  int keep_every = 10;  // keep a numbered checkpoint every this many epochs; 0 disables
  bool parallel_loading = false;

  void validate() const;
  // lr, batch and epochs as used for the published model.
  void apply_published_defaults();
};

struct StepLoss {
  int step = 0;
  int epoch = 0;
  double pshr = 0.0;
  double sr = 0.0;
  double tc = 0.0;
  double total = 0.0;
};

struct TrainReport {
  std::vector<StepLoss> steps;
  std::vector<StepLoss> epochs;  // per-epoch means; `step` holds the last step of the epoch
  int skipped_batches = 0;
  std::filesystem::path final_checkpoint;
};

struct TrainHooks {
  std::function<void(const StepLoss&)> on_step;
  std::function<void(const StepLoss&, double lr)> on_epoch;
  std::function<void(const std::string&)> on_warning;
};

/// Joint end-to-end training over the train split of a manifest. Writes
/// `latest.ckpt` after every epoch, `epoch_NNNN.ckpt` every `keep_every`
/// epochs, `final.ckpt` at the end and `loss.csv` with per-epoch means.
TrainReport train(const Manifest& manifest, const TrainConfig& config, const std::filesystem::path& out_dir,
                  const std::map<std::string, std::string>& checkpoint_metadata = {}, const TrainHooks& hooks = {});

/// One training sample; all images LDR RGB of equal size.
struct Sample {
  Image input, albedo, shading, residue, diffuse, diffuse_tc;
};

Sample load_sample(const Manifest& manifest, const ManifestRecord& record, bool need_tone_corrected);

struct AugmentParams {
  bool flip = false;
  bool edit = false;
  float alpha = 1.0f;
};

// Flip applies to every image; the edit regenerates the input as
// clamp01(D + alpha R) and scales the residue target to clamp01(alpha R).
void augment(Sample& s, const AugmentParams& p);

BatchTargets<float> make_batch(const std::vector<Sample>& samples);

}  // namespace despec::pipeline
