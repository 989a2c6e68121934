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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "despec/image.hpp"

namespace despec {

inline constexpr double kPsnrCap = 99.0;

// 10 log10(1 / MSE) with peak 1, capped at 99 dB.
double psnr(const Image& a, const Image& b);

// Gaussian-window SSIM (11x11, sigma 1.5, K1 0.01, K2 0.03, peak 1) averaged
// over valid window centers and then over channels.
double ssim(const Image& a, const Image& b);

// Serial single-threaded SSIM used to cross-check the parallel version.
double ssim_reference(const Image& a, const Image& b);

// Sum over channels of the L1 distance between per-channel normalized
// histograms of the masked pixels. Range [0, 2 * channels].
double histogram_l1(const Image& a, const Image& b, const Mask& mask, int bins = 64);

struct EvalRow {
  std::string id;
  std::string variant;
  std::optional<double> psnr;
  std::optional<double> ssim;
  bool missing = false;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  struct Aggregate {
    double psnr = 0.0;
    double ssim = 0.0;
    int count = 0;
  };
  std::map<std::string, Aggregate> aggregates;  // per variant

  bool has_missing() const;
  void recompute_aggregates();
  std::string to_csv() const;
};

enum class EvalTarget { Diffuse, DiffuseTc };
EvalTarget parse_eval_target(const std::string& s);
const char* target_image_name(EvalTarget t);

struct EvalOptions {
  EvalTarget target = EvalTarget::DiffuseTc;
  std::string variant = "full";
  std::string split = "test";  // manifest split to evaluate ("all" for every record)
};

// `ground_truth` is a manifest.json or a directory of <stem>.png files;
// predictions are `<pred_dir>/<id>.png`.
EvalReport evaluate(const std::filesystem::path& pred_dir, const std::filesystem::path& ground_truth,
                    const EvalOptions& options);

}  // namespace despec
