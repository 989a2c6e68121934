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
#include <string>

#include "despec/config.hpp"
#include "despec/metrics.hpp"
#include "despec/pipeline/infer.hpp"
#include "despec/pipeline/train.hpp"
#include "despec/synthgen.hpp"
#include "despec/tonecorrect.hpp"

namespace despec {

inline constexpr const char* kVersion = "0.3.0";

using LogFn = std::function<void(const std::string&)>;

/// Tone-corrects every group of a manifest in place and rewrites it.
ToneDatasetSummary run_tonefit(const std::filesystem::path& manifest_path, const ToneCorrectOptions& options);

/// Single-pair tone correction: maps the specular-free `ground_truth` onto
/// the tone of `input` and writes the result to `out`.
GroupToneResult tonefit_pair(const std::filesystem::path& ground_truth, const std::filesystem::path& input,
                             const std::filesystem::path& out, const ToneCorrectOptions& options);

/// Writes the CSV report; returns the report.
EvalReport run_eval(const std::filesystem::path& pred_dir, const std::filesystem::path& ground_truth,
                    const EvalOptions& options, const std::filesystem::path& out_csv);

/// Concatenates rows of several reports and recomputes aggregates.
EvalReport merge_reports(const std::vector<EvalReport>& reports);

void write_text(const std::filesystem::path& path, const std::string& text);

struct DemoOptions {
  std::filesystem::path out;
  std::uint64_t seed = 7;
  int steps = 200;
  int groups = 20;
  int size = 64;
  int batch = 4;
  double lr = 2e-3;
};

/// Config used by the demo for the given options.
Config demo_config(const DemoOptions& options);

struct DemoResult {
  EvalReport report;          // full and C against the tone-corrected targets
  EvalReport report_diffuse;  // full and C against the specular-free targets
  pipeline::TrainReport training;
  std::string config_hash;
};

/// synth -> tonefit -> train -> remove (full and C) -> eval, all below
/// `options.out`:
///   data/         dataset and manifest.json
///   ckpt/         checkpoints and loss.csv
///   pred_full/, pred_C/
///   config.ini, report.csv, report_diffuse.csv
DemoResult run_demo(const DemoOptions& options, const LogFn& log = {});

}  // namespace despec
