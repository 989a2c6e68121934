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

#include "despec/workflows.hpp"

#include <fstream>

#include "despec/dichromatic.hpp"
#include "despec/image_io.hpp"

namespace despec {

ToneDatasetSummary run_tonefit(const std::filesystem::path& manifest_path, const ToneCorrectOptions& options) {
  Manifest m = load_manifest(manifest_path);
  ToneDatasetSummary summary = tonecorrect_dataset(m, options);
  save_manifest(m, manifest_path);
  return summary;
}

GroupToneResult tonefit_pair(const std::filesystem::path& ground_truth, const std::filesystem::path& input,
                             const std::filesystem::path& out, const ToneCorrectOptions& options) {
  auto [gt, in] = load_pair(ground_truth, input);
  require_channels(gt, 3, "ground truth");
  gt.set_range(Range::LDR);
  in.set_range(Range::LDR);
  const Image residue = residue_of(in, gt);
  GroupToneResult r = tonecorrect_group(in, gt, residue, options);
  if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
  save_image(r.tone_corrected, out);
  return r;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
  if (!f) throw IoError("write failed for " + path.string());
}

EvalReport run_eval(const std::filesystem::path& pred_dir, const std::filesystem::path& ground_truth,
                    const EvalOptions& options, const std::filesystem::path& out_csv) {
  EvalReport report = evaluate(pred_dir, ground_truth, options);
  write_text(out_csv, report.to_csv());
  return report;
}

EvalReport merge_reports(const std::vector<EvalReport>& reports) {
  EvalReport merged;
  for (const auto& r : reports) merged.rows.insert(merged.rows.end(), r.rows.begin(), r.rows.end());
  merged.recompute_aggregates();
  return merged;
}

Config demo_config(const DemoOptions& options) {
  if (options.steps < 1) throw UserError("demo needs at least one training step");
  if (options.groups < 2) throw UserError("demo needs at least two groups");
  Config cfg;
  cfg.synth.groups = options.groups;
  cfg.synth.width = options.size;
  cfg.synth.height = options.size;
  cfg.synth.seed = options.seed;
  cfg.train.seed = options.seed;
  cfg.train.batch = options.batch;
  cfg.train.lr = options.lr;
  cfg.train.lr_decay_epochs = 0;
  cfg.train.keep_every = 0;
  cfg.train.max_steps = options.steps;
  const int train_groups = train_count(options.groups, cfg.synth.split_fraction);
  const int steps_per_epoch = (train_groups + options.batch - 1) / options.batch;
  cfg.train.epochs = (options.steps + steps_per_epoch - 1) / steps_per_epoch;
  cfg.eval.target = EvalTarget::DiffuseTc;
  return cfg;
}

DemoResult run_demo(const DemoOptions& options, const LogFn& log) {
  auto say = [&](const std::string& s) {
    if (log) log(s);
  };
  const Config cfg = demo_config(options);
  DemoResult result;
  result.config_hash = config_hash(cfg);
  const auto& out = options.out;
  std::filesystem::create_directories(out);
  write_text(out / "config.ini", serialize_config(cfg));

  say("synth: " + std::to_string(cfg.synth.groups) + " groups at " + std::to_string(options.size) + "x" +
      std::to_string(options.size));
  generate_dataset(cfg.synth, out / "data");
  const auto manifest_path = out / "data" / "manifest.json";

  say("tonefit");
  const auto tone = run_tonefit(manifest_path, cfg.tone);
  say("tonefit: " + std::to_string(tone.processed) + " processed, " + std::to_string(tone.degenerate) +
      " degenerate, " + std::to_string(tone.failed) + " failed");

  say("train: " + std::to_string(options.steps) + " steps");
  const Manifest manifest = load_manifest(manifest_path);
  pipeline::TrainHooks hooks;
  hooks.on_epoch = [&](const pipeline::StepLoss& l, double) {
    if (l.epoch % 10 == 0 || l.step >= options.steps) {
      say("epoch " + std::to_string(l.epoch) + " step " + std::to_string(l.step) + " total " +
          std::to_string(l.total));
    }
  };
  hooks.on_warning = say;
  result.training =
      pipeline::train(manifest, cfg.train, out / "ckpt", {{"config_hash", result.config_hash}}, hooks);

  std::vector<EvalReport> tc_reports, diffuse_reports;
  for (auto variant : {pipeline::Variant::Full, pipeline::Variant::C}) {
    const std::string name = pipeline::to_string(variant);
    const auto pred = out / ("pred_" + name);
    say("remove: variant " + name);
    pipeline::remove_highlights(result.training.final_checkpoint, manifest_path, pred, variant, "test");
    EvalOptions eo;
    eo.variant = name;
    eo.split = "test";
    eo.target = EvalTarget::DiffuseTc;
    tc_reports.push_back(evaluate(pred, manifest_path, eo));
    eo.target = EvalTarget::Diffuse;
    diffuse_reports.push_back(evaluate(pred, manifest_path, eo));
  }
  result.report = merge_reports(tc_reports);
  result.report_diffuse = merge_reports(diffuse_reports);
  write_text(out / "report.csv", result.report.to_csv());
  write_text(out / "report_diffuse.csv", result.report_diffuse.to_csv());
  return result;
}

}  // namespace despec
