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

#include <omp.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "despec/config.hpp"
#include "despec/error.hpp"
#include "despec/workflows.hpp"

namespace {

using despec::Config;

struct RunInfo {
  std::string command;
  std::string hash;
  std::uint64_t seed = 0;
};

class RunLog {
 public:
  explicit RunLog(RunInfo info) : info_(std::move(info)), start_(std::chrono::steady_clock::now()) {
    spdlog::info("despec {} {} | config {} | seed {} | threads {}", despec::kVersion, info_.command, info_.hash,
                 info_.seed, omp_get_max_threads());
  }
  ~RunLog() {
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    spdlog::info("{} finished in {:.2f} s wall time", info_.command, secs);
  }

 private:
  RunInfo info_;
  std::chrono::steady_clock::time_point start_;
};

void apply_thread_limit() {
  const char* env = std::getenv("DESPEC_THREADS");
  if (!env || !*env) return;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 1) throw despec::UserError(std::string("DESPEC_THREADS must be a positive integer, got '") + env + "'");
  omp_set_num_threads(static_cast<int>(n));
}

Config base_config(const std::string& path) { return path.empty() ? Config{} : despec::load_config(path); }

}  // namespace

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_color_mt("despec");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%H:%M:%S] %^%l%$ %v");

  CLI::App app{"despec: synthetic dataset generation, tone correction, training and evaluation for "
               "three-stage specular highlight removal"};
  app.set_version_flag("--version", despec::kVersion);
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Render a synthetic dataset and its manifest");
  std::string synth_out, synth_config;
  std::optional<int> synth_groups, synth_size;
  std::optional<std::uint64_t> synth_seed;
  std::string envmap, mesh, texture;
  synth->add_option("--out", synth_out, "Output dataset directory")->required();
  synth->add_option("--config", synth_config, "INI config file ([synth] section)")->check(CLI::ExistingFile);
  synth->add_option("--groups", synth_groups, "Number of image groups")->check(CLI::PositiveNumber);
  synth->add_option("--size", synth_size, "Image width and height in pixels")->check(CLI::PositiveNumber);
  synth->add_option("--seed", synth_seed, "Master seed");
  synth->add_option("--envmap", envmap, "Lat-long environment map (PFM or PNG)")->check(CLI::ExistingFile);
  synth->add_option("--mesh", mesh, "OBJ mesh used for mesh objects")->check(CLI::ExistingFile);
  synth->add_option("--texture", texture, "Albedo texture (PNG)")->check(CLI::ExistingFile);

  // tonefit
  auto* tonefit = app.add_subcommand("tonefit", "Fit HSV tone transforms and write tone-corrected targets");
  std::string tone_manifest, tone_config, tone_out, error_space;
  std::vector<std::string> tone_pair;
  auto* tm_opt = tonefit->add_option("--manifest", tone_manifest, "Dataset manifest.json (updated in place)")
                     ->check(CLI::ExistingFile);
  auto* pair_opt = tonefit->add_option("--pair", tone_pair, "Specular-free image and input image")->expected(2);
  tonefit->add_option("--out", tone_out, "Output image for --pair");
  tonefit->add_option("--config", tone_config, "INI config file ([tone] section)")->check(CLI::ExistingFile);
  tonefit->add_option("--error-space", error_space, "Fitting error space")->check(CLI::IsMember({"hsv", "rgb"}));
  bool exclude_saturated = false;
  tonefit->add_flag("--exclude-saturated", exclude_saturated, "Leave clipped input pixels out of the fit");
  tm_opt->excludes(pair_opt);

  // train
  auto* train = app.add_subcommand("train", "Train the removal pipeline");
  std::string train_manifest, train_config, train_out, stage1_mode, residue_source, train_variant;
  bool published_defaults = false, parallel_loading = false;
  std::optional<int> train_steps, train_epochs, train_batch;
  std::optional<double> train_lr;
  std::optional<std::uint64_t> train_seed;
  train->add_option("--manifest", train_manifest, "Dataset manifest.json")->required()->check(CLI::ExistingFile);
  train->add_option("--config", train_config, "INI config file ([train] section)")->check(CLI::ExistingFile);
  train->add_option("--out", train_out, "Checkpoint directory")->required();
  train->add_flag("--paper-defaults", published_defaults, "Use lr 1e-4, batch 16, 60 epochs");
  train->add_option("--stage1-mode", stage1_mode, "Stage-1 heads")->check(CLI::IsMember({"intrinsic", "direct"}));
  train->add_option("--residue-source", residue_source, "Residue fed to stage 3")
      ->check(CLI::IsMember({"stage1", "stage2"}));
  train->add_option("--variant", train_variant, "Networks to train")->check(CLI::IsMember({"full", "A", "B", "C"}));
  train->add_option("--steps", train_steps, "Stop after this many optimizer steps")->check(CLI::PositiveNumber);
  train->add_option("--epochs", train_epochs, "Number of epochs")->check(CLI::PositiveNumber);
  train->add_option("--batch", train_batch, "Batch size")->check(CLI::PositiveNumber);
  train->add_option("--lr", train_lr, "Initial learning rate");
  train->add_option("--seed", train_seed, "Training seed");
  train->add_flag("--parallel-loading", parallel_loading, "Decode and augment batch samples in parallel");

  // remove
  auto* remove = app.add_subcommand("remove", "Remove highlights with a trained checkpoint");
  std::string ckpt, remove_in, remove_out, remove_variant = "full", remove_split = "test";
  remove->add_option("--ckpt", ckpt, "Checkpoint file")->required()->check(CLI::ExistingFile);
  remove->add_option("--in", remove_in, "PNG file, directory of PNGs, or manifest.json")->required();
  remove->add_option("--out", remove_out, "Output directory")->required();
  remove->add_option("--variant", remove_variant, "full, A, B or C")->capture_default_str()
      ->check(CLI::IsMember({"full", "A", "B", "C"}));
  remove->add_option("--split", remove_split, "Manifest split to process (train, test or all)")->capture_default_str()
      ->check(CLI::IsMember({"train", "test", "all"}));

  // eval
  auto* eval = app.add_subcommand("eval", "Score predictions with PSNR and SSIM");
  std::string pred, gt, target, eval_out, eval_config, eval_label = "full", eval_split;
  eval->add_option("--pred", pred, "Prediction directory (<id>.png)")->required();
  eval->add_option("--gt", gt, "manifest.json or directory of ground-truth PNGs")->required();
  eval->add_option("--target", target, "Ground-truth image for manifests")
      ->check(CLI::IsMember({"diffuse", "diffuse_tc"}));
  eval->add_option("--out", eval_out, "Report CSV path")->required();
  eval->add_option("--variant", eval_label, "Variant label written in the report")->capture_default_str();
  eval->add_option("--split", eval_split, "Manifest split (train, test or all)")
      ->check(CLI::IsMember({"train", "test", "all"}));
  eval->add_option("--config", eval_config, "INI config file ([eval] section)")->check(CLI::ExistingFile);

  // demo
  auto* demo = app.add_subcommand("demo", "synth -> tonefit -> train -> remove -> eval on a toy dataset");
  despec::DemoOptions demo_opts;
  demo->add_option("--out", demo_opts.out, "Output directory")->required();
  demo->add_option("--seed", demo_opts.seed, "Seed for data and training")->capture_default_str();
  demo->add_option("--steps", demo_opts.steps, "Training steps")->capture_default_str()->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    apply_thread_limit();

    if (*synth) {
      Config cfg = base_config(synth_config);
      if (synth_groups) cfg.synth.groups = *synth_groups;
      if (synth_size) cfg.synth.width = cfg.synth.height = *synth_size;
      if (synth_seed) cfg.synth.seed = *synth_seed;
      if (!envmap.empty()) cfg.synth.envmap_path = envmap;
      if (!mesh.empty()) cfg.synth.mesh_path = mesh;
      if (!texture.empty()) cfg.synth.texture_path = texture;
      RunLog run({"synth", despec::config_hash(cfg), cfg.synth.seed});
      const auto m = despec::generate_dataset(cfg.synth, synth_out);
      spdlog::info("wrote {} groups to {}", m.records.size(), synth_out);
    } else if (*tonefit) {
      Config cfg = base_config(tone_config);
      if (error_space == "rgb") cfg.tone.fit.space = despec::ToneErrorSpace::RGB;
      if (error_space == "hsv") cfg.tone.fit.space = despec::ToneErrorSpace::HSV;
      if (exclude_saturated) cfg.tone.fit.exclude_saturated = true;
      RunLog run({"tonefit", despec::config_hash(cfg), cfg.synth.seed});
      if (!tone_manifest.empty()) {
        if (!tone_out.empty()) throw despec::UserError("--out is only used with --pair");
        const auto s = despec::run_tonefit(tone_manifest, cfg.tone);
        spdlog::info("{} groups processed, {} degenerate, {} failed", s.processed, s.degenerate, s.failed);
        if (s.failed > 0) spdlog::warn("failed groups are recorded in the manifest and have no diffuse_tc.png");
      } else if (!tone_pair.empty()) {
        if (tone_out.empty()) throw despec::UserError("--pair requires --out");
        const auto r = despec::tonefit_pair(tone_pair[0], tone_pair[1], tone_out, cfg.tone);
        for (const auto& row : r.transform.matrix) {
          std::cout << fmt::format("{:.9f} {:.9f} {:.9f} {:.9f}\n", row[0], row[1], row[2], row[3]);
        }
        std::cout << fmt::format("fit_error {:.9e}\n", r.transform.fit_error);
        spdlog::info("fitted over {} pixels{}", r.transform.n_pixels_fit,
                     r.transform.degenerate ? " (degenerate, identity used)" : "");
      } else {
        throw despec::UserError("tonefit needs --manifest or --pair");
      }
    } else if (*train) {
      Config cfg = base_config(train_config);
      if (published_defaults) cfg.train.apply_published_defaults();
      if (!stage1_mode.empty()) cfg.train.mode = despec::pipeline::parse_stage1_mode(stage1_mode);
      if (!residue_source.empty()) cfg.train.residue = despec::pipeline::parse_residue_source(residue_source);
      if (!train_variant.empty()) cfg.train.variant = despec::pipeline::parse_variant(train_variant);
      if (train_steps) cfg.train.max_steps = *train_steps;
      if (train_epochs) cfg.train.epochs = *train_epochs;
      if (train_batch) cfg.train.batch = *train_batch;
      if (train_lr) cfg.train.lr = *train_lr;
      if (train_seed) cfg.train.seed = *train_seed;
      if (parallel_loading) cfg.train.parallel_loading = true;
      cfg.train.validate();
      const std::string hash = despec::config_hash(cfg);
      RunLog run({"train", hash, cfg.train.seed});
      spdlog::info("lr {} batch {} epochs {} variant {} stage1 {}", cfg.train.lr, cfg.train.batch,
                   cfg.train.epochs, despec::pipeline::to_string(cfg.train.variant),
                   despec::pipeline::to_string(cfg.train.mode));
      const auto manifest = despec::load_manifest(train_manifest);
      despec::pipeline::TrainHooks hooks;
      hooks.on_epoch = [](const despec::pipeline::StepLoss& l, double lr) {
        spdlog::info("epoch {:3d} step {:6d} lr {:.1e} | pshr {:.5f} sr {:.5f} tc {:.5f} total {:.5f}", l.epoch,
                     l.step, lr, l.pshr, l.sr, l.tc, l.total);
      };
      hooks.on_warning = [](const std::string& w) { spdlog::warn("{}", w); };
      std::filesystem::create_directories(train_out);
      despec::write_text(std::filesystem::path(train_out) / "config.ini", despec::serialize_config(cfg));
      const auto report = despec::pipeline::train(manifest, cfg.train, train_out, {{"config_hash", hash}}, hooks);
      spdlog::info("final checkpoint {}", report.final_checkpoint.string());
    } else if (*remove) {
      RunLog run({"remove", despec::config_hash(Config{}), 0});
      const auto s = despec::pipeline::remove_highlights(ckpt, remove_in, remove_out,
                                                          despec::pipeline::parse_variant(remove_variant),
                                                          remove_split);
      spdlog::info("processed {} images, wrote {} files to {}", s.images, s.written.size(), remove_out);
    } else if (*eval) {
      Config cfg = base_config(eval_config);
      if (!target.empty()) cfg.eval.target = despec::parse_eval_target(target);
      if (!eval_split.empty()) cfg.eval.split = eval_split;
      RunLog run({"eval", despec::config_hash(cfg), 0});
      despec::EvalOptions eo;
      eo.target = cfg.eval.target;
      eo.split = cfg.eval.split;
      eo.variant = eval_label;
      const auto report = despec::run_eval(pred, gt, eo, eval_out);
      std::cout << report.to_csv();
      if (report.has_missing()) {
        spdlog::error("some rows have no prediction/ground-truth partner; they are excluded from the means");
        return 1;
      }
    } else if (*demo) {
      const Config cfg = despec::demo_config(demo_opts);
      RunLog run({"demo", despec::config_hash(cfg), demo_opts.seed});
      const auto result = despec::run_demo(demo_opts, [](const std::string& s) { spdlog::info("{}", s); });
      std::cout << result.report.to_csv();
      for (const auto& [variant, agg] : result.report_diffuse.aggregates) {
        spdlog::info("against specular-free targets: {} psnr {:.3f} ssim {:.4f}", variant, agg.psnr, agg.ssim);
      }
    }
  } catch (const despec::UserError& e) {
    spdlog::error("{}", e.what());
    return 1;
  } catch (const despec::InvariantError& e) {
    spdlog::critical("internal error: {}", e.what());
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    spdlog::error("{}", e.what());
    return 1;
  } catch (const std::exception& e) {
    spdlog::critical("internal error: {}", e.what());
    return 2;
  }
  return 0;
}
