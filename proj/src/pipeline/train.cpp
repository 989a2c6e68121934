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

#include "despec/pipeline/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <numeric>
#include <random>

#include "despec/autodiff/adam.hpp"
#include "despec/autodiff/serialize.hpp"
#include "despec/dichromatic.hpp"
#include "despec/image_io.hpp"

namespace despec::pipeline {

void TrainConfig::validate() const {
  if (weights.lambda1 < 0 || weights.lambda2 < 0 || weights.lambda3 < 0) {
    throw ConfigError("loss weights must be nonnegative");
  }
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (batch < 1) throw ConfigError("batch must be at least 1");
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (max_steps < 0 || lr_decay_epochs < 0 || keep_every < 0) {
    throw ConfigError("max_steps, lr_decay_epochs and keep_every must be nonnegative");
  }
  if (!(alpha_min >= 0.0) || alpha_max < alpha_min) throw ConfigError("highlight-edit alpha range is invalid");
  if (base_width < 1) throw ConfigError("base_width must be positive");
}

void TrainConfig::apply_published_defaults() {
  lr = 1e-4;
  batch = 16;
  epochs = 60;
  lr_decay_epochs = 10;
}

namespace {

bool needs_tone(Variant v) { return v == Variant::Full || v == Variant::A; }

Image load_rgb(const std::filesystem::path& p) {
  Image img = load_png(p);
  require_channels(img, 3, p.string().c_str());
  return img;
}

std::string format_loss_row(const StepLoss& l) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g,%.9g\n", l.epoch, l.pshr, l.sr, l.tc, l.total);
  return buf;
}

}  // namespace

Sample load_sample(const Manifest& manifest, const ManifestRecord& record, bool need_tone_corrected) {
  Sample s;
  s.input = load_rgb(manifest.image_path(record, "input"));
  s.albedo = load_rgb(manifest.image_path(record, "albedo"));
  s.shading = load_rgb(manifest.image_path(record, "shading"));
  s.residue = load_rgb(manifest.image_path(record, "residue"));
  s.diffuse = load_rgb(manifest.image_path(record, "diffuse"));
  if (need_tone_corrected) s.diffuse_tc = load_rgb(manifest.image_path(record, "diffuse_tc"));
  for (const Image* img : {&s.albedo, &s.shading, &s.residue, &s.diffuse}) {
    require_same_shape(s.input, *img, record.id.c_str());
  }
  if (need_tone_corrected) require_same_shape(s.input, s.diffuse_tc, record.id.c_str());
  return s;
}

void augment(Sample& s, const AugmentParams& p) {
  if (p.flip) {
    for (Image* img : {&s.input, &s.albedo, &s.shading, &s.residue, &s.diffuse, &s.diffuse_tc}) {
      if (!img->empty()) *img = flip_horizontal(*img);
    }
  }
  if (p.edit) {
    s.input = highlight_edit(s.diffuse, s.residue, p.alpha);
    s.residue = clamp01(scale(s.residue, p.alpha));
  }
}

BatchTargets<float> make_batch(const std::vector<Sample>& samples) {
  auto stack = [&](Image Sample::*member) {
    std::vector<Image> padded;
    padded.reserve(samples.size());
    for (const auto& s : samples) padded.push_back(reflect_pad(s.*member, 4));
    std::vector<const Image*> ptrs;
    for (const auto& img : padded) ptrs.push_back(&img);
    return to_tensor(ptrs);
  };
  BatchTargets<float> b;
  b.input = stack(&Sample::input);
  b.albedo = stack(&Sample::albedo);
  b.shading = stack(&Sample::shading);
  b.residue = stack(&Sample::residue);
  b.diffuse = stack(&Sample::diffuse);
  if (!samples.front().diffuse_tc.empty()) b.diffuse_tc = stack(&Sample::diffuse_tc);
  return b;
}

TrainReport train(const Manifest& manifest, const TrainConfig& config, const std::filesystem::path& out_dir,
                  const std::map<std::string, std::string>& checkpoint_metadata, const TrainHooks& hooks) {
  config.validate();
  const bool tone = needs_tone(config.variant);

  std::vector<const ManifestRecord*> records;
  for (const auto& r : manifest.records) {
    if (r.split != Split::Train) continue;
    if (tone && !r.has_tone_corrected()) {
      throw UserError("group " + r.id +
                      " has no tone-corrected target; run `despec tonefit --manifest <manifest.json>` first");
    }
    records.push_back(&r);
  }
  if (records.empty()) throw UserError("manifest has no training groups");

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  PipelineConfig pcfg;
  pcfg.mode = config.mode;
  pcfg.residue = config.residue;
  pcfg.variant = config.variant;
  pcfg.base_width = config.base_width;
  Pipeline<float> model(pcfg, derive_seed(config.seed, 0x6e657473ULL));
  ad::Adam<float> opt(model.parameters(), ad::AdamOptions{config.lr});

  std::mt19937_64 rng(derive_seed(config.seed, 0x7368756666ULL));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::ofstream csv(out_dir / "loss.csv", std::ios::trunc);
  if (!csv) throw IoError("cannot write " + (out_dir / "loss.csv").string());
  csv << "epoch,l_pshr,l_sr,l_tc,total\n";

  auto save = [&](const std::filesystem::path& path, int epoch, int step) {
    auto meta = checkpoint_metadata;
    meta["epoch"] = std::to_string(epoch);
    meta["step"] = std::to_string(step);
    ad::save_tensors(path, to_checkpoint(model, meta));
  };

  TrainReport report;
  std::vector<std::size_t> order(records.size());
  int step = 0;
  bool done = false;
  int last_epoch = 0;
  for (int epoch = 1; epoch <= config.epochs && !done; ++epoch) {
    last_epoch = epoch;
    double lr = config.lr;
    if (config.lr_decay_epochs > 0) lr /= std::pow(10.0, (epoch - 1) / config.lr_decay_epochs);
    opt.set_lr(lr);

    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);

    StepLoss sum;
    int counted = 0;
    for (std::size_t start = 0; start < order.size() && !done; start += config.batch) {
      const std::size_t count = std::min<std::size_t>(config.batch, order.size() - start);
      std::vector<AugmentParams> aug(count);
      for (auto& a : aug) {
        const double u_flip = unit(rng), u_edit = unit(rng), u_alpha = unit(rng);
        a.flip = config.flip && u_flip < 0.5;
        a.edit = config.highlight_edit && u_edit < 0.5;
        a.alpha = static_cast<float>(config.alpha_min + (config.alpha_max - config.alpha_min) * u_alpha);
      }

      std::vector<Sample> samples(count);
      std::vector<std::exception_ptr> errors(count);
#pragma omp parallel for schedule(static) if (config.parallel_loading)
      for (std::size_t k = 0; k < count; ++k) {
        try {
          samples[k] = load_sample(manifest, *records[order[start + k]], tone);
          augment(samples[k], aug[k]);
        } catch (...) {
          errors[k] = std::current_exception();
        }
      }
      for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
      }
      for (std::size_t k = 1; k < count; ++k) require_same_shape(samples[0].input, samples[k].input, "batch");

      ++step;
      StepLoss l;
      l.step = step;
      l.epoch = epoch;
      try {
        BatchTargets<float> batch = make_batch(samples);
        ad::Tape<float> tape;
        auto out = model.forward(tape, batch.input, config.variant);
        auto terms = compute_losses(tape, out, batch, config.mode, config.variant, config.weights);
        require_finite(out.final, "network output");
        require_finite(terms.total, "loss");
        tape.backward(terms.total);
        opt.step();
        opt.zero_grad();
        l.pshr = terms.pshr.item();
        l.sr = terms.sr.defined() ? terms.sr.item() : 0.0;
        l.tc = terms.tc.defined() ? terms.tc.item() : 0.0;
        l.total = terms.total.item();
      } catch (const NumericError& e) {
        opt.zero_grad();
        ++report.skipped_batches;
        if (hooks.on_warning) hooks.on_warning("step " + std::to_string(step) + " skipped: " + e.what());
        if (config.max_steps > 0 && step >= config.max_steps) done = true;
        continue;
      }
      report.steps.push_back(l);
      if (hooks.on_step) hooks.on_step(l);
      sum.pshr += l.pshr;
      sum.sr += l.sr;
      sum.tc += l.tc;
      sum.total += l.total;
      ++counted;
      if (config.max_steps > 0 && step >= config.max_steps) done = true;
    }

    StepLoss mean;
    mean.epoch = epoch;
    mean.step = step;
    if (counted > 0) {
      mean.pshr = sum.pshr / counted;
      mean.sr = sum.sr / counted;
      mean.tc = sum.tc / counted;
      mean.total = sum.total / counted;
    }
    report.epochs.push_back(mean);
    csv << format_loss_row(mean);
    csv.flush();
    if (hooks.on_epoch) hooks.on_epoch(mean, lr);

    save(out_dir / "latest.ckpt", epoch, step);
    if (config.keep_every > 0 && epoch % config.keep_every == 0) {
      char name[32];
      std::snprintf(name, sizeof(name), "epoch_%04d.ckpt", epoch);
      save(out_dir / name, epoch, step);
    }
  }
  report.final_checkpoint = out_dir / "final.ckpt";
  save(report.final_checkpoint, last_epoch, step);
  return report;
}

}  // namespace despec::pipeline
