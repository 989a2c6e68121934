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

#include "despec/pipeline/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "despec/autodiff/ops.hpp"
#include "despec/synthgen.hpp"

namespace despec::pipeline {

Stage1Mode parse_stage1_mode(const std::string& s) {
  if (s == "intrinsic") return Stage1Mode::Intrinsic;
  if (s == "direct") return Stage1Mode::Direct;
  throw UserError("unknown stage-1 mode '" + s + "' (expected intrinsic or direct)");
}

std::string to_string(Stage1Mode m) { return m == Stage1Mode::Intrinsic ? "intrinsic" : "direct"; }

ResidueSource parse_residue_source(const std::string& s) {
  if (s == "stage1") return ResidueSource::Stage1;
  if (s == "stage2") return ResidueSource::Stage2;
  throw UserError("unknown residue source '" + s + "' (expected stage1 or stage2)");
}

std::string to_string(ResidueSource r) { return r == ResidueSource::Stage1 ? "stage1" : "stage2"; }

Variant parse_variant(const std::string& s) {
  if (s == "full") return Variant::Full;
  if (s == "A") return Variant::A;
  if (s == "B") return Variant::B;
  if (s == "C") return Variant::C;
  throw UserError("unknown variant '" + s + "' (expected full, A, B or C)");
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::Full: return "full";
    case Variant::A: return "A";
    case Variant::B: return "B";
    case Variant::C: return "C";
  }
  return "full";
}

namespace {
bool has_refinement(Variant v) { return v == Variant::Full || v == Variant::B; }
bool has_tone(Variant v) { return v == Variant::Full || v == Variant::A; }
}  // namespace

template <typename T>
Pipeline<T>::Pipeline(const PipelineConfig& config, std::uint64_t seed) : config_(config) {
  const int b = config.base_width;
  net_a_.emplace(3, 3, b, derive_seed(seed, 1));
  net_s_.emplace(3, 3, b, derive_seed(seed, 2));
  if (has_refinement(config.variant)) net_r_.emplace(6, 3, b, derive_seed(seed, 3));
  if (has_tone(config.variant)) net_c_.emplace(9, 3, b, derive_seed(seed, 4));
}

template <typename T>
bool Pipeline<T>::supports(Variant v) const {
  if (has_refinement(v) && !net_r_) return false;
  if (has_tone(v) && !net_c_) return false;
  return true;
}

template <typename T>
PipelineOutputs<T> Pipeline<T>::forward(ad::Tape<T>& tape, const ad::Tensor<T>& input, Variant v) const {
  if (!supports(v)) {
    throw UserError("model trained as variant " + to_string(config_.variant) + " cannot run variant " + to_string(v));
  }
  if (input.shape().c != 3) throw ShapeError("pipeline input must have 3 channels, got " + input.shape().str());
  PipelineOutputs<T> out;
  if (config_.mode == Stage1Mode::Intrinsic) {
    out.albedo = net_a_->forward(tape, input);
    out.shading = net_s_->forward(tape, input);
    out.d1 = ad::mul(tape, out.albedo, out.shading);
  } else {
    out.d1 = net_a_->forward(tape, input);
    out.residue_pred = net_s_->forward(tape, input);
  }
  out.residue = ad::clamp01(tape, ad::sub(tape, input, out.d1));
  out.final = out.d1;

  if (has_refinement(v)) {
    out.d2 = net_r_->forward(tape, ad::concat_channels(tape, std::vector<ad::Tensor<T>>{input, out.d1}));
    out.final = out.d2;
  }
  if (has_tone(v)) {
    ad::Tensor<T> base = has_refinement(v) ? out.d2 : out.d1;
    ad::Tensor<T> r = out.residue;
    if (config_.residue == ResidueSource::Stage2 && has_refinement(v)) {
      r = ad::clamp01(tape, ad::sub(tape, input, out.d2));
    }
    out.d3 = net_c_->forward(tape, ad::concat_channels(tape, std::vector<ad::Tensor<T>>{input, base, r}));
    out.final = out.d3;
  }
  return out;
}

template <typename T>
std::vector<std::pair<std::string, ad::Tensor<T>>> Pipeline<T>::named_parameters() const {
  std::vector<std::pair<std::string, ad::Tensor<T>>> out;
  auto append = [&](const char* prefix, const std::optional<UNet<T>>& net) {
    if (!net) return;
    for (auto& [name, t] : net->named_parameters()) out.emplace_back(std::string(prefix) + "." + name, t);
  };
  append("net_a", net_a_);
  append("net_s", net_s_);
  append("net_r", net_r_);
  append("net_c", net_c_);
  return out;
}

template <typename T>
std::vector<ad::Tensor<T>> Pipeline<T>::parameters() const {
  std::vector<ad::Tensor<T>> out;
  for (auto& [n, t] : named_parameters()) out.push_back(t);
  return out;
}

template <typename T>
ad::Tensor<T> loss_pshr(ad::Tape<T>& tape, const PipelineOutputs<T>& out, const BatchTargets<T>& gt,
                        Stage1Mode mode) {
  if (!gt.residue.defined()) throw UserError("stage-1 loss needs the specular residue ground truth");
  if (mode == Stage1Mode::Intrinsic) {
    if (!gt.albedo.defined() || !gt.shading.defined()) {
      throw UserError("intrinsic stage-1 mode needs albedo and shading ground truth");
    }
    auto la = ad::mse(tape, out.albedo, gt.albedo);
    auto ls = ad::mse(tape, out.shading, gt.shading);
    auto lr = ad::mse(tape, ad::sub(tape, gt.input, out.d1), gt.residue);
    return ad::weighted_sum(tape, std::vector<ad::Tensor<T>>{la, ls, lr}, std::vector<T>{T(1), T(1), T(1)});
  }
  if (!gt.diffuse.defined()) throw UserError("direct stage-1 mode needs specular-free ground truth");
  auto ld = ad::mse(tape, out.d1, gt.diffuse);
  auto lr = ad::mse(tape, out.residue_pred, gt.residue);
  return ad::weighted_sum(tape, std::vector<ad::Tensor<T>>{ld, lr}, std::vector<T>{T(1), T(1)});
}

template <typename T>
ad::Tensor<T> loss_sr(ad::Tape<T>& tape, const ad::Tensor<T>& d2, const ad::Tensor<T>& diffuse) {
  return ad::mse(tape, d2, diffuse);
}

template <typename T>
ad::Tensor<T> loss_tc(ad::Tape<T>& tape, const ad::Tensor<T>& d3, const ad::Tensor<T>& diffuse_tc) {
  return ad::mse(tape, d3, diffuse_tc);
}

template <typename T>
ad::Tensor<T> total_loss(ad::Tape<T>& tape, const ad::Tensor<T>& pshr, const ad::Tensor<T>& sr,
                         const ad::Tensor<T>& tc, const LossWeights& w) {
  if (w.lambda1 < 0 || w.lambda2 < 0 || w.lambda3 < 0) throw UserError("loss weights must be nonnegative");
  std::vector<ad::Tensor<T>> terms{pshr};
  std::vector<T> weights{static_cast<T>(w.lambda1)};
  if (sr.defined()) {
    terms.push_back(sr);
    weights.push_back(static_cast<T>(w.lambda2));
  }
  if (tc.defined()) {
    terms.push_back(tc);
    weights.push_back(static_cast<T>(w.lambda3));
  }
  return ad::weighted_sum(tape, terms, weights);
}

template <typename T>
LossTerms<T> compute_losses(ad::Tape<T>& tape, const PipelineOutputs<T>& out, const BatchTargets<T>& gt,
                            Stage1Mode mode, Variant v, const LossWeights& w) {
  LossTerms<T> terms;
  terms.pshr = loss_pshr(tape, out, gt, mode);
  if (has_refinement(v)) terms.sr = loss_sr(tape, out.d2, gt.diffuse);
  if (has_tone(v)) {
    if (!gt.diffuse_tc.defined()) throw UserError("tone-corrected ground truth missing; run `despec tonefit` first");
    terms.tc = loss_tc(tape, out.d3, gt.diffuse_tc);
  }
  terms.total = total_loss(tape, terms.pshr, terms.sr, terms.tc, w);
  return terms;
}

ad::Tensor<float> to_tensor(const std::vector<const Image*>& images) {
  if (images.empty()) throw ShapeError("to_tensor: no images");
  const Image& first = *images.front();
  const int h = first.height(), w = first.width(), c = first.channels();
  ad::Tensor<float> t(ad::Shape{static_cast<int>(images.size()), c, h, w});
  auto data = t.data();
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (std::size_t n = 0; n < images.size(); ++n) {
    const Image& img = *images[n];
    if (!img.same_shape(first)) throw ShapeError("to_tensor: images in a batch must share a shape");
    auto src = img.data();
    float* dst = data.data() + n * c * plane;
    for (std::size_t p = 0; p < plane; ++p) {
      for (int k = 0; k < c; ++k) dst[k * plane + p] = src[p * c + k];
    }
  }
  return t;
}

Image from_tensor(const ad::Tensor<float>& t, int index) {
  const ad::Shape s = t.shape();
  if (index < 0 || index >= s.n) throw ShapeError("from_tensor: batch index out of range");
  Image img(s.h, s.w, s.c, Range::LDR);
  const std::size_t plane = static_cast<std::size_t>(s.h) * s.w;
  const float* src = t.data().data() + static_cast<std::size_t>(index) * s.c * plane;
  auto dst = img.data();
  for (std::size_t p = 0; p < plane; ++p) {
    for (int k = 0; k < s.c; ++k) dst[p * s.c + k] = src[k * plane + p];
  }
  return img;
}

namespace {
int mirror(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}
}  // namespace

Image reflect_pad(const Image& img, int multiple) {
  const int h = img.height(), w = img.width();
  const int ph = (h + multiple - 1) / multiple * multiple;
  const int pw = (w + multiple - 1) / multiple * multiple;
  if (ph == h && pw == w) return img;
  Image out(ph, pw, img.channels(), img.range());
  for (int y = 0; y < ph; ++y) {
    for (int x = 0; x < pw; ++x) {
      const float* src = img.pixel(mirror(y, h), mirror(x, w));
      std::copy(src, src + img.channels(), out.pixel(y, x));
    }
  }
  return out;
}

Image crop(const Image& img, int height, int width) {
  if (height > img.height() || width > img.width()) throw ShapeError("crop larger than image");
  if (height == img.height() && width == img.width()) return img;
  Image out(height, width, img.channels(), img.range());
  for (int y = 0; y < height; ++y) {
    const float* src = img.pixel(y, 0);
    std::copy(src, src + static_cast<std::size_t>(width) * img.channels(), out.pixel(y, 0));
  }
  return out;
}

template <typename T>
void require_finite(const ad::Tensor<T>& t, const char* what) {
  for (T v : t.data()) {
    if (!std::isfinite(v)) throw NumericError(std::string("non-finite value in ") + what);
  }
}

ad::NamedTensors to_checkpoint(const Pipeline<float>& p, const std::map<std::string, std::string>& extra) {
  ad::NamedTensors ckpt;
  ckpt.metadata = extra;
  ckpt.metadata["variant"] = to_string(p.config().variant);
  ckpt.metadata["stage1_mode"] = to_string(p.config().mode);
  ckpt.metadata["residue_source"] = to_string(p.config().residue);
  ckpt.metadata["base_width"] = std::to_string(p.config().base_width);
  for (auto& [name, t] : p.named_parameters()) ckpt.tensors.emplace_back(name, t.detach());
  return ckpt;
}

Pipeline<float> from_checkpoint(const ad::NamedTensors& ckpt) {
  auto get = [&](const char* key) {
    auto it = ckpt.metadata.find(key);
    if (it == ckpt.metadata.end()) throw IoError(std::string("checkpoint metadata lacks '") + key + "'");
    return it->second;
  };
  PipelineConfig cfg;
  cfg.variant = parse_variant(get("variant"));
  cfg.mode = parse_stage1_mode(get("stage1_mode"));
  cfg.residue = parse_residue_source(get("residue_source"));
  try {
    cfg.base_width = std::stoi(get("base_width"));
  } catch (const std::logic_error&) {
    throw IoError("checkpoint has a malformed base_width");
  }
  Pipeline<float> p(cfg, 0);
  auto params = p.named_parameters();
  if (params.size() != ckpt.tensors.size()) {
    throw IoError("checkpoint holds " + std::to_string(ckpt.tensors.size()) + " tensors, model expects " +
                  std::to_string(params.size()));
  }
  for (auto& [name, t] : params) {
    const ad::Tensor<float>* src = ckpt.find(name);
    if (!src) throw IoError("checkpoint is missing tensor " + name);
    if (!(src->shape() == t.shape())) {
      throw IoError("tensor " + name + " has shape " + src->shape().str() + ", expected " + t.shape().str());
    }
    std::copy(src->data().begin(), src->data().end(), t.data().begin());
  }
  return p;
}

#define DESPEC_INSTANTIATE_PIPELINE(T)                                                                     \
  template class Pipeline<T>;                                                                              \
  template ad::Tensor<T> loss_pshr(ad::Tape<T>&, const PipelineOutputs<T>&, const BatchTargets<T>&,        \
                                   Stage1Mode);                                                            \
  template ad::Tensor<T> loss_sr(ad::Tape<T>&, const ad::Tensor<T>&, const ad::Tensor<T>&);                \
  template ad::Tensor<T> loss_tc(ad::Tape<T>&, const ad::Tensor<T>&, const ad::Tensor<T>&);                \
  template ad::Tensor<T> total_loss(ad::Tape<T>&, const ad::Tensor<T>&, const ad::Tensor<T>&,              \
                                    const ad::Tensor<T>&, const LossWeights&);                             \
  template LossTerms<T> compute_losses(ad::Tape<T>&, const PipelineOutputs<T>&, const BatchTargets<T>&,    \
                                       Stage1Mode, Variant, const LossWeights&);                           \
  template void require_finite(const ad::Tensor<T>&, const char*);

DESPEC_INSTANTIATE_PIPELINE(float)
DESPEC_INSTANTIATE_PIPELINE(double)

}  // namespace despec::pipeline
