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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "despec/autodiff/serialize.hpp"
#include "despec/autodiff/tensor.hpp"
#include "despec/image.hpp"
#include "despec/pipeline/unet.hpp"

namespace despec::pipeline {

enum class Stage1Mode {
  Intrinsic,  // net_a -> albedo, net_s -> shading, D1 = A * S
  Direct,     // net_a -> D1, net_s -> specular residue
};

/// Which residue image stage 3 sees: clamp01(I - D1) or clamp01(I - D2).
enum class ResidueSource { Stage1, Stage2 };

/// full: D3 = net_c(I, D2, R).  A: drops refinement, D3 = net_c(I, D1, R).
/// B: drops tone correction, final = D2.  C: stage 1 only, final = D1.
enum class Variant { Full, A, B, C };

Stage1Mode parse_stage1_mode(const std::string& s);
std::string to_string(Stage1Mode m);
ResidueSource parse_residue_source(const std::string& s);
std::string to_string(ResidueSource r);
Variant parse_variant(const std::string& s);
std::string to_string(Variant v);

struct PipelineConfig {
  Stage1Mode mode = Stage1Mode::Intrinsic;
  ResidueSource residue = ResidueSource::Stage1;
  Variant variant = Variant::Full;  // determines which networks exist
  int base_width = 16;
};

template <typename T>
struct PipelineOutputs {
  ad::Tensor<T> albedo;     // intrinsic mode
  ad::Tensor<T> shading;    // intrinsic mode
  ad::Tensor<T> residue_pred;  // direct mode
  ad::Tensor<T> d1;
  ad::Tensor<T> residue;    // clamp01(I - D1)
  ad::Tensor<T> d2;         // full and B
  ad::Tensor<T> d3;         // full and A
  ad::Tensor<T> final;
};

/// The four encoder-decoders wired as a three-stage removal pipeline.
template <typename T>
class Pipeline {
 public:
  Pipeline(const PipelineConfig& config, std::uint64_t seed);

  const PipelineConfig& config() const { return config_; }

  /// Whether the networks needed by `v` are present.
  bool supports(Variant v) const;

  /// `input` is (N, 3, H, W) with H, W multiples of 4.
  PipelineOutputs<T> forward(ad::Tape<T>& tape, const ad::Tensor<T>& input, Variant v) const;

  std::vector<std::pair<std::string, ad::Tensor<T>>> named_parameters() const;
  std::vector<ad::Tensor<T>> parameters() const;

 private:
  PipelineConfig config_;
  std::optional<UNet<T>> net_a_, net_s_, net_r_, net_c_;
};

/// Supervision for one batch, all (N, 3, H, W).
template <typename T>
struct BatchTargets {
  ad::Tensor<T> input;
  ad::Tensor<T> albedo;
  ad::Tensor<T> shading;
  ad::Tensor<T> residue;
  ad::Tensor<T> diffuse;
  ad::Tensor<T> diffuse_tc;
};

struct LossWeights {
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  double lambda3 = 1.0;
};

template <typename T>
struct LossTerms {
  ad::Tensor<T> pshr;
  ad::Tensor<T> sr;  // undefined when the variant has no refinement stage
  ad::Tensor<T> tc;  // undefined when the variant has no tone stage
  ad::Tensor<T> total;
};

// intrinsic: mse(A, A^) + mse(S, S^) + mse(I - D1, R^)
// direct:    mse(D1, D^) + mse(R_pred, R^)
template <typename T>
ad::Tensor<T> loss_pshr(ad::Tape<T>& tape, const PipelineOutputs<T>& out, const BatchTargets<T>& gt,
                        Stage1Mode mode);
template <typename T>
ad::Tensor<T> loss_sr(ad::Tape<T>& tape, const ad::Tensor<T>& d2, const ad::Tensor<T>& diffuse);
template <typename T>
ad::Tensor<T> loss_tc(ad::Tape<T>& tape, const ad::Tensor<T>& d3, const ad::Tensor<T>& diffuse_tc);
template <typename T>
ad::Tensor<T> total_loss(ad::Tape<T>& tape, const ad::Tensor<T>& pshr, const ad::Tensor<T>& sr,
                         const ad::Tensor<T>& tc, const LossWeights& w);

/// Every term the variant trains, plus their weighted total.
template <typename T>
LossTerms<T> compute_losses(ad::Tape<T>& tape, const PipelineOutputs<T>& out, const BatchTargets<T>& gt,
                            Stage1Mode mode, Variant v, const LossWeights& w);

// Image <-> tensor conversion. Images are HWC, tensors NCHW.
ad::Tensor<float> to_tensor(const std::vector<const Image*>& images);
Image from_tensor(const ad::Tensor<float>& t, int index);

// Mirror-pads bottom/right so height and width are multiples of `multiple`.
Image reflect_pad(const Image& img, int multiple);
Image crop(const Image& img, int height, int width);

/// Throws NumericError if any value is NaN or infinite.
template <typename T>
void require_finite(const ad::Tensor<T>& t, const char* what);

// Checkpoint conversion. The metadata block records the pipeline config.
ad::NamedTensors to_checkpoint(const Pipeline<float>& p, const std::map<std::string, std::string>& extra);
Pipeline<float> from_checkpoint(const ad::NamedTensors& ckpt);

}  // namespace despec::pipeline
