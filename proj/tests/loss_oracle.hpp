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

// Term-by-term recomputation of the training losses from raw tensor values,
// sharing no code with the autodiff graph.

#include <random>
#include <vector>

#include "despec/pipeline/pipeline.hpp"

namespace despec::testing {

struct LossValues {
  double pshr = 0, sr = 0, tc = 0, total = 0;
};

template <typename T>
std::vector<double> values(const ad::Tensor<T>& t) {
  return std::vector<double>(t.data().begin(), t.data().end());
}

inline double mean_sq(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

template <typename T>
LossValues loss_oracle(const pipeline::PipelineOutputs<T>& out, const pipeline::BatchTargets<T>& gt,
                       pipeline::Stage1Mode mode, bool refine, bool tone, const pipeline::LossWeights& w) {
  LossValues v;
  const auto input = values(gt.input);
  const auto d1 = values(out.d1);
  if (mode == pipeline::Stage1Mode::Intrinsic) {
    std::vector<double> unclamped_residue(input.size());
    for (std::size_t i = 0; i < input.size(); ++i) unclamped_residue[i] = input[i] - d1[i];
    v.pshr = mean_sq(values(out.albedo), values(gt.albedo)) + mean_sq(values(out.shading), values(gt.shading)) +
             mean_sq(unclamped_residue, values(gt.residue));
  } else {
    v.pshr = mean_sq(d1, values(gt.diffuse)) + mean_sq(values(out.residue_pred), values(gt.residue));
  }
  if (refine) v.sr = mean_sq(values(out.d2), values(gt.diffuse));
  if (tone) v.tc = mean_sq(values(out.d3), values(gt.diffuse_tc));
  v.total = w.lambda1 * v.pshr + w.lambda2 * v.sr + w.lambda3 * v.tc;
  return v;
}

template <typename T>
ad::Tensor<T> uniform_tensor(ad::Shape s, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ad::Tensor<T> t(s);
  for (auto& x : t.data()) x = static_cast<T>(u(rng));
  return t;
}

/// Random stand-ins for every network output and every supervision image.
template <typename T>
std::pair<pipeline::PipelineOutputs<T>, pipeline::BatchTargets<T>> random_loss_inputs(ad::Shape s,
                                                                                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  pipeline::PipelineOutputs<T> o;
  o.albedo = uniform_tensor<T>(s, rng);
  o.shading = uniform_tensor<T>(s, rng);
  o.residue_pred = uniform_tensor<T>(s, rng);
  o.d1 = uniform_tensor<T>(s, rng);
  o.residue = uniform_tensor<T>(s, rng);
  o.d2 = uniform_tensor<T>(s, rng);
  o.d3 = uniform_tensor<T>(s, rng);
  o.final = o.d3;
  pipeline::BatchTargets<T> g;
  g.input = uniform_tensor<T>(s, rng);
  g.albedo = uniform_tensor<T>(s, rng);
  g.shading = uniform_tensor<T>(s, rng);
  g.residue = uniform_tensor<T>(s, rng);
  g.diffuse = uniform_tensor<T>(s, rng);
  g.diffuse_tc = uniform_tensor<T>(s, rng);
  return {o, g};
}

}  // namespace despec::testing
