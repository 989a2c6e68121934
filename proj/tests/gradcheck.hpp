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

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "despec/autodiff/ops.hpp"
#include "despec/autodiff/tensor.hpp"
#include "despec/pipeline/unet.hpp"

namespace despec::testing {

using DTensor = ad::Tensor<double>;

inline DTensor random_tensor(ad::Shape s, std::uint64_t seed, double lo = -1.0, double hi = 1.0,
                             bool trainable = true) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  DTensor t = trainable ? DTensor::parameter(s) : DTensor(s);
  for (auto& x : t.data()) x = u(rng);
  return t;
}

/// Largest |analytic - numeric| / max(|analytic|, |numeric|, floor) over every
/// element of every leaf, with central differences of step h. `build` maps a
/// tape to a scalar loss computed from the leaves.
template <typename Build>
double gradcheck(std::vector<DTensor> leaves, Build build, double h = 1e-6, double floor = 1e-6) {
  {
    ad::Tape<double> tape;
    DTensor loss = build(tape);
    for (auto& l : leaves) l.zero_grad();
    tape.backward(loss);
  }
  double worst = 0.0;
  for (auto& leaf : leaves) {
    std::vector<double> analytic(leaf.numel(), 0.0);
    if (leaf.has_grad()) std::copy(leaf.grad().begin(), leaf.grad().end(), analytic.begin());
    auto values = leaf.data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      ad::Tape<double> off(false);
      values[i] = saved + h;
      const double up = build(off).item();
      values[i] = saved - h;
      const double down = build(off).item();
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), floor});
      worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
    }
  }
  return worst;
}

/// Worst relative error of every differentiable op and of a small U-Net on an
/// 8x8 input, keyed by a short label.
inline std::vector<std::pair<std::string, double>> gradcheck_all_ops() {
  using ad::Shape;
  std::vector<std::pair<std::string, double>> out;
  const Shape img{2, 3, 8, 8};
  auto against = [](ad::Tape<double>& t, const DTensor& y, std::uint64_t seed) {
    const DTensor target = random_tensor(y.shape(), seed, 0.0, 1.0, false);
    return ad::mse(t, y, target);
  };

  struct ConvCase {
    const char* name;
    int k, stride, pad;
  };
  for (const ConvCase c : {ConvCase{"conv3x3", 3, 1, 1}, ConvCase{"conv3x3_stride2", 3, 2, 1},
                           ConvCase{"conv1x1", 1, 1, 0}}) {
    DTensor x = random_tensor(img, 1);
    DTensor w = random_tensor({4, 3, c.k, c.k}, 2, -0.5, 0.5);
    DTensor b = random_tensor({1, 4, 1, 1}, 3);
    out.emplace_back(c.name, gradcheck({x, w, b}, [&](ad::Tape<double>& t) {
                       return against(t, ad::conv2d(t, x, w, b, c.stride, c.pad), 4);
                     }));
  }

  DTensor x = random_tensor(img, 11);
  DTensor y = random_tensor(img, 12);
  out.emplace_back("relu", gradcheck({x}, [&](ad::Tape<double>& t) { return against(t, ad::relu(t, x), 5); }));
  out.emplace_back("sigmoid",
                   gradcheck({x}, [&](ad::Tape<double>& t) { return against(t, ad::sigmoid(t, x), 6); }));
  out.emplace_back("avg_pool2x",
                   gradcheck({x}, [&](ad::Tape<double>& t) { return against(t, ad::avg_pool2x(t, x), 7); }));
  out.emplace_back("upsample2x",
                   gradcheck({x}, [&](ad::Tape<double>& t) { return against(t, ad::upsample2x(t, x), 8); }));
  out.emplace_back("concat_channels", gradcheck({x, y}, [&](ad::Tape<double>& t) {
                     return against(t, ad::concat_channels<double>(t, {x, y, x}), 9);
                   }));
  out.emplace_back("add", gradcheck({x, y}, [&](ad::Tape<double>& t) { return against(t, ad::add(t, x, y), 10); }));
  out.emplace_back("sub", gradcheck({x, y}, [&](ad::Tape<double>& t) { return against(t, ad::sub(t, x, y), 11); }));
  out.emplace_back("mul", gradcheck({x, y}, [&](ad::Tape<double>& t) { return against(t, ad::mul(t, x, y), 12); }));
  out.emplace_back("scale",
                   gradcheck({x}, [&](ad::Tape<double>& t) { return against(t, ad::scale(t, x, -1.7), 13); }));
  DTensor z = random_tensor(img, 14, -0.5, 1.5);
  out.emplace_back("clamp01",
                   gradcheck({z}, [&](ad::Tape<double>& t) { return against(t, ad::clamp01(t, z), 15); }));
  out.emplace_back("mse", gradcheck({x, y}, [&](ad::Tape<double>& t) { return ad::mse(t, x, y); }));
  out.emplace_back("weighted_sum", gradcheck({x, y}, [&](ad::Tape<double>& t) {
                     const DTensor a = ad::mse(t, x, y);
                     const DTensor b = against(t, x, 16);
                     return ad::weighted_sum<double>(t, {a, b, a}, {0.5, 2.0, -0.25});
                   }));

  const pipeline::UNet<double> net(3, 3, 4, 17);
  DTensor input = random_tensor({1, 3, 8, 8}, 18, 0.0, 1.0);
  std::vector<DTensor> leaves = net.parameters();
  leaves.push_back(input);
  out.emplace_back("unet", gradcheck(leaves, [&](ad::Tape<double>& t) {
                     return against(t, net.forward(t, input), 19);
                   }));
  return out;
}

}  // namespace despec::testing
