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

#include "despec/pipeline/unet.hpp"

#include <cmath>
#include <random>

#include "despec/autodiff/ops.hpp"

namespace despec::pipeline {

namespace {

template <typename T>
ConvParams<T> he_conv(int in, int out, int k, int stride, std::mt19937_64& rng) {
  ConvParams<T> p;
  p.weight = ad::Tensor<T>::parameter(ad::Shape{out, in, k, k});
  p.bias = ad::Tensor<T>::parameter(ad::Shape{1, out, 1, 1});
  p.stride = stride;
  p.padding = k / 2;
  std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / (static_cast<double>(in) * k * k)));
  for (auto& v : p.weight.data()) v = static_cast<T>(normal(rng));
  return p;
}

template <typename T>
ad::Tensor<T> apply(ad::Tape<T>& tape, const ConvParams<T>& p, const ad::Tensor<T>& x) {
  return ad::conv2d(tape, x, p.weight, p.bias, p.stride, p.padding);
}

}  // namespace

template <typename T>
UNet<T>::UNet(int in_channels, int out_channels, int base_width, std::uint64_t seed)
    : in_channels_(in_channels), out_channels_(out_channels), base_(base_width) {
  if (in_channels < 1 || out_channels < 1 || base_width < 1) throw UserError("UNet: channel counts must be positive");
  std::mt19937_64 rng(seed);
  const int b = base_width;
  auto add = [&](const char* name, int in, int out, int k, int stride) {
    layers_.emplace_back(name, he_conv<T>(in, out, k, stride, rng));
  };
  add("enc1a", in_channels, b, 3, 1);
  add("enc1b", b, b, 3, 1);
  add("enc2a", b, 2 * b, 3, 2);
  add("enc2b", 2 * b, 2 * b, 3, 1);
  add("mida", 2 * b, 4 * b, 3, 2);
  add("midb", 4 * b, 4 * b, 3, 1);
  add("dec2a", 6 * b, 2 * b, 3, 1);
  add("dec2b", 2 * b, 2 * b, 3, 1);
  add("dec1a", 3 * b, b, 3, 1);
  add("dec1b", b, b, 3, 1);
  add("head", b, out_channels, 1, 1);
}

template <typename T>
ad::Tensor<T> UNet<T>::forward(ad::Tape<T>& tape, const ad::Tensor<T>& x) const {
  const ad::Shape s = x.shape();
  if (s.c != in_channels_) {
    throw ShapeError("UNet expects " + std::to_string(in_channels_) + " input channels, got " + std::to_string(s.c));
  }
  if (s.h % 4 || s.w % 4) throw ShapeError("UNet input size must be a multiple of 4, got " + s.str());
  auto L = [&](std::size_t i, const ad::Tensor<T>& in) { return ad::relu(tape, apply(tape, layers_[i].second, in)); };

  auto e1 = L(1, L(0, x));
  auto e2 = L(3, L(2, e1));
  auto m = L(5, L(4, e2));
  auto d2 = ad::concat_channels(tape, std::vector<ad::Tensor<T>>{ad::upsample2x(tape, m), e2});
  d2 = L(7, L(6, d2));
  auto d1 = ad::concat_channels(tape, std::vector<ad::Tensor<T>>{ad::upsample2x(tape, d2), e1});
  d1 = L(9, L(8, d1));
  return ad::sigmoid(tape, apply(tape, layers_[10].second, d1));
}

template <typename T>
std::vector<std::pair<std::string, ad::Tensor<T>>> UNet<T>::named_parameters() const {
  std::vector<std::pair<std::string, ad::Tensor<T>>> out;
  for (const auto& [name, p] : layers_) {
    out.emplace_back(name + ".weight", p.weight);
    out.emplace_back(name + ".bias", p.bias);
  }
  return out;
}

template <typename T>
std::vector<ad::Tensor<T>> UNet<T>::parameters() const {
  std::vector<ad::Tensor<T>> out;
  for (auto& [n, t] : named_parameters()) out.push_back(t);
  return out;
}

template class UNet<float>;
template class UNet<double>;

}  // namespace despec::pipeline
