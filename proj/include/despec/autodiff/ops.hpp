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

#include <vector>

#include "despec/autodiff/tensor.hpp"

namespace despec::ad {

// 3x3 or 1x1 cross-correlation; w is (out, in, k, k), b is (1, out, 1, 1).
template <typename T>
Tensor<T> conv2d(Tape<T>& tape, const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, int stride,
                 int padding);

template <typename T>
Tensor<T> relu(Tape<T>& tape, const Tensor<T>& x);
template <typename T>
Tensor<T> sigmoid(Tape<T>& tape, const Tensor<T>& x);

template <typename T>
Tensor<T> avg_pool2x(Tape<T>& tape, const Tensor<T>& x);
template <typename T>
Tensor<T> upsample2x(Tape<T>& tape, const Tensor<T>& x);  // nearest neighbour

template <typename T>
Tensor<T> concat_channels(Tape<T>& tape, const std::vector<Tensor<T>>& parts);

template <typename T>
Tensor<T> add(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> sub(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> mul(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> scale(Tape<T>& tape, const Tensor<T>& a, T s);

// Clamp to [0,1]; the gradient passes only where the input is strictly inside.
template <typename T>
Tensor<T> clamp01(Tape<T>& tape, const Tensor<T>& x);

// Mean over all elements of the squared difference; returns a scalar.
template <typename T>
Tensor<T> mse(Tape<T>& tape, const Tensor<T>& pred, const Tensor<T>& target);

// Sum of weights[i] * scalars[i]; every input must be a scalar.
template <typename T>
Tensor<T> weighted_sum(Tape<T>& tape, const std::vector<Tensor<T>>& scalars, const std::vector<T>& weights);

}  // namespace despec::ad
