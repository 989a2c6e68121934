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

#include <span>

namespace despec::kernels {

/// Geometry of a square-kernel 2-D cross-correlation over an NCHW batch.
struct ConvGeometry {
  int batch = 1;
  int in_channels = 1;
  int in_h = 1;
  int in_w = 1;
  int out_channels = 1;
  int kernel = 3;
  int stride = 1;
  int padding = 1;

  int out_h() const { return (in_h + 2 * padding - kernel) / stride + 1; }
  int out_w() const { return (in_w + 2 * padding - kernel) / stride + 1; }
};

// OpenMP kernels. Every output element is produced by exactly one thread in a
// fixed summation order, so results do not depend on the thread count.
//
// forward:          out = conv(in, weight) + bias            (overwrites out)
// backward_input:   grad_in += conv^T(grad_out, weight)      (accumulates)
// backward_weight:  grad_weight += ..., grad_bias += ...     (accumulates)
template <typename T>
void conv2d_forward(const ConvGeometry& g, std::span<const T> in, std::span<const T> weight,
                    std::span<const T> bias, std::span<T> out);
template <typename T>
void conv2d_backward_input(const ConvGeometry& g, std::span<const T> grad_out, std::span<const T> weight,
                           std::span<T> grad_in);
template <typename T>
void conv2d_backward_weight(const ConvGeometry& g, std::span<const T> in, std::span<const T> grad_out,
                            std::span<T> grad_weight, std::span<T> grad_bias);

// Serial direct loops with the same contracts; kept for tests and benchmarks.
namespace reference {
template <typename T>
void conv2d_forward(const ConvGeometry& g, std::span<const T> in, std::span<const T> weight,
                    std::span<const T> bias, std::span<T> out);
template <typename T>
void conv2d_backward_input(const ConvGeometry& g, std::span<const T> grad_out, std::span<const T> weight,
                           std::span<T> grad_in);
template <typename T>
void conv2d_backward_weight(const ConvGeometry& g, std::span<const T> in, std::span<const T> grad_out,
                            std::span<T> grad_weight, std::span<T> grad_bias);
}  // namespace reference

}  // namespace despec::kernels
