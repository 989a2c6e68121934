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
#include <string>
#include <utility>
#include <vector>

#include "despec/autodiff/tensor.hpp"

namespace despec::pipeline {

/// A conv layer's weights: w is (out, in, k, k) and b is (1, out, 1, 1).
template <typename T>
struct ConvParams {
  ad::Tensor<T> weight;
  ad::Tensor<T> bias;
  int stride = 1;
  int padding = 1;
};

/// Depth-3 U-shaped encoder-decoder.
///
///   enc1:  conv3x3(in -> b), conv3x3(b -> b)                 full resolution
///   enc2:  conv3x3/2(b -> 2b), conv3x3(2b -> 2b)             1/2
///   mid:   conv3x3/2(2b -> 4b), conv3x3(4b -> 4b)            1/4
///   dec2:  up2(mid) ++ enc2 -> conv3x3(6b -> 2b), conv3x3(2b -> 2b)
///   dec1:  up2(dec2) ++ enc1 -> conv3x3(3b -> b), conv3x3(b -> b)
///   head:  conv1x1(b -> out), sigmoid
///
/// Every 3x3 conv is followed by ReLU. Input height and width must be
/// multiples of 4.
template <typename T>
class UNet {
 public:
  UNet(int in_channels, int out_channels, int base_width, std::uint64_t seed);

  ad::Tensor<T> forward(ad::Tape<T>& tape, const ad::Tensor<T>& x) const;

  int in_channels() const { return in_channels_; }
  int out_channels() const { return out_channels_; }
  int base_width() const { return base_; }

  /// Parameters in a fixed order, named "<layer>.weight" / "<layer>.bias".
  std::vector<std::pair<std::string, ad::Tensor<T>>> named_parameters() const;
  std::vector<ad::Tensor<T>> parameters() const;

 private:
  int in_channels_, out_channels_, base_;
  std::vector<std::pair<std::string, ConvParams<T>>> layers_;
};

}  // namespace despec::pipeline
