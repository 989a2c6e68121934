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
#include <vector>

#include "despec/autodiff/tensor.hpp"

namespace despec::ad {

struct AdamOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam over a fixed list of parameters. Parameters without a
/// gradient buffer are treated as having zero gradient.
template <typename T>
class Adam {
 public:
  Adam(std::vector<Tensor<T>> params, AdamOptions options);

  void step();
  void zero_grad();
  void set_lr(double lr);
  double lr() const { return options_.lr; }
  std::int64_t steps() const { return t_; }

 private:
  std::vector<Tensor<T>> params_;
  AdamOptions options_;
  std::vector<std::vector<T>> m_, v_;
  std::int64_t t_ = 0;
};

}  // namespace despec::ad
