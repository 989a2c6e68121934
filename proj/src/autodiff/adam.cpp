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

#include "despec/autodiff/adam.hpp"

#include <cmath>
#include <string>

namespace despec::ad {

namespace {
void check_lr(double lr) {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw UserError("learning rate must be positive, got " + std::to_string(lr));
}
}  // namespace

template <typename T>
Adam<T>::Adam(std::vector<Tensor<T>> params, AdamOptions options)
    : params_(std::move(params)), options_(options) {
  check_lr(options_.lr);
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& p : params_) {
    m_.emplace_back(p.numel(), T(0));
    v_.emplace_back(p.numel(), T(0));
  }
}

template <typename T>
void Adam<T>::set_lr(double lr) {
  check_lr(lr);
  options_.lr = lr;
}

template <typename T>
void Adam<T>::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

template <typename T>
void Adam<T>::step() {
  ++t_;
  const double b1 = options_.beta1, b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  const T lr = static_cast<T>(options_.lr), eps = static_cast<T>(options_.eps);
  const T tb1 = static_cast<T>(b1), tb2 = static_cast<T>(b2);
  const T ic1 = static_cast<T>(1.0 / c1), ic2 = static_cast<T>(1.0 / c2);
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto& p = params_[k];
    auto value = p.data();
    auto grad = p.grad();
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < value.size(); ++i) {
      const T g = grad.empty() ? T(0) : grad[i];
      m[i] = tb1 * m[i] + (T(1) - tb1) * g;
      v[i] = tb2 * v[i] + (T(1) - tb2) * g * g;
      const T mhat = m[i] * ic1;
      const T vhat = v[i] * ic2;
      value[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

template class Adam<float>;
template class Adam<double>;

}  // namespace despec::ad
