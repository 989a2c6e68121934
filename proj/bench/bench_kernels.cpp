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

// Parallel kernels against their serial reference versions.
//
// Shapes follow the U-Net layers at 64x64 with base width 16 and batch 4.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "despec/autodiff/conv_kernels.hpp"
#include "despec/image.hpp"
#include "despec/metrics.hpp"

namespace {

using despec::kernels::ConvGeometry;

std::vector<float> random_vec(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  std::vector<float> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

ConvGeometry layer(const benchmark::State& state) {
  ConvGeometry g;
  g.batch = 4;
  g.in_channels = static_cast<int>(state.range(0));
  g.out_channels = static_cast<int>(state.range(1));
  g.in_h = g.in_w = static_cast<int>(state.range(2));
  g.kernel = 3;
  g.stride = 1;
  g.padding = 1;
  return g;
}

struct Buffers {
  std::vector<float> in, weight, bias, out, grad_out, grad_in, grad_w, grad_b;
  explicit Buffers(const ConvGeometry& g) {
    const std::size_t n_in = static_cast<std::size_t>(g.batch) * g.in_channels * g.in_h * g.in_w;
    const std::size_t n_w = static_cast<std::size_t>(g.out_channels) * g.in_channels * g.kernel * g.kernel;
    const std::size_t n_out = static_cast<std::size_t>(g.batch) * g.out_channels * g.out_h() * g.out_w();
    in = random_vec(n_in, 1);
    weight = random_vec(n_w, 2);
    bias = random_vec(g.out_channels, 3);
    grad_out = random_vec(n_out, 4);
    out.resize(n_out);
    grad_in.resize(n_in);
    grad_w.resize(n_w);
    grad_b.resize(g.out_channels);
  }
};

template <bool Reference>
void BM_ConvForward(benchmark::State& state) {
  const ConvGeometry g = layer(state);
  Buffers b(g);
  for (auto _ : state) {
    if constexpr (Reference) {
      despec::kernels::reference::conv2d_forward<float>(g, b.in, b.weight, b.bias, b.out);
    } else {
      despec::kernels::conv2d_forward<float>(g, b.in, b.weight, b.bias, b.out);
    }
    benchmark::DoNotOptimize(b.out.data());
  }
}

template <bool Reference>
void BM_ConvBackward(benchmark::State& state) {
  const ConvGeometry g = layer(state);
  Buffers b(g);
  for (auto _ : state) {
    if constexpr (Reference) {
      despec::kernels::reference::conv2d_backward_input<float>(g, b.grad_out, b.weight, b.grad_in);
      despec::kernels::reference::conv2d_backward_weight<float>(g, b.in, b.grad_out, b.grad_w, b.grad_b);
    } else {
      despec::kernels::conv2d_backward_input<float>(g, b.grad_out, b.weight, b.grad_in);
      despec::kernels::conv2d_backward_weight<float>(g, b.in, b.grad_out, b.grad_w, b.grad_b);
    }
    benchmark::DoNotOptimize(b.grad_w.data());
  }
}

void layer_args(benchmark::internal::Benchmark* b) {
  b->Args({3, 16, 64})->Args({16, 16, 64})->Args({48, 16, 64})->Args({64, 64, 16})->Unit(benchmark::kMillisecond);
}

BENCHMARK(BM_ConvForward<true>)->Name("conv_forward/reference")->Apply(layer_args);
BENCHMARK(BM_ConvForward<false>)->Name("conv_forward/parallel")->Apply(layer_args);
BENCHMARK(BM_ConvBackward<true>)->Name("conv_backward/reference")->Apply(layer_args);
BENCHMARK(BM_ConvBackward<false>)->Name("conv_backward/parallel")->Apply(layer_args);

template <bool Reference>
void BM_Ssim(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  despec::Image a(n, n, 3), b(n, n, 3);
  auto va = random_vec(a.size(), 5), vb = random_vec(b.size(), 6);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a.data()[i] = 0.5f + 0.5f * va[i];
    b.data()[i] = 0.5f + 0.5f * vb[i];
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(Reference ? despec::ssim_reference(a, b) : despec::ssim(a, b));
  }
}

BENCHMARK(BM_Ssim<true>)->Name("ssim/reference")->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Ssim<false>)->Name("ssim/parallel")->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
