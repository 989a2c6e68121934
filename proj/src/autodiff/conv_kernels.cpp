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

#include "despec/autodiff/conv_kernels.hpp"

#include <algorithm>
#include <cstddef>
#include <vector>

#include <Eigen/Core>

namespace despec::kernels {

namespace {

// Output columns [lo, hi) whose input column ox*stride + kx - pad is inside [0, in_w).
inline void column_range(const ConvGeometry& g, int kx, int& lo, int& hi) {
  const int shift = kx - g.padding;
  lo = shift >= 0 ? 0 : (-shift + g.stride - 1) / g.stride;
  const int last = g.in_w - 1 - shift;  // largest ox*stride allowed
  hi = last < 0 ? 0 : std::min(g.out_w(), last / g.stride + 1);
  if (hi < lo) hi = lo;
}

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapC = Eigen::Map<const Mat<T>, Eigen::Unaligned, Eigen::OuterStride<>>;
template <typename T>
using Map = Eigen::Map<Mat<T>, Eigen::Unaligned, Eigen::OuterStride<>>;

inline std::size_t patch_rows(const ConvGeometry& g) {
  return static_cast<std::size_t>(g.in_channels) * g.kernel * g.kernel;
}

inline bool is_pointwise(const ConvGeometry& g) { return g.kernel == 1 && g.stride == 1 && g.padding == 0; }

// Output rows are processed in bands so the patch matrix of a band stays
// cache resident.
constexpr int kBandColumns = 256;

inline int band_rows(const ConvGeometry& g) { return std::max(1, kBandColumns / std::max(1, g.out_w())); }

// Unfolds output rows [y0, y1) of one image (C, H, W) into a
// (C*k*k, (y1-y0)*out_w) patch matrix.
template <typename T>
void im2col(const ConvGeometry& g, const T* __restrict in, int y0, int y1, T* __restrict cols) {
  const int ow = g.out_w(), k = g.kernel, s = g.stride;
  const std::size_t band = static_cast<std::size_t>(y1 - y0) * ow;
  const std::size_t in_plane = static_cast<std::size_t>(g.in_h) * g.in_w;
  for (int i = 0; i < g.in_channels; ++i) {
    const T* ip = in + i * in_plane;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        T* row = cols + ((static_cast<std::size_t>(i) * k + ky) * k + kx) * band;
        int lo, hi;
        column_range(g, kx, lo, hi);
        for (int oy = y0; oy < y1; ++oy) {
          T* dst = row + static_cast<std::size_t>(oy - y0) * ow;
          const int iy = oy * s + ky - g.padding;
          if (iy < 0 || iy >= g.in_h || lo >= hi) {
            std::fill(dst, dst + ow, T(0));
            continue;
          }
          const T* src = ip + static_cast<std::size_t>(iy) * g.in_w + (kx - g.padding);
          std::fill(dst, dst + lo, T(0));
          if (s == 1) {
            std::copy(src + lo, src + hi, dst + lo);
          } else {
            for (int ox = lo; ox < hi; ++ox) dst[ox] = src[ox * s];
          }
          std::fill(dst + hi, dst + ow, T(0));
        }
      }
    }
  }
}

// Adjoint of im2col: scatters band gradients back onto the image.
template <typename T>
void col2im_add(const ConvGeometry& g, const T* __restrict cols, int y0, int y1, T* __restrict grad_in) {
  const int ow = g.out_w(), k = g.kernel, s = g.stride;
  const std::size_t band = static_cast<std::size_t>(y1 - y0) * ow;
  const std::size_t in_plane = static_cast<std::size_t>(g.in_h) * g.in_w;
  for (int i = 0; i < g.in_channels; ++i) {
    T* gp = grad_in + i * in_plane;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const T* row = cols + ((static_cast<std::size_t>(i) * k + ky) * k + kx) * band;
        int lo, hi;
        column_range(g, kx, lo, hi);
        if (lo >= hi) continue;
        for (int oy = y0; oy < y1; ++oy) {
          const int iy = oy * s + ky - g.padding;
          if (iy < 0 || iy >= g.in_h) continue;
          const T* src = row + static_cast<std::size_t>(oy - y0) * ow;
          T* dst = gp + static_cast<std::size_t>(iy) * g.in_w + (kx - g.padding);
          if (s == 1) {
#pragma omp simd
            for (int ox = lo; ox < hi; ++ox) dst[ox] += src[ox];
          } else {
            for (int ox = lo; ox < hi; ++ox) dst[ox * s] += src[ox];
          }
        }
      }
    }
  }
}

}  // namespace

template <typename T>
void conv2d_forward(const ConvGeometry& g, std::span<const T> in, std::span<const T> weight,
                    std::span<const T> bias, std::span<T> out) {
  const std::size_t rows = patch_rows(g);
  const int oh = g.out_h(), ow = g.out_w(), br = band_rows(g);
  const auto P = static_cast<Eigen::Index>(oh) * ow;
  const auto K = static_cast<Eigen::Index>(rows);
  const std::size_t in_batch = static_cast<std::size_t>(g.in_channels) * g.in_h * g.in_w;
  const std::size_t out_batch = static_cast<std::size_t>(g.out_channels) * P;
  MapC<T> w(weight.data(), g.out_channels, K, Eigen::OuterStride<>(K));
#pragma omp parallel
  {
    std::vector<T> scratch(is_pointwise(g) ? 0 : rows * br * ow);
#pragma omp for schedule(static)
    for (int n = 0; n < g.batch; ++n) {
      const T* in_n = in.data() + n * in_batch;
      T* out_n = out.data() + n * out_batch;
      for (int y0 = 0; y0 < oh; y0 += br) {
        const int y1 = std::min(oh, y0 + br);
        const auto tp = static_cast<Eigen::Index>(y1 - y0) * ow;
        const std::size_t off = static_cast<std::size_t>(y0) * ow;
        Map<T> o(out_n + off, g.out_channels, tp, Eigen::OuterStride<>(P));
        if (is_pointwise(g)) {
          o.noalias() = w * MapC<T>(in_n + off, K, tp, Eigen::OuterStride<>(P));
        } else {
          im2col(g, in_n, y0, y1, scratch.data());
          o.noalias() = w * MapC<T>(scratch.data(), K, tp, Eigen::OuterStride<>(tp));
        }
        for (int c = 0; c < g.out_channels; ++c) o.row(c).array() += bias[c];
      }
    }
  }
}

template <typename T>
void conv2d_backward_input(const ConvGeometry& g, std::span<const T> grad_out, std::span<const T> weight,
                           std::span<T> grad_in) {
  const std::size_t rows = patch_rows(g);
  const int oh = g.out_h(), ow = g.out_w(), br = band_rows(g);
  const auto P = static_cast<Eigen::Index>(oh) * ow;
  const auto K = static_cast<Eigen::Index>(rows);
  const std::size_t in_batch = static_cast<std::size_t>(g.in_channels) * g.in_h * g.in_w;
  const std::size_t out_batch = static_cast<std::size_t>(g.out_channels) * P;
  MapC<T> w(weight.data(), g.out_channels, K, Eigen::OuterStride<>(K));
#pragma omp parallel
  {
    std::vector<T> scratch(is_pointwise(g) ? 0 : rows * br * ow);
#pragma omp for schedule(static)
    for (int n = 0; n < g.batch; ++n) {
      T* gi_n = grad_in.data() + n * in_batch;
      for (int y0 = 0; y0 < oh; y0 += br) {
        const int y1 = std::min(oh, y0 + br);
        const auto tp = static_cast<Eigen::Index>(y1 - y0) * ow;
        const std::size_t off = static_cast<std::size_t>(y0) * ow;
        MapC<T> go(grad_out.data() + n * out_batch + off, g.out_channels, tp, Eigen::OuterStride<>(P));
        if (is_pointwise(g)) {
          Map<T> gi(gi_n + off, K, tp, Eigen::OuterStride<>(P));
          gi.noalias() += w.transpose() * go;
        } else {
          Map<T> cols(scratch.data(), K, tp, Eigen::OuterStride<>(tp));
          cols.noalias() = w.transpose() * go;
          col2im_add(g, scratch.data(), y0, y1, gi_n);
        }
      }
    }
  }
}

template <typename T>
void conv2d_backward_weight(const ConvGeometry& g, std::span<const T> in, std::span<const T> grad_out,
                            std::span<T> grad_weight, std::span<T> grad_bias) {
  const std::size_t rows = patch_rows(g);
  const int oh = g.out_h(), ow = g.out_w(), br = band_rows(g);
  const auto P = static_cast<Eigen::Index>(oh) * ow;
  const auto K = static_cast<Eigen::Index>(rows);
  const std::size_t in_batch = static_cast<std::size_t>(g.in_channels) * g.in_h * g.in_w;
  const std::size_t out_batch = static_cast<std::size_t>(g.out_channels) * P;
  const std::size_t wsize = static_cast<std::size_t>(g.out_channels) * rows;

  // Each image gets its own partial product; partials are then summed in
  // image order so the result does not depend on the thread count.
  std::vector<T> partial(static_cast<std::size_t>(g.batch) * wsize);
#pragma omp parallel
  {
    std::vector<T> scratch(is_pointwise(g) ? 0 : rows * br * ow);
#pragma omp for schedule(static)
    for (int n = 0; n < g.batch; ++n) {
      const T* in_n = in.data() + n * in_batch;
      Map<T> pw(partial.data() + n * wsize, g.out_channels, K, Eigen::OuterStride<>(K));
      pw.setZero();
      for (int y0 = 0; y0 < oh; y0 += br) {
        const int y1 = std::min(oh, y0 + br);
        const auto tp = static_cast<Eigen::Index>(y1 - y0) * ow;
        const std::size_t off = static_cast<std::size_t>(y0) * ow;
        MapC<T> go(grad_out.data() + n * out_batch + off, g.out_channels, tp, Eigen::OuterStride<>(P));
        if (is_pointwise(g)) {
          pw.noalias() += go * MapC<T>(in_n + off, K, tp, Eigen::OuterStride<>(P)).transpose();
        } else {
          im2col(g, in_n, y0, y1, scratch.data());
          pw.noalias() += go * MapC<T>(scratch.data(), K, tp, Eigen::OuterStride<>(tp)).transpose();
        }
      }
    }
  }
  for (int n = 0; n < g.batch; ++n) {
    const T* pw = partial.data() + n * wsize;
    for (std::size_t j = 0; j < wsize; ++j) grad_weight[j] += pw[j];
  }
  for (int o = 0; o < g.out_channels; ++o) {
    double sum = 0.0;
    for (int n = 0; n < g.batch; ++n) {
      const T* go = grad_out.data() + n * out_batch + static_cast<std::size_t>(o) * P;
      for (Eigen::Index j = 0; j < P; ++j) sum += go[j];
    }
    grad_bias[o] += static_cast<T>(sum);
  }
}

namespace reference {

template <typename T>
void conv2d_forward(const ConvGeometry& g, std::span<const T> in, std::span<const T> weight,
                    std::span<const T> bias, std::span<T> out) {
  const int oh = g.out_h(), ow = g.out_w(), k = g.kernel;
  for (int n = 0; n < g.batch; ++n)
    for (int o = 0; o < g.out_channels; ++o)
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          T sum = bias[o];
          for (int i = 0; i < g.in_channels; ++i)
            for (int ky = 0; ky < k; ++ky)
              for (int kx = 0; kx < k; ++kx) {
                const int iy = oy * g.stride + ky - g.padding;
                const int ix = ox * g.stride + kx - g.padding;
                if (iy < 0 || iy >= g.in_h || ix < 0 || ix >= g.in_w) continue;
                sum += weight[((static_cast<std::size_t>(o) * g.in_channels + i) * k + ky) * k + kx] *
                       in[((static_cast<std::size_t>(n) * g.in_channels + i) * g.in_h + iy) * g.in_w + ix];
              }
          out[((static_cast<std::size_t>(n) * g.out_channels + o) * oh + oy) * ow + ox] = sum;
        }
}

template <typename T>
void conv2d_backward_input(const ConvGeometry& g, std::span<const T> grad_out, std::span<const T> weight,
                           std::span<T> grad_in) {
  const int oh = g.out_h(), ow = g.out_w(), k = g.kernel;
  for (int n = 0; n < g.batch; ++n)
    for (int o = 0; o < g.out_channels; ++o)
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          const T go = grad_out[((static_cast<std::size_t>(n) * g.out_channels + o) * oh + oy) * ow + ox];
          for (int i = 0; i < g.in_channels; ++i)
            for (int ky = 0; ky < k; ++ky)
              for (int kx = 0; kx < k; ++kx) {
                const int iy = oy * g.stride + ky - g.padding;
                const int ix = ox * g.stride + kx - g.padding;
                if (iy < 0 || iy >= g.in_h || ix < 0 || ix >= g.in_w) continue;
                grad_in[((static_cast<std::size_t>(n) * g.in_channels + i) * g.in_h + iy) * g.in_w + ix] +=
                    weight[((static_cast<std::size_t>(o) * g.in_channels + i) * k + ky) * k + kx] * go;
              }
        }
}

template <typename T>
void conv2d_backward_weight(const ConvGeometry& g, std::span<const T> in, std::span<const T> grad_out,
                            std::span<T> grad_weight, std::span<T> grad_bias) {
  const int oh = g.out_h(), ow = g.out_w(), k = g.kernel;
  for (int n = 0; n < g.batch; ++n)
    for (int o = 0; o < g.out_channels; ++o)
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          const T go = grad_out[((static_cast<std::size_t>(n) * g.out_channels + o) * oh + oy) * ow + ox];
          grad_bias[o] += go;
          for (int i = 0; i < g.in_channels; ++i)
            for (int ky = 0; ky < k; ++ky)
              for (int kx = 0; kx < k; ++kx) {
                const int iy = oy * g.stride + ky - g.padding;
                const int ix = ox * g.stride + kx - g.padding;
                if (iy < 0 || iy >= g.in_h || ix < 0 || ix >= g.in_w) continue;
                grad_weight[((static_cast<std::size_t>(o) * g.in_channels + i) * k + ky) * k + kx] +=
                    go * in[((static_cast<std::size_t>(n) * g.in_channels + i) * g.in_h + iy) * g.in_w + ix];
              }
        }
}

}  // namespace reference

#define DESPEC_INSTANTIATE_CONV(T)                                                                         \
  template void conv2d_forward<T>(const ConvGeometry&, std::span<const T>, std::span<const T>,             \
                                  std::span<const T>, std::span<T>);                                       \
  template void conv2d_backward_input<T>(const ConvGeometry&, std::span<const T>, std::span<const T>,      \
                                         std::span<T>);                                                    \
  template void conv2d_backward_weight<T>(const ConvGeometry&, std::span<const T>, std::span<const T>,     \
                                          std::span<T>, std::span<T>);                                     \
  template void reference::conv2d_forward<T>(const ConvGeometry&, std::span<const T>, std::span<const T>,  \
                                             std::span<const T>, std::span<T>);                            \
  template void reference::conv2d_backward_input<T>(const ConvGeometry&, std::span<const T>,               \
                                                    std::span<const T>, std::span<T>);                     \
  template void reference::conv2d_backward_weight<T>(const ConvGeometry&, std::span<const T>,              \
                                                     std::span<const T>, std::span<T>, std::span<T>);

DESPEC_INSTANTIATE_CONV(float)
DESPEC_INSTANTIATE_CONV(double)

}  // namespace despec::kernels
