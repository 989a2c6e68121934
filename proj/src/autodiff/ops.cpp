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

#include "despec/autodiff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <string>

#include "despec/autodiff/conv_kernels.hpp"

namespace despec::ad {

namespace {

constexpr std::ptrdiff_t kParallelThreshold = 1 << 15;

template <typename T>
Tensor<T> make_output(Tape<T>& tape, Shape shape, std::initializer_list<const Tensor<T>*> inputs) {
  Tensor<T> out(shape);
  bool needs = false;
  if (tape.recording()) {
    for (const auto* in : inputs) needs = needs || in->requires_grad();
  }
  out.node()->requires_grad = needs;
  if (needs) out.node()->tape_id = tape.id();
  return out;
}

template <typename T>
void require_same(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (!(a.shape() == b.shape())) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape().str() + " vs " + b.shape().str());
  }
}

}  // namespace

template <typename T>
Tensor<T> conv2d(Tape<T>& tape, const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, int stride,
                 int padding) {
  const Shape xs = x.shape(), ws = w.shape();
  if (ws.h != ws.w || (ws.h != 1 && ws.h != 3)) throw ShapeError("conv2d: kernel must be 1x1 or 3x3");
  if (ws.c != xs.c) {
    throw ShapeError("conv2d: input has " + std::to_string(xs.c) + " channels, kernel expects " +
                     std::to_string(ws.c));
  }
  if (b.numel() != static_cast<std::size_t>(ws.n)) throw ShapeError("conv2d: bias size mismatch");
  if (stride != 1 && stride != 2) throw ShapeError("conv2d: stride must be 1 or 2");

  kernels::ConvGeometry g{xs.n, xs.c, xs.h, xs.w, ws.n, ws.h, stride, padding};
  if (g.out_h() < 1 || g.out_w() < 1) throw ShapeError("conv2d: input too small for kernel");
  Tensor<T> out = make_output(tape, Shape{xs.n, ws.n, g.out_h(), g.out_w()}, {&x, &w, &b});
  kernels::conv2d_forward<T>(g, x.data(), w.data(), b.data(), out.data());

  if (out.requires_grad()) {
    tape.record([g, xn = x.node(), wn = w.node(), bn = b.node(), on = out.node()] {
      if (on->grad.empty()) return;
      if (xn->requires_grad) {
        xn->ensure_grad();
        kernels::conv2d_backward_input<T>(g, on->grad, wn->value, xn->grad);
      }
      if (wn->requires_grad || bn->requires_grad) {
        wn->ensure_grad();
        bn->ensure_grad();
        kernels::conv2d_backward_weight<T>(g, xn->value, on->grad, wn->grad, bn->grad);
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> relu(Tape<T>& tape, const Tensor<T>& x) {
  Tensor<T> out = make_output(tape, x.shape(), {&x});
  auto xv = x.data();
  auto ov = out.data();
  const auto n = static_cast<std::ptrdiff_t>(xv.size());
#pragma omp parallel for if (n > kParallelThreshold)
  for (std::ptrdiff_t i = 0; i < n; ++i) ov[i] = xv[i] > T(0) ? xv[i] : T(0);
  if (out.requires_grad()) {
    tape.record([xn = x.node(), on = out.node()] {
      if (on->grad.empty() || !xn->requires_grad) return;
      xn->ensure_grad();
      const auto m = static_cast<std::ptrdiff_t>(on->grad.size());
      T* gx = xn->grad.data();
      const T* go = on->grad.data();
      const T* xv = xn->value.data();
#pragma omp parallel for if (m > kParallelThreshold)
      for (std::ptrdiff_t i = 0; i < m; ++i) gx[i] += xv[i] > T(0) ? go[i] : T(0);
    });
  }
  return out;
}

template <typename T>
Tensor<T> sigmoid(Tape<T>& tape, const Tensor<T>& x) {
  Tensor<T> out = make_output(tape, x.shape(), {&x});
  auto xv = x.data();
  auto ov = out.data();
  const auto n = static_cast<std::ptrdiff_t>(xv.size());
#pragma omp parallel for if (n > kParallelThreshold)
  for (std::ptrdiff_t i = 0; i < n; ++i) ov[i] = T(1) / (T(1) + std::exp(-xv[i]));
  if (out.requires_grad()) {
    tape.record([xn = x.node(), on = out.node()] {
      if (on->grad.empty() || !xn->requires_grad) return;
      xn->ensure_grad();
      for (std::size_t i = 0; i < on->grad.size(); ++i) {
        const T y = on->value[i];
        xn->grad[i] += on->grad[i] * y * (T(1) - y);
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> avg_pool2x(Tape<T>& tape, const Tensor<T>& x) {
  const Shape s = x.shape();
  if (s.h % 2 || s.w % 2) throw ShapeError("avg_pool2x: spatial size must be even, got " + s.str());
  const Shape os{s.n, s.c, s.h / 2, s.w / 2};
  Tensor<T> out = make_output(tape, os, {&x});
  auto xv = x.data();
  auto ov = out.data();
  const int planes = s.n * s.c;
  for (int p = 0; p < planes; ++p) {
    for (int y = 0; y < os.h; ++y) {
      for (int xx = 0; xx < os.w; ++xx) {
        const std::size_t base = (static_cast<std::size_t>(p) * s.h + 2 * y) * s.w + 2 * xx;
        ov[(static_cast<std::size_t>(p) * os.h + y) * os.w + xx] =
            T(0.25) * (xv[base] + xv[base + 1] + xv[base + s.w] + xv[base + s.w + 1]);
      }
    }
  }
  if (out.requires_grad()) {
    tape.record([s, os, planes, xn = x.node(), on = out.node()] {
      if (on->grad.empty() || !xn->requires_grad) return;
      xn->ensure_grad();
      for (int p = 0; p < planes; ++p) {
        for (int y = 0; y < os.h; ++y) {
          for (int xx = 0; xx < os.w; ++xx) {
            const T g = T(0.25) * on->grad[(static_cast<std::size_t>(p) * os.h + y) * os.w + xx];
            const std::size_t base = (static_cast<std::size_t>(p) * s.h + 2 * y) * s.w + 2 * xx;
            xn->grad[base] += g;
            xn->grad[base + 1] += g;
            xn->grad[base + s.w] += g;
            xn->grad[base + s.w + 1] += g;
          }
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> upsample2x(Tape<T>& tape, const Tensor<T>& x) {
  const Shape s = x.shape();
  const Shape os{s.n, s.c, s.h * 2, s.w * 2};
  Tensor<T> out = make_output(tape, os, {&x});
  auto xv = x.data();
  auto ov = out.data();
  const int planes = s.n * s.c;
#pragma omp parallel for if (static_cast<std::ptrdiff_t>(os.numel()) > kParallelThreshold)
  for (int p = 0; p < planes; ++p) {
    for (int y = 0; y < os.h; ++y) {
      const T* src = xv.data() + (static_cast<std::size_t>(p) * s.h + y / 2) * s.w;
      T* dst = ov.data() + (static_cast<std::size_t>(p) * os.h + y) * os.w;
      for (int xx = 0; xx < os.w; ++xx) dst[xx] = src[xx / 2];
    }
  }
  if (out.requires_grad()) {
    tape.record([s, os, planes, xn = x.node(), on = out.node()] {
      if (on->grad.empty() || !xn->requires_grad) return;
      xn->ensure_grad();
#pragma omp parallel for if (static_cast<std::ptrdiff_t>(os.numel()) > kParallelThreshold)
      for (int p = 0; p < planes; ++p) {
        for (int y = 0; y < s.h; ++y) {
          T* dst = xn->grad.data() + (static_cast<std::size_t>(p) * s.h + y) * s.w;
          const T* r0 = on->grad.data() + (static_cast<std::size_t>(p) * os.h + 2 * y) * os.w;
          const T* r1 = r0 + os.w;
          for (int xx = 0; xx < s.w; ++xx) dst[xx] += (r0[2 * xx] + r0[2 * xx + 1]) + (r1[2 * xx] + r1[2 * xx + 1]);
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> concat_channels(Tape<T>& tape, const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw ShapeError("concat_channels: no inputs");
  const Shape first = parts.front().shape();
  int channels = 0;
  bool needs = false;
  for (const auto& p : parts) {
    const Shape s = p.shape();
    if (s.n != first.n || s.h != first.h || s.w != first.w) {
      throw ShapeError("concat_channels: incompatible shapes " + first.str() + " vs " + s.str());
    }
    channels += s.c;
    needs = needs || p.requires_grad();
  }
  const Shape os{first.n, channels, first.h, first.w};
  Tensor<T> out(os);
  if (tape.recording() && needs) {
    out.node()->requires_grad = true;
    out.node()->tape_id = tape.id();
  }
  const std::size_t plane = static_cast<std::size_t>(first.h) * first.w;
  auto ov = out.data();
  for (int n = 0; n < first.n; ++n) {
    std::size_t offset = static_cast<std::size_t>(n) * channels * plane;
    for (const auto& p : parts) {
      const std::size_t chunk = static_cast<std::size_t>(p.shape().c) * plane;
      auto pv = p.data();
      std::copy(pv.begin() + n * chunk, pv.begin() + (n + 1) * chunk, ov.begin() + offset);
      offset += chunk;
    }
  }
  if (out.requires_grad()) {
    std::vector<std::shared_ptr<Node<T>>> nodes;
    for (const auto& p : parts) nodes.push_back(p.node());
    tape.record([nodes, channels, plane, batch = first.n, on = out.node()] {
      if (on->grad.empty()) return;
      for (int n = 0; n < batch; ++n) {
        std::size_t offset = static_cast<std::size_t>(n) * channels * plane;
        for (const auto& pn : nodes) {
          const std::size_t chunk = static_cast<std::size_t>(pn->shape.c) * plane;
          if (pn->requires_grad) {
            pn->ensure_grad();
            T* dst = pn->grad.data() + n * chunk;
            const T* src = on->grad.data() + offset;
            for (std::size_t i = 0; i < chunk; ++i) dst[i] += src[i];
          }
          offset += chunk;
        }
      }
    });
  }
  return out;
}

namespace {

enum class Binary { Add, Sub, Mul };

template <typename T>
Tensor<T> binary_op(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b, Binary kind, const char* name) {
  require_same(a, b, name);
  Tensor<T> out = make_output(tape, a.shape(), {&a, &b});
  auto av = a.data();
  auto bv = b.data();
  auto ov = out.data();
  for (std::size_t i = 0; i < ov.size(); ++i) {
    switch (kind) {
      case Binary::Add: ov[i] = av[i] + bv[i]; break;
      case Binary::Sub: ov[i] = av[i] - bv[i]; break;
      case Binary::Mul: ov[i] = av[i] * bv[i]; break;
    }
  }
  if (out.requires_grad()) {
    tape.record([kind, an = a.node(), bn = b.node(), on = out.node()] {
      if (on->grad.empty()) return;
      const std::size_t n = on->grad.size();
      if (an->requires_grad) {
        an->ensure_grad();
        for (std::size_t i = 0; i < n; ++i) an->grad[i] += kind == Binary::Mul ? on->grad[i] * bn->value[i] : on->grad[i];
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        for (std::size_t i = 0; i < n; ++i) {
          bn->grad[i] += kind == Binary::Mul ? on->grad[i] * an->value[i]
                         : kind == Binary::Sub ? -on->grad[i]
                                               : on->grad[i];
        }
      }
    });
  }
  return out;
}

}  // namespace

template <typename T>
Tensor<T> add(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b) {
  return binary_op(tape, a, b, Binary::Add, "add");
}
template <typename T>
Tensor<T> sub(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b) {
  return binary_op(tape, a, b, Binary::Sub, "sub");
}
template <typename T>
Tensor<T> mul(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b) {
  return binary_op(tape, a, b, Binary::Mul, "mul");
}

template <typename T>
Tensor<T> scale(Tape<T>& tape, const Tensor<T>& a, T s) {
  Tensor<T> out = make_output(tape, a.shape(), {&a});
  auto av = a.data();
  auto ov = out.data();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] * s;
  if (out.requires_grad()) {
    tape.record([s, an = a.node(), on = out.node()] {
      if (on->grad.empty() || !an->requires_grad) return;
      an->ensure_grad();
      for (std::size_t i = 0; i < on->grad.size(); ++i) an->grad[i] += on->grad[i] * s;
    });
  }
  return out;
}

template <typename T>
Tensor<T> clamp01(Tape<T>& tape, const Tensor<T>& x) {
  Tensor<T> out = make_output(tape, x.shape(), {&x});
  auto xv = x.data();
  auto ov = out.data();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = std::clamp(xv[i], T(0), T(1));
  if (out.requires_grad()) {
    tape.record([xn = x.node(), on = out.node()] {
      if (on->grad.empty() || !xn->requires_grad) return;
      xn->ensure_grad();
      for (std::size_t i = 0; i < on->grad.size(); ++i) {
        const T v = xn->value[i];
        if (v > T(0) && v < T(1)) xn->grad[i] += on->grad[i];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> mse(Tape<T>& tape, const Tensor<T>& pred, const Tensor<T>& target) {
  require_same(pred, target, "mse");
  Tensor<T> out = make_output(tape, Shape{}, {&pred, &target});
  auto pv = pred.data();
  auto tv = target.data();
  double acc = 0.0;
  for (std::size_t i = 0; i < pv.size(); ++i) {
    const double d = static_cast<double>(pv[i]) - static_cast<double>(tv[i]);
    acc += d * d;
  }
  out.data()[0] = static_cast<T>(acc / static_cast<double>(pv.size()));
  if (out.requires_grad()) {
    tape.record([pn = pred.node(), tn = target.node(), on = out.node()] {
      if (on->grad.empty()) return;
      const std::size_t n = pn->value.size();
      const T k = T(2) * on->grad[0] / static_cast<T>(n);
      if (pn->requires_grad) pn->ensure_grad();
      if (tn->requires_grad) tn->ensure_grad();
      for (std::size_t i = 0; i < n; ++i) {
        const T d = k * (pn->value[i] - tn->value[i]);
        if (pn->requires_grad) pn->grad[i] += d;
        if (tn->requires_grad) tn->grad[i] -= d;
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> weighted_sum(Tape<T>& tape, const std::vector<Tensor<T>>& scalars, const std::vector<T>& weights) {
  if (scalars.size() != weights.size() || scalars.empty()) {
    throw ShapeError("weighted_sum: need one weight per scalar");
  }
  bool needs = false;
  T total = T(0);
  for (std::size_t i = 0; i < scalars.size(); ++i) {
    if (scalars[i].numel() != 1) throw ShapeError("weighted_sum: inputs must be scalars");
    total += weights[i] * scalars[i].item();
    needs = needs || scalars[i].requires_grad();
  }
  Tensor<T> out(Shape{}, total);
  if (tape.recording() && needs) {
    out.node()->requires_grad = true;
    out.node()->tape_id = tape.id();
    std::vector<std::shared_ptr<Node<T>>> nodes;
    for (const auto& s : scalars) nodes.push_back(s.node());
    tape.record([nodes, weights, on = out.node()] {
      if (on->grad.empty()) return;
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (!nodes[i]->requires_grad) continue;
        nodes[i]->ensure_grad();
        nodes[i]->grad[0] += weights[i] * on->grad[0];
      }
    });
  }
  return out;
}

#define DESPEC_INSTANTIATE_OPS(T)                                                                        \
  template Tensor<T> conv2d(Tape<T>&, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, int, int);  \
  template Tensor<T> relu(Tape<T>&, const Tensor<T>&);                                                   \
  template Tensor<T> sigmoid(Tape<T>&, const Tensor<T>&);                                                \
  template Tensor<T> avg_pool2x(Tape<T>&, const Tensor<T>&);                                             \
  template Tensor<T> upsample2x(Tape<T>&, const Tensor<T>&);                                             \
  template Tensor<T> concat_channels(Tape<T>&, const std::vector<Tensor<T>>&);                           \
  template Tensor<T> add(Tape<T>&, const Tensor<T>&, const Tensor<T>&);                                  \
  template Tensor<T> sub(Tape<T>&, const Tensor<T>&, const Tensor<T>&);                                  \
  template Tensor<T> mul(Tape<T>&, const Tensor<T>&, const Tensor<T>&);                                  \
  template Tensor<T> scale(Tape<T>&, const Tensor<T>&, T);                                               \
  template Tensor<T> clamp01(Tape<T>&, const Tensor<T>&);                                                \
  template Tensor<T> mse(Tape<T>&, const Tensor<T>&, const Tensor<T>&);                                  \
  template Tensor<T> weighted_sum(Tape<T>&, const std::vector<Tensor<T>>&, const std::vector<T>&);

DESPEC_INSTANTIATE_OPS(float)
DESPEC_INSTANTIATE_OPS(double)

}  // namespace despec::ad
