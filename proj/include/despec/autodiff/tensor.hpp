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

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "despec/error.hpp"

namespace despec::ad {

/// NCHW shape; lower-rank tensors leave leading dimensions at 1.
struct Shape {
  int n = 1, c = 1, h = 1, w = 1;

  std::size_t numel() const {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  bool operator==(const Shape&) const = default;
  std::string str() const {
    return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," +
           std::to_string(w) + ")";
  }
};

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;  // empty until a gradient reaches this node
  bool requires_grad = false;
  std::uint64_t tape_id = 0;  // 0 for leaves

  void ensure_grad() {
    if (grad.empty()) grad.assign(value.size(), T(0));
  }
};

/// Shared handle to a node. Copies alias the same storage.
template <typename T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T(0)) : node_(std::make_shared<Node<T>>()) {
    node_->shape = shape;
    node_->value.assign(shape.numel(), fill);
  }
  Tensor(Shape shape, std::vector<T> values) : node_(std::make_shared<Node<T>>()) {
    if (values.size() != shape.numel()) {
      throw ShapeError("tensor data length " + std::to_string(values.size()) + " does not match shape " +
                       shape.str());
    }
    node_->shape = shape;
    node_->value = std::move(values);
  }

  // Trainable leaf.
  static Tensor parameter(Shape shape, T fill = T(0)) {
    Tensor t(shape, fill);
    t.node_->requires_grad = true;
    return t;
  }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t numel() const { return node_->value.size(); }
  std::span<T> data() { return node_->value; }
  std::span<const T> data() const { return node_->value; }
  std::span<T> grad() { return node_->grad; }
  std::span<const T> grad() const { return node_->grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  bool requires_grad() const { return node_->requires_grad; }
  bool is_leaf() const { return node_->tape_id == 0; }
  T item() const {
    if (numel() != 1) throw ShapeError("item() on a tensor with " + std::to_string(numel()) + " elements");
    return node_->value[0];
  }
  void zero_grad() {
    if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), T(0));
  }

  // Copy of the values without autograd history.
  Tensor detach() const { return Tensor(shape(), node_->value); }

  const std::shared_ptr<Node<T>>& node() const { return node_; }

 private:
  std::shared_ptr<Node<T>> node_;
};

/// Records backward closures of the ops executed against it. One backward
/// per recording; reset() clears it for the next step.
template <typename T>
class Tape {
 public:
  explicit Tape(bool recording = true) : recording_(recording), id_(next_id()) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return recording_; }
  std::uint64_t id() const { return id_; }
  std::size_t size() const { return entries_.size(); }

  void record(std::function<void()> backward_fn) { entries_.push_back(std::move(backward_fn)); }

  void backward(const Tensor<T>& loss) {
    if (!loss.defined() || loss.numel() != 1) throw InvariantError("backward: loss must be a scalar tensor");
    if (!loss.requires_grad() || loss.node()->tape_id != id_) {
      throw InvariantError("backward on a detached tensor");
    }
    if (consumed_) throw InvariantError("backward called twice without reset");
    consumed_ = true;
    loss.node()->ensure_grad();
    loss.node()->grad[0] = T(1);
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) (*it)();
  }

  void reset() {
    entries_.clear();
    consumed_ = false;
  }

 private:
  static std::uint64_t next_id() {
    static std::atomic<std::uint64_t> counter{1};
    return counter.fetch_add(1);
  }

  bool recording_;
  std::uint64_t id_;
  bool consumed_ = false;
  std::vector<std::function<void()>> entries_;
};

}  // namespace despec::ad
