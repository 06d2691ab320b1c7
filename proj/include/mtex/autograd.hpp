/* Copyright 2026 The mtex Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef MTEX_AUTOGRAD_HPP_
#define MTEX_AUTOGRAD_HPP_

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "mtex/tensor.hpp"

// Minimal reverse-mode differentiation over rank-3 (channels, height, width)
// image tensors. Every op records a closure that accumulates input gradients;
// `backward` replays them in reverse topological order.
namespace mtex::ag {

struct Node {
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;

  // Zero-initialized on first use.
  Tensor& grad_buffer();
};

class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  const Tensor& value() const { return node_->value; }
  Tensor& mutable_value() { return node_->value; }
  const Tensor& grad() const { return node_->grad; }
  const Shape& shape() const { return node_->value.shape(); }
  bool requires_grad() const { return node_->requires_grad; }
  bool defined() const { return static_cast<bool>(node_); }
  double item() const;
  void zero_grad();

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

Var constant(Tensor value);
// Gradient-tracking leaf (an optimized image or a trainable parameter).
Var leaf(Tensor value);

// Seeds d(root)/d(root) = 1 and accumulates into every reachable leaf.
void backward(const Var& root);

bool grad_enabled();

// Ops built while a guard is alive record no backward closures.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Square odd kernel, stride 1, zero "same" padding.
// weight: (out, in, k, k); bias: (out).
Var conv2d(const Var& x, const Var& weight, const Var& bias);
Var relu(const Var& x);
Var leaky_relu(const Var& x, double slope);
Var sigmoid(const Var& x);
// 2x2 windows, stride 2, odd trailing rows/columns dropped.
Var avg_pool2(const Var& x);
Var max_pool2(const Var& x);
Var upsample_nearest2(const Var& x);
Var concat_channels(const std::vector<Var>& parts);
Var gather_channels(const Var& x, std::span<const int> channels);
// (x_c - mean_c) / stddev_c
Var normalize_channels(const Var& x, std::span<const double> mean, std::span<const double> stddev);
// x_c / sqrt(mean over channels of x^2 + eps), per pixel.
Var response_norm(const Var& x, double eps);
// (C, H, W) -> (C, C) Gram matrix F F^T / (H W).
Var gram(const Var& x);
// weight * ||x - target||^2, as a scalar.
Var weighted_squared_distance(const Var& x, const Tensor& target, double weight);
Var sum_squares(const Var& x);
Var add(const Var& a, const Var& b);
Var add_n(const std::vector<Var>& terms);
Var scale(const Var& x, double factor);

}  // namespace mtex::ag

#endif  // MTEX_AUTOGRAD_HPP_
