/*
 * Copyright 2026 The sasr Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef SASR_AUTODIFF_HPP
#define SASR_AUTODIFF_HPP

#include "sasr/image.hpp"

#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

namespace sasr::ad {

/// Tape used after backward() or backward() called twice.
class LifecycleError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class Tape;

/// Handle to a node recorded on a Tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Matrix& value() const;
  Image image() const;
  double scalar() const;
  Index channels() const;
  Index height() const;
  Index width() const;
};

/**
 * Linear reverse-mode tape.
 *
 * Every node holds a value laid out as a C x (H*W) row-major matrix (the
 * Image storage layout) plus its spatial extent; parameters and dense
 * vectors use H = rows, W = 1 conventions of the recording op. backward()
 * walks the nodes in reverse and adds parameter gradients into the slots
 * given to parameter(). A tape is single-use.
 */
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(const Image& img);
  Var constant(Matrix value);
  /// Trainable leaf; backward() accumulates into *grad (same shape as value).
  Var parameter(const Matrix& value, Matrix* grad);
  /// Leaf whose gradient is kept on the tape (read with grad()).
  Var variable(const Image& img);

  Var conv2d(Var x, Var weight, Var bias, Index stride);
  Var add(Var a, Var b);
  Var concat_channels(const std::vector<Var>& parts);
  Var relu(Var x);
  Var leaky_relu(Var x, double slope);
  Var sigmoid(Var x);
  /// y = weight * flatten(x) + bias; weight is out x (C*H*W), bias out x 1.
  Var dense(Var x, Var weight, Var bias);
  /// Fixed linear bicubic resize to (height, width).
  Var resize(Var x, Index height, Index width);
  Var scale(Var x, double factor);
  /// sum of w .* x over all elements, a 1x1 node; w has x's value shape.
  Var dot(Var x, const Matrix& w);
  Var sum(const std::vector<Var>& scalars);

  /// sum h * |target - x|, a 1x1 node.
  Var weighted_l1(Var x, const Image& target, const Image& h);
  /// sum h * sqrt((target - x)^2 + eps^2), a 1x1 node.
  Var weighted_charbonnier(Var x, const Image& target, const Image& h, double eps);
  /// -log(clamp(p)), p a 1x1 node.
  Var neg_log(Var p, double p_min);
  /// -log(1 - clamp(p)), p a 1x1 node.
  Var neg_log1m(Var p, double p_min);
  /// Clamps a 1x1 probability to [p_min, 1 - p_min]; zero gradient when clamped.
  Var clamp_probability(Var p, double p_min);

  void backward(Var root);
  /// Zero-filled when no gradient reached `v`.
  Matrix grad(Var v) const;
  Image grad_image(Var v) const;

  std::size_t size() const { return nodes_.size(); }

 private:
  friend struct Var;

  struct Node {
    Matrix value;
    Matrix grad;
    Index height = 1;
    Index width = 1;
    bool needs_grad = false;
    Matrix* sink = nullptr;
    std::function<void(Tape&, std::size_t)> backward;
  };

  Var push(Matrix value, Index height, Index width, bool needs_grad);
  Node& node(Var v);
  const Node& node(Var v) const;
  void check_open() const;
  Matrix& grad_slot(std::size_t id);

  std::vector<Node> nodes_;
  bool consumed_ = false;
};

}  // namespace sasr::ad

#endif  // SASR_AUTODIFF_HPP
