// include/crossemo/model/autodiff.h

// Copyright 2026  The crossemo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Reverse-mode differentiation over dense row-major tensors.
// Every op builds a node holding its output and a closure that pushes the
// output gradient into its parents. Layers are fused ops with hand-written
// backward passes, so graphs stay shallow.

#ifndef CROSSEMO_MODEL_AUTODIFF_H_
#define CROSSEMO_MODEL_AUTODIFF_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace crossemo::ad {

using Shape = std::vector<int>;

size_t NumElements(const Shape &shape);
std::string ShapeString(const Shape &shape);

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;  // empty until first touched
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node &)> backward;

  size_t size() const { return value.size(); }
  /// Gradient buffer, zero-filled on first use.
  T *mutable_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), T(0));
    return grad.data();
  }
};

template <typename T>
using Var = std::shared_ptr<Node<T>>;

template <typename T>
Var<T> Leaf(Shape shape, std::vector<T> value, bool requires_grad = false);

/// Runs reverse accumulation from a scalar root (seed gradient 1).
template <typename T>
void Backward(const Var<T> &root);

/// x[B, C, H, W] * w[O, C, k, k] + b[O], stride 1, zero "same" padding
/// (odd k only).
template <typename T>
Var<T> Conv2d(const Var<T> &x, const Var<T> &w, const Var<T> &b);

template <typename T>
Var<T> Relu(const Var<T> &x);

/// 2x2 max pooling with stride 2 on the last two axes. An axis of length 1
/// is left as is; an odd trailing row or column is dropped.
template <typename T>
Var<T> MaxPool2d(const Var<T> &x);

/// [B, C, H, W] -> [B, H, C * W]: the H axis becomes time.
template <typename T>
Var<T> ConvToSequence(const Var<T> &x);

/// x[..., F] w[F, O] + b[O].
template <typename T>
Var<T> Dense(const Var<T> &x, const Var<T> &w, const Var<T> &b);

template <typename T>
struct BatchNormState {
  std::vector<T> mean;
  std::vector<T> var;
};

/// Normalizes each feature (last axis) over all leading positions. Train
/// mode uses batch statistics and updates `state` with momentum (running =
/// momentum * running + (1 - momentum) * batch); eval mode uses `state`.
template <typename T>
Var<T> BatchNorm(const Var<T> &x, const Var<T> &gamma, const Var<T> &beta,
                 BatchNormState<T> *state, bool train, T momentum = T(0.9), T eps = T(1e-5));

/// Inverted dropout. The mask is a pure function of `seed`.
template <typename T>
Var<T> Dropout(const Var<T> &x, double rate, bool train, uint64_t seed);

/// One LSTM direction over x[B, T, F] -> [B, T, H]. Gate blocks in wx[F, 4H],
/// wh[H, 4H], b[4H] are ordered input, forget, cell, output. With `reverse`
/// the recurrence runs from the last step to the first.
template <typename T>
Var<T> Lstm(const Var<T> &x, const Var<T> &wx, const Var<T> &wh, const Var<T> &b, bool reverse);

/// Concatenates along the last axis; leading axes must agree.
template <typename T>
Var<T> ConcatLast(const Var<T> &a, const Var<T> &b);

/// Additive attention over seq[B, T, D]: e_t = v . tanh(h_t w + b),
/// alpha = softmax_t(e), out = sum_t alpha_t h_t. Returns [B, D]; the
/// weights [B, T] are copied to `weights` when given.
template <typename T>
Var<T> Attention(const Var<T> &seq, const Var<T> &w, const Var<T> &b, const Var<T> &v,
                 std::vector<T> *weights = nullptr);

/// Mean over the batch of -log softmax(logits)[label]. Returns shape [1].
template <typename T>
Var<T> SoftmaxCrossEntropy(const Var<T> &logits, const std::vector<int> &labels);

/// sum_i x_i c_i for a constant c; a scalar probe for gradient checks.
template <typename T>
Var<T> WeightedSum(const Var<T> &x, const std::vector<T> &c);

}  // namespace crossemo::ad

#endif  // CROSSEMO_MODEL_AUTODIFF_H_
