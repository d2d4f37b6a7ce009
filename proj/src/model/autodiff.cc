// src/model/autodiff.cc

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

#include "crossemo/model/autodiff.h"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "crossemo/base/error.h"
#include "crossemo/base/util.h"

namespace crossemo::ad {

namespace {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MMap = Eigen::Map<Mat<T>>;
template <typename T>
using CMap = Eigen::Map<const Mat<T>>;
template <typename T>
using VMap = Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>;
template <typename T>
using CVMap = Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>;

void Check(bool ok, const std::string &what) {
  if (!ok) throw Error(ErrorCode::kShapeMismatch, what);
}

template <typename T>
Var<T> MakeNode(Shape shape, std::vector<Var<T>> parents) {
  auto n = std::make_shared<Node<T>>();
  n->shape = std::move(shape);
  n->value.assign(NumElements(n->shape), T(0));
  for (const auto &p : parents) n->requires_grad = n->requires_grad || p->requires_grad;
  n->parents = std::move(parents);
  return n;
}

// Gradient buffer of parent i, or nullptr when it needs none.
template <typename T>
T *ParentGrad(Node<T> &self, size_t i) {
  Node<T> &p = *self.parents[i];
  return p.requires_grad ? p.mutable_grad() : nullptr;
}

template <typename T>
T Sigmoid(T x) {
  return T(1) / (T(1) + std::exp(-x));
}

}  // namespace

size_t NumElements(const Shape &shape) {
  size_t n = 1;
  for (int d : shape) n *= static_cast<size_t>(d);
  return n;
}

std::string ShapeString(const Shape &shape) {
  std::string s = "[";
  for (size_t i = 0; i < shape.size(); ++i) s += (i ? ", " : "") + std::to_string(shape[i]);
  return s + "]";
}

template <typename T>
Var<T> Leaf(Shape shape, std::vector<T> value, bool requires_grad) {
  Check(NumElements(shape) == value.size(),
        "leaf of shape " + ShapeString(shape) + " given " + std::to_string(value.size()) + " cells");
  auto n = std::make_shared<Node<T>>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  n->requires_grad = requires_grad;
  return n;
}

template <typename T>
void Backward(const Var<T> &root) {
  Check(root->size() == 1, "backward needs a scalar root, got " + ShapeString(root->shape));
  if (!root->requires_grad) return;
  // Iterative post-order DFS gives a topological order.
  std::vector<Node<T> *> order;
  std::unordered_set<Node<T> *> seen;
  std::vector<std::pair<Node<T> *, size_t>> stack = {{root.get(), 0}};
  seen.insert(root.get());
  while (!stack.empty()) {
    auto &[node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<T> *p = node->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.push_back({p, 0});
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  root->mutable_grad()[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T> *n = *it;
    if (n->backward && !n->grad.empty()) n->backward(*n);
  }
}

template <typename T>
Var<T> Conv2d(const Var<T> &x, const Var<T> &w, const Var<T> &b) {
  Check(x->shape.size() == 4 && w->shape.size() == 4 && b->shape.size() == 1,
        "conv2d expects x[B,C,H,W], w[O,C,k,k], b[O]");
  const int B = x->shape[0], C = x->shape[1], H = x->shape[2], W = x->shape[3];
  const int O = w->shape[0], K = w->shape[2];
  Check(w->shape[1] == C && w->shape[3] == K && K % 2 == 1 && b->shape[0] == O,
        "conv2d weight " + ShapeString(w->shape) + " does not fit input " + ShapeString(x->shape));
  const int pad = K / 2;
  const int rows = C * K * K, hw = H * W;

  auto out = MakeNode<T>({B, O, H, W}, {x, w, b});
  auto cols = std::make_shared<std::vector<T>>(static_cast<size_t>(rows) * hw);
  const bool keep = out->requires_grad;
  auto all_cols = std::make_shared<std::vector<T>>(keep ? static_cast<size_t>(B) * rows * hw : 0);

  auto im2col = [=](const T *img, T *dst) {
    for (int c = 0; c < C; ++c)
      for (int ki = 0; ki < K; ++ki)
        for (int kj = 0; kj < K; ++kj) {
          T *row = dst + static_cast<size_t>((c * K + ki) * K + kj) * hw;
          for (int h = 0; h < H; ++h) {
            const int sh = h + ki - pad;
            T *r = row + static_cast<size_t>(h) * W;
            if (sh < 0 || sh >= H) {
              std::fill(r, r + W, T(0));
              continue;
            }
            const T *src = img + (static_cast<size_t>(c) * H + sh) * W;
            for (int ww = 0; ww < W; ++ww) {
              const int sw = ww + kj - pad;
              r[ww] = (sw < 0 || sw >= W) ? T(0) : src[sw];
            }
          }
        }
  };

  CMap<T> wm(w->value.data(), O, rows);
  for (int n = 0; n < B; ++n) {
    T *c = keep ? all_cols->data() + static_cast<size_t>(n) * rows * hw : cols->data();
    im2col(x->value.data() + static_cast<size_t>(n) * C * hw, c);
    MMap<T> o(out->value.data() + static_cast<size_t>(n) * O * hw, O, hw);
    o.noalias() = wm * CMap<T>(c, rows, hw);
    for (int k = 0; k < O; ++k) o.row(k).array() += b->value[k];
  }

  out->backward = [=](Node<T> &self) {
    T *gx = ParentGrad(self, 0), *gw = ParentGrad(self, 1), *gb = ParentGrad(self, 2);
    const Node<T> &wn = *self.parents[1];
    CMap<T> wmat(wn.value.data(), O, rows);
    Mat<T> dcols(rows, hw);
    for (int n = 0; n < B; ++n) {
      CMap<T> go(self.grad.data() + static_cast<size_t>(n) * O * hw, O, hw);
      CMap<T> c(all_cols->data() + static_cast<size_t>(n) * rows * hw, rows, hw);
      if (gb) VMap<T>(gb, O) += go.rowwise().sum().transpose();
      if (gw) MMap<T>(gw, O, rows).noalias() += go * c.transpose();
      if (!gx) continue;
      dcols.noalias() = wmat.transpose() * go;
      T *dimg = gx + static_cast<size_t>(n) * C * hw;
      for (int ch = 0; ch < C; ++ch)
        for (int ki = 0; ki < K; ++ki)
          for (int kj = 0; kj < K; ++kj) {
            const T *row = dcols.data() + static_cast<size_t>((ch * K + ki) * K + kj) * hw;
            for (int h = 0; h < H; ++h) {
              const int sh = h + ki - pad;
              if (sh < 0 || sh >= H) continue;
              T *dst = dimg + (static_cast<size_t>(ch) * H + sh) * W;
              const T *r = row + static_cast<size_t>(h) * W;
              for (int ww = 0; ww < W; ++ww) {
                const int sw = ww + kj - pad;
                if (sw >= 0 && sw < W) dst[sw] += r[ww];
              }
            }
          }
    }
  };
  return out;
}

template <typename T>
Var<T> Relu(const Var<T> &x) {
  auto out = MakeNode<T>(x->shape, {x});
  for (size_t i = 0; i < x->size(); ++i) out->value[i] = x->value[i] > T(0) ? x->value[i] : T(0);
  out->backward = [](Node<T> &self) {
    T *gx = ParentGrad(self, 0);
    const auto &xv = self.parents[0]->value;
    for (size_t i = 0; i < self.size(); ++i) {
      if (xv[i] > T(0)) gx[i] += self.grad[i];
    }
  };
  return out;
}

template <typename T>
Var<T> MaxPool2d(const Var<T> &x) {
  Check(x->shape.size() == 4, "maxpool expects [B,C,H,W]");
  const int B = x->shape[0], C = x->shape[1], H = x->shape[2], W = x->shape[3];
  const int ph = H >= 2 ? 2 : 1, pw = W >= 2 ? 2 : 1;
  const int Ho = H / ph, Wo = W / pw;
  auto out = MakeNode<T>({B, C, Ho, Wo}, {x});
  auto argmax = std::make_shared<std::vector<size_t>>(out->size());
  size_t k = 0;
  for (int p = 0; p < B * C; ++p) {
    const size_t base = static_cast<size_t>(p) * H * W;
    for (int i = 0; i < Ho; ++i)
      for (int j = 0; j < Wo; ++j, ++k) {
        size_t best = base + static_cast<size_t>(i * ph) * W + j * pw;
        for (int di = 0; di < ph; ++di)
          for (int dj = 0; dj < pw; ++dj) {
            const size_t idx = base + static_cast<size_t>(i * ph + di) * W + j * pw + dj;
            if (x->value[idx] > x->value[best]) best = idx;
          }
        (*argmax)[k] = best;
        out->value[k] = x->value[best];
      }
  }
  out->backward = [argmax](Node<T> &self) {
    T *gx = ParentGrad(self, 0);
    for (size_t i = 0; i < self.size(); ++i) gx[(*argmax)[i]] += self.grad[i];
  };
  return out;
}

template <typename T>
Var<T> ConvToSequence(const Var<T> &x) {
  Check(x->shape.size() == 4, "conv-to-sequence expects [B,C,H,W]");
  const int B = x->shape[0], C = x->shape[1], H = x->shape[2], W = x->shape[3];
  auto out = MakeNode<T>({B, H, C * W}, {x});
  auto index = [=](int n, int c, int h, int w) {
    return std::make_pair(((static_cast<size_t>(n) * C + c) * H + h) * W + w,
                          (static_cast<size_t>(n) * H + h) * C * W + static_cast<size_t>(c) * W + w);
  };
  for (int n = 0; n < B; ++n)
    for (int c = 0; c < C; ++c)
      for (int h = 0; h < H; ++h)
        for (int w = 0; w < W; ++w) {
          auto [src, dst] = index(n, c, h, w);
          out->value[dst] = x->value[src];
        }
  out->backward = [=](Node<T> &self) {
    T *gx = ParentGrad(self, 0);
    for (int n = 0; n < B; ++n)
      for (int c = 0; c < C; ++c)
        for (int h = 0; h < H; ++h)
          for (int w = 0; w < W; ++w) {
            auto [src, dst] = index(n, c, h, w);
            gx[src] += self.grad[dst];
          }
  };
  return out;
}

template <typename T>
Var<T> Dense(const Var<T> &x, const Var<T> &w, const Var<T> &b) {
  Check(!x->shape.empty() && w->shape.size() == 2 && b->shape.size() == 1,
        "dense expects x[...,F], w[F,O], b[O]");
  const int F = x->shape.back(), O = w->shape[1];
  Check(w->shape[0] == F && b->shape[0] == O,
        "dense weight " + ShapeString(w->shape) + " does not fit input " + ShapeString(x->shape));
  const int N = static_cast<int>(x->size() / F);
  Shape shape = x->shape;
  shape.back() = O;
  auto out = MakeNode<T>(shape, {x, w, b});
  MMap<T> o(out->value.data(), N, O);
  o.noalias() = CMap<T>(x->value.data(), N, F) * CMap<T>(w->value.data(), F, O);
  o.rowwise() += CVMap<T>(b->value.data(), O);
  out->backward = [=](Node<T> &self) {
    T *gx = ParentGrad(self, 0), *gw = ParentGrad(self, 1), *gb = ParentGrad(self, 2);
    CMap<T> go(self.grad.data(), N, O);
    if (gx) MMap<T>(gx, N, F).noalias() += go * CMap<T>(self.parents[1]->value.data(), F, O).transpose();
    if (gw) MMap<T>(gw, F, O).noalias() += CMap<T>(self.parents[0]->value.data(), N, F).transpose() * go;
    if (gb) VMap<T>(gb, O) += go.colwise().sum();
  };
  return out;
}

template <typename T>
Var<T> BatchNorm(const Var<T> &x, const Var<T> &gamma, const Var<T> &beta,
                 BatchNormState<T> *state, bool train, T momentum, T eps) {
  const int F = x->shape.back();
  Check(gamma->size() == static_cast<size_t>(F) && beta->size() == static_cast<size_t>(F),
        "batchnorm parameters do not match feature size " + std::to_string(F));
  const int N = static_cast<int>(x->size() / F);
  if (train && N < 2)
    throw Error(ErrorCode::kBatchTooSmall, "batchnorm in train mode needs at least 2 rows");
  if (state->mean.size() != static_cast<size_t>(F)) {
    state->mean.assign(F, T(0));
    state->var.assign(F, T(1));
  }
  auto out = MakeNode<T>(x->shape, {x, gamma, beta});
  auto xhat = std::make_shared<std::vector<T>>(x->size());
  auto inv_std = std::make_shared<std::vector<T>>(F);
  std::vector<T> mean(F, T(0)), var(F, T(0));
  if (train) {
    for (int n = 0; n < N; ++n)
      for (int f = 0; f < F; ++f) mean[f] += x->value[static_cast<size_t>(n) * F + f];
    for (int f = 0; f < F; ++f) mean[f] /= N;
    for (int n = 0; n < N; ++n)
      for (int f = 0; f < F; ++f) {
        const T d = x->value[static_cast<size_t>(n) * F + f] - mean[f];
        var[f] += d * d;
      }
    for (int f = 0; f < F; ++f) {
      var[f] /= N;
      state->mean[f] = momentum * state->mean[f] + (T(1) - momentum) * mean[f];
      state->var[f] = momentum * state->var[f] +
                      (T(1) - momentum) * var[f] * static_cast<T>(N) / static_cast<T>(N - 1);
    }
  } else {
    mean = state->mean;
    var = state->var;
  }
  for (int f = 0; f < F; ++f) (*inv_std)[f] = T(1) / std::sqrt(var[f] + eps);
  for (int n = 0; n < N; ++n)
    for (int f = 0; f < F; ++f) {
      const size_t i = static_cast<size_t>(n) * F + f;
      (*xhat)[i] = (x->value[i] - mean[f]) * (*inv_std)[f];
      out->value[i] = gamma->value[f] * (*xhat)[i] + beta->value[f];
    }
  out->backward = [=](Node<T> &self) {
    T *gx = ParentGrad(self, 0), *gg = ParentGrad(self, 1), *gbeta = ParentGrad(self, 2);
    const auto &g = self.parents[1]->value;
    std::vector<T> sum_dy(F, T(0)), sum_dy_xhat(F, T(0));
    for (int n = 0; n < N; ++n)
      for (int f = 0; f < F; ++f) {
        const size_t i = static_cast<size_t>(n) * F + f;
        sum_dy[f] += self.grad[i];
        sum_dy_xhat[f] += self.grad[i] * (*xhat)[i];
      }
    if (gg)
      for (int f = 0; f < F; ++f) gg[f] += sum_dy_xhat[f];
    if (gbeta)
      for (int f = 0; f < F; ++f) gbeta[f] += sum_dy[f];
    if (!gx) return;
    for (int n = 0; n < N; ++n)
      for (int f = 0; f < F; ++f) {
        const size_t i = static_cast<size_t>(n) * F + f;
        if (train) {
          gx[i] += g[f] * (*inv_std)[f] *
                   (self.grad[i] - sum_dy[f] / N - (*xhat)[i] * sum_dy_xhat[f] / N);
        } else {
          gx[i] += g[f] * (*inv_std)[f] * self.grad[i];
        }
      }
  };
  return out;
}

template <typename T>
Var<T> Dropout(const Var<T> &x, double rate, bool train, uint64_t seed) {
  if (!(rate >= 0.0 && rate < 1.0))
    throw Error(ErrorCode::kBadRate, "dropout rate " + std::to_string(rate) + " not in [0, 1)");
  if (!train || rate == 0.0) return x;
  auto out = MakeNode<T>(x->shape, {x});
  auto mask = std::make_shared<std::vector<T>>(x->size());
  Rng rng(seed);
  const T keep = static_cast<T>(1.0 / (1.0 - rate));
  for (size_t i = 0; i < x->size(); ++i) {
    (*mask)[i] = rng.Uniform() < rate ? T(0) : keep;
    out->value[i] = x->value[i] * (*mask)[i];
  }
  out->backward = [mask](Node<T> &self) {
    T *gx = ParentGrad(self, 0);
    for (size_t i = 0; i < self.size(); ++i) gx[i] += self.grad[i] * (*mask)[i];
  };
  return out;
}

template <typename T>
Var<T> Lstm(const Var<T> &x, const Var<T> &wx, const Var<T> &wh, const Var<T> &b, bool reverse) {
  Check(x->shape.size() == 3, "lstm expects x[B,T,F], got " + ShapeString(x->shape));
  const int B = x->shape[0], Tn = x->shape[1], F = x->shape[2];
  Check(Tn >= 1, "lstm needs at least one time step");
  Check(wh->shape.size() == 2 && wh->shape[1] == 4 * wh->shape[0], "lstm wh must be [H,4H]");
  const int H = wh->shape[0], G = 4 * H;
  Check(wx->shape == Shape({F, G}) && b->shape == Shape({G}),
        "lstm wx/b do not fit input " + ShapeString(x->shape) + " with hidden " + std::to_string(H));

  auto out = MakeNode<T>({B, Tn, H}, {x, wx, wh, b});
  // Pre-activations from the input for all steps at once.
  Mat<T> xw = CMap<T>(x->value.data(), B * Tn, F) * CMap<T>(wx->value.data(), F, G);
  xw.rowwise() += CVMap<T>(b->value.data(), G);

  // Per step s (processing order): activated gates [B, 4H] and cell [B, H].
  auto gates = std::make_shared<std::vector<Mat<T>>>(Tn, Mat<T>(B, G));
  auto cells = std::make_shared<std::vector<Mat<T>>>(Tn, Mat<T>(B, H));
  CMap<T> whm(wh->value.data(), H, G);
  Mat<T> h_prev = Mat<T>::Zero(B, H), c_prev = Mat<T>::Zero(B, H);
  for (int s = 0; s < Tn; ++s) {
    const int t = reverse ? Tn - 1 - s : s;
    Mat<T> &gt = (*gates)[s];
    for (int n = 0; n < B; ++n) gt.row(n) = xw.row(static_cast<Eigen::Index>(n) * Tn + t);
    gt.noalias() += h_prev * whm;
    Mat<T> &c = (*cells)[s];
    for (int n = 0; n < B; ++n) {
      T *row = gt.row(n).data();
      for (int k = 0; k < H; ++k) {
        const T ig = Sigmoid(row[k]);
        const T fg = Sigmoid(row[H + k]);
        const T cg = std::tanh(row[2 * H + k]);
        const T og = Sigmoid(row[3 * H + k]);
        row[k] = ig;
        row[H + k] = fg;
        row[2 * H + k] = cg;
        row[3 * H + k] = og;
        c(n, k) = fg * c_prev(n, k) + ig * cg;
        const T h = og * std::tanh(c(n, k));
        h_prev(n, k) = h;
        out->value[(static_cast<size_t>(n) * Tn + t) * H + k] = h;
      }
    }
    c_prev = c;
  }

  out->backward = [=](Node<T> &self) {
    T *gx = ParentGrad(self, 0), *gwx = ParentGrad(self, 1), *gwh = ParentGrad(self, 2),
      *gb = ParentGrad(self, 3);
    CMap<T> whmat(self.parents[2]->value.data(), H, G);
    Mat<T> dxw(B * Tn, G);
    Mat<T> dh_next = Mat<T>::Zero(B, H), dc_next = Mat<T>::Zero(B, H);
    Mat<T> dg(B, G), h_before(B, H);
    for (int s = Tn - 1; s >= 0; --s) {
      const int t = reverse ? Tn - 1 - s : s;
      const Mat<T> &gt = (*gates)[s];
      const Mat<T> &c = (*cells)[s];
      for (int n = 0; n < B; ++n) {
        const T *a = gt.row(n).data();
        T *d = dg.row(n).data();
        for (int k = 0; k < H; ++k) {
          const T ig = a[k], fg = a[H + k], cg = a[2 * H + k], og = a[3 * H + k];
          const T dh = self.grad[(static_cast<size_t>(n) * Tn + t) * H + k] + dh_next(n, k);
          const T tc = std::tanh(c(n, k));
          const T dc = dh * og * (T(1) - tc * tc) + dc_next(n, k);
          const T c_before = s > 0 ? (*cells)[s - 1](n, k) : T(0);
          d[k] = dc * cg * ig * (T(1) - ig);
          d[H + k] = dc * c_before * fg * (T(1) - fg);
          d[2 * H + k] = dc * ig * (T(1) - cg * cg);
          d[3 * H + k] = dh * tc * og * (T(1) - og);
          dc_next(n, k) = dc * fg;
        }
        dxw.row(static_cast<Eigen::Index>(n) * Tn + t) = dg.row(n);
      }
      if (s > 0) {
        const int t_before = reverse ? Tn - s : s - 1;
        for (int n = 0; n < B; ++n)
          for (int k = 0; k < H; ++k)
            h_before(n, k) = self.value[(static_cast<size_t>(n) * Tn + t_before) * H + k];
        if (gwh) MMap<T>(gwh, H, G).noalias() += h_before.transpose() * dg;
      }
      dh_next.noalias() = dg * whmat.transpose();
    }
    if (gx)
      MMap<T>(gx, B * Tn, F).noalias() +=
          dxw * CMap<T>(self.parents[1]->value.data(), F, G).transpose();
    if (gwx)
      MMap<T>(gwx, F, G).noalias() +=
          CMap<T>(self.parents[0]->value.data(), B * Tn, F).transpose() * dxw;
    if (gb) VMap<T>(gb, G) += dxw.colwise().sum();
  };
  return out;
}

template <typename T>
Var<T> ConcatLast(const Var<T> &a, const Var<T> &b) {
  Check(a->shape.size() == b->shape.size() && !a->shape.empty() &&
            std::equal(a->shape.begin(), a->shape.end() - 1, b->shape.begin()),
        "concat of " + ShapeString(a->shape) + " and " + ShapeString(b->shape));
  const int Fa = a->shape.back(), Fb = b->shape.back();
  const size_t N = a->size() / Fa;
  Shape shape = a->shape;
  shape.back() = Fa + Fb;
  auto out = MakeNode<T>(shape, {a, b});
  for (size_t n = 0; n < N; ++n) {
    std::copy_n(a->value.begin() + n * Fa, Fa, out->value.begin() + n * (Fa + Fb));
    std::copy_n(b->value.begin() + n * Fb, Fb, out->value.begin() + n * (Fa + Fb) + Fa);
  }
  out->backward = [=](Node<T> &self) {
    T *ga = ParentGrad(self, 0), *gb = ParentGrad(self, 1);
    for (size_t n = 0; n < N; ++n) {
      const T *g = self.grad.data() + n * (Fa + Fb);
      if (ga)
        for (int k = 0; k < Fa; ++k) ga[n * Fa + k] += g[k];
      if (gb)
        for (int k = 0; k < Fb; ++k) gb[n * Fb + k] += g[Fa + k];
    }
  };
  return out;
}

template <typename T>
Var<T> Attention(const Var<T> &seq, const Var<T> &w, const Var<T> &b, const Var<T> &v,
                 std::vector<T> *weights) {
  Check(seq->shape.size() == 3, "attention expects seq[B,T,D], got " + ShapeString(seq->shape));
  const int B = seq->shape[0], Tn = seq->shape[1], D = seq->shape[2];
  Check(Tn >= 1, "attention needs at least one time step");
  Check(w->shape.size() == 2 && w->shape[0] == D, "attention w must be [D,A]");
  const int A = w->shape[1];
  Check(b->shape == Shape({A}) && v->shape == Shape({A}), "attention b and v must be [A]");

  auto out = MakeNode<T>({B, D}, {seq, w, b, v});
  auto u = std::make_shared<std::vector<T>>(static_cast<size_t>(B) * Tn * A);
  auto alpha = std::make_shared<std::vector<T>>(static_cast<size_t>(B) * Tn);
  CMap<T> wm(w->value.data(), D, A);
  CVMap<T> bv(b->value.data(), A), vv(v->value.data(), A);
  for (int n = 0; n < B; ++n) {
    CMap<T> h(seq->value.data() + static_cast<size_t>(n) * Tn * D, Tn, D);
    MMap<T> un(u->data() + static_cast<size_t>(n) * Tn * A, Tn, A);
    un.noalias() = h * wm;
    un.rowwise() += bv;
    un = un.array().tanh().matrix();
    VMap<T> al(alpha->data() + static_cast<size_t>(n) * Tn, Tn);
    al.noalias() = (un * vv.transpose()).transpose();
    const T peak = al.maxCoeff();
    al = (al.array() - peak).exp().matrix();
    al /= al.sum();
    VMap<T>(out->value.data() + static_cast<size_t>(n) * D, D).noalias() = al * h;
  }
  if (weights) *weights = *alpha;

  out->backward = [=](Node<T> &self) {
    T *gs = ParentGrad(self, 0), *gw = ParentGrad(self, 1), *gbias = ParentGrad(self, 2),
      *gv = ParentGrad(self, 3);
    CMap<T> wmat(self.parents[1]->value.data(), D, A);
    CVMap<T> vvec(self.parents[3]->value.data(), A);
    Eigen::Matrix<T, 1, Eigen::Dynamic> dalpha(Tn), de(Tn);
    Mat<T> dpre(Tn, A);
    for (int n = 0; n < B; ++n) {
      CMap<T> h(self.parents[0]->value.data() + static_cast<size_t>(n) * Tn * D, Tn, D);
      CMap<T> un(u->data() + static_cast<size_t>(n) * Tn * A, Tn, A);
      CVMap<T> al(alpha->data() + static_cast<size_t>(n) * Tn, Tn);
      CVMap<T> go(self.grad.data() + static_cast<size_t>(n) * D, D);
      dalpha.noalias() = (h * go.transpose()).transpose();
      const T mix = al.dot(dalpha);
      de = (al.array() * (dalpha.array() - mix)).matrix();
      if (gv) VMap<T>(gv, A).noalias() += de * un;
      dpre.noalias() = de.transpose() * vvec;
      dpre = (dpre.array() * (T(1) - un.array().square())).matrix();
      if (gw) MMap<T>(gw, D, A).noalias() += h.transpose() * dpre;
      if (gbias) VMap<T>(gbias, A) += dpre.colwise().sum();
      if (gs) {
        MMap<T> gh(gs + static_cast<size_t>(n) * Tn * D, Tn, D);
        gh.noalias() += al.transpose() * go;
        gh.noalias() += dpre * wmat.transpose();
      }
    }
  };
  return out;
}

template <typename T>
Var<T> SoftmaxCrossEntropy(const Var<T> &logits, const std::vector<int> &labels) {
  Check(logits->shape.size() == 2, "softmax cross-entropy expects logits[B,K]");
  const int B = logits->shape[0], K = logits->shape[1];
  Check(static_cast<int>(labels.size()) == B, "label count does not match batch");
  for (int y : labels) {
    if (y < 0 || y >= K)
      throw Error(ErrorCode::kLabelOutOfRange,
                  "label " + std::to_string(y) + " outside [0, " + std::to_string(K) + ")");
  }
  auto out = MakeNode<T>({1}, {logits});
  auto probs = std::make_shared<std::vector<T>>(logits->size());
  T loss = 0;
  for (int n = 0; n < B; ++n) {
    const T *z = logits->value.data() + static_cast<size_t>(n) * K;
    T *p = probs->data() + static_cast<size_t>(n) * K;
    const T peak = *std::max_element(z, z + K);
    T sum = 0;
    for (int k = 0; k < K; ++k) sum += (p[k] = std::exp(z[k] - peak));
    for (int k = 0; k < K; ++k) p[k] /= sum;
    loss += std::log(sum) + peak - z[labels[n]];
  }
  out->value[0] = loss / B;
  out->backward = [=](Node<T> &self) {
    T *gz = ParentGrad(self, 0);
    const T scale = self.grad[0] / B;
    for (int n = 0; n < B; ++n)
      for (int k = 0; k < K; ++k) {
        const size_t i = static_cast<size_t>(n) * K + k;
        gz[i] += scale * ((*probs)[i] - (k == labels[n] ? T(1) : T(0)));
      }
  };
  return out;
}

template <typename T>
Var<T> WeightedSum(const Var<T> &x, const std::vector<T> &c) {
  Check(c.size() == x->size(), "weighted sum needs one weight per cell");
  auto out = MakeNode<T>({1}, {x});
  T s = 0;
  for (size_t i = 0; i < c.size(); ++i) s += x->value[i] * c[i];
  out->value[0] = s;
  out->backward = [c](Node<T> &self) {
    T *gx = ParentGrad(self, 0);
    for (size_t i = 0; i < c.size(); ++i) gx[i] += self.grad[0] * c[i];
  };
  return out;
}

#define CROSSEMO_INSTANTIATE(T)                                                          \
  template Var<T> Leaf<T>(Shape, std::vector<T>, bool);                                  \
  template void Backward<T>(const Var<T> &);                                             \
  template Var<T> Conv2d<T>(const Var<T> &, const Var<T> &, const Var<T> &);             \
  template Var<T> Relu<T>(const Var<T> &);                                               \
  template Var<T> MaxPool2d<T>(const Var<T> &);                                          \
  template Var<T> ConvToSequence<T>(const Var<T> &);                                     \
  template Var<T> Dense<T>(const Var<T> &, const Var<T> &, const Var<T> &);              \
  template Var<T> BatchNorm<T>(const Var<T> &, const Var<T> &, const Var<T> &,           \
                               BatchNormState<T> *, bool, T, T);                         \
  template Var<T> Dropout<T>(const Var<T> &, double, bool, uint64_t);                    \
  template Var<T> Lstm<T>(const Var<T> &, const Var<T> &, const Var<T> &, const Var<T> &, \
                          bool);                                                         \
  template Var<T> ConcatLast<T>(const Var<T> &, const Var<T> &);                         \
  template Var<T> Attention<T>(const Var<T> &, const Var<T> &, const Var<T> &,           \
                               const Var<T> &, std::vector<T> *);                        \
  template Var<T> SoftmaxCrossEntropy<T>(const Var<T> &, const std::vector<int> &);      \
  template Var<T> WeightedSum<T>(const Var<T> &, const std::vector<T> &);

CROSSEMO_INSTANTIATE(float)
CROSSEMO_INSTANTIATE(double)

#undef CROSSEMO_INSTANTIATE

}  // namespace crossemo::ad
