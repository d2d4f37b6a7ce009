// tests/gradcheck.h

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

// Central finite-difference oracle for the autodiff ops, at float64.

#ifndef CROSSEMO_TESTS_GRADCHECK_H_
#define CROSSEMO_TESTS_GRADCHECK_H_

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "crossemo/base/util.h"
#include "crossemo/model/autodiff.h"

namespace crossemo::testing {

using DVar = ad::Var<double>;

inline DVar RandomLeaf(Rng &rng, ad::Shape shape, double scale = 1.0) {
  std::vector<double> v(ad::NumElements(shape));
  for (auto &x : v) x = scale * rng.Uniform(-1.0, 1.0);
  return ad::Leaf<double>(std::move(shape), std::move(v), true);
}

/// Largest per-cell relative error |a - n| / max(|a|, |n|, floor) between
/// the analytic gradient and a central difference with step h, over every
/// cell of every input. `build` must recompute the scalar from scratch.
inline double MaxRelativeError(const std::vector<DVar> &inputs,
                               const std::function<DVar()> &build, double h = 1e-5,
                               double floor = 1e-4) {
  for (const auto &x : inputs) x->grad.assign(x->size(), 0.0);
  ad::Backward(build());
  double worst = 0.0;
  for (const auto &x : inputs) {
    const std::vector<double> analytic = x->grad;
    for (size_t i = 0; i < x->size(); ++i) {
      const double saved = x->value[i];
      x->value[i] = saved + h;
      const double up = build()->value[0];
      x->value[i] = saved - h;
      const double down = build()->value[0];
      x->value[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), floor});
      worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
    }
  }
  return worst;
}

inline std::vector<double> RandomWeights(Rng &rng, size_t n) {
  std::vector<double> c(n);
  for (auto &x : c) x = rng.Uniform(-1.0, 1.0);
  return c;
}

/// Worst relative error per op over `seeds` randomized small problems.
inline std::map<std::string, double> RunGradientSuite(int seeds) {
  std::map<std::string, double> worst;
  auto record = [&](const std::string &op, double err) { worst[op] = std::max(worst[op], err); };
  for (int s = 0; s < seeds; ++s) {
    Rng rng(1000 + s);
    {
      const int c = 1 + static_cast<int>(rng.Below(2)), h = 3 + static_cast<int>(rng.Below(3)),
                w = 3 + static_cast<int>(rng.Below(3)), k = s % 4 == 0 ? 1 : 3;
      auto x = RandomLeaf(rng, {2, c, h, w});
      auto wt = RandomLeaf(rng, {2, c, k, k}, 0.5);
      auto b = RandomLeaf(rng, {2});
      const auto cw = RandomWeights(rng, 2 * 2 * h * w);
      record("conv2d", MaxRelativeError({x, wt, b}, [&] {
               return ad::WeightedSum(ad::Conv2d(x, wt, b), cw);
             }));
    }
    {
      auto x = RandomLeaf(rng, {2, 3, 4});
      auto wx_f = RandomLeaf(rng, {4, 12}, 0.5), wh_f = RandomLeaf(rng, {3, 12}, 0.5),
           b_f = RandomLeaf(rng, {12}, 0.5);
      auto wx_b = RandomLeaf(rng, {4, 12}, 0.5), wh_b = RandomLeaf(rng, {3, 12}, 0.5),
           b_b = RandomLeaf(rng, {12}, 0.5);
      const auto cw = RandomWeights(rng, 2 * 3 * 6);
      record("blstm", MaxRelativeError({x, wx_f, wh_f, b_f, wx_b, wh_b, b_b}, [&] {
               auto fw = ad::Lstm(x, wx_f, wh_f, b_f, false);
               auto bw = ad::Lstm(x, wx_b, wh_b, b_b, true);
               return ad::WeightedSum(ad::ConcatLast(fw, bw), cw);
             }));
    }
    {
      auto seq = RandomLeaf(rng, {2, 3, 4});
      auto w = RandomLeaf(rng, {4, 3}), b = RandomLeaf(rng, {3}), v = RandomLeaf(rng, {3});
      const auto cw = RandomWeights(rng, 2 * 4);
      record("attention", MaxRelativeError({seq, w, b, v}, [&] {
               return ad::WeightedSum(ad::Attention(seq, w, b, v), cw);
             }));
    }
    {
      const int rows = 4 + static_cast<int>(rng.Below(3));
      auto x = RandomLeaf(rng, {rows, 3});
      auto g = RandomLeaf(rng, {3}), beta = RandomLeaf(rng, {3});
      const auto cw = RandomWeights(rng, rows * 3);
      ad::BatchNormState<double> state;
      record("batchnorm", MaxRelativeError({x, g, beta}, [&] {
               return ad::WeightedSum(ad::BatchNorm(x, g, beta, &state, true), cw);
             }));
      ad::BatchNormState<double> running{{0.1, -0.2, 0.3}, {0.5, 1.5, 2.0}};
      record("batchnorm", MaxRelativeError({x, g, beta}, [&] {
               return ad::WeightedSum(ad::BatchNorm(x, g, beta, &running, false), cw);
             }));
    }
    {
      auto x = RandomLeaf(rng, {2, 3, 4});
      auto w = RandomLeaf(rng, {4, 5}), b = RandomLeaf(rng, {5});
      const auto cw = RandomWeights(rng, 2 * 3 * 5);
      record("dense", MaxRelativeError({x, w, b}, [&] {
               return ad::WeightedSum(ad::Dense(x, w, b), cw);
             }));
    }
    {
      auto z = RandomLeaf(rng, {3, 4}, 2.0);
      std::vector<int> labels(3);
      for (auto &y : labels) y = static_cast<int>(rng.Below(4));
      record("softmax_ce", MaxRelativeError({z}, [&] { return ad::SoftmaxCrossEntropy(z, labels); }));
    }
    {
      auto x = RandomLeaf(rng, {2, 2, 4, 5});
      const auto cw = RandomWeights(rng, 2 * 2 * 4 * 5);
      const auto cp = RandomWeights(rng, 2 * 5 * 2 * 2);
      record("relu", MaxRelativeError({x}, [&] { return ad::WeightedSum(ad::Relu(x), cw); }));
      record("maxpool", MaxRelativeError({x}, [&] {
               return ad::WeightedSum(ad::ConvToSequence(ad::MaxPool2d(x)),
                                      std::vector<double>(cp.begin(), cp.begin() + 2 * 2 * 2 * 2));
             }));
      record("dropout", MaxRelativeError({x}, [&] {
               return ad::WeightedSum(ad::Dropout(x, 0.2, true, 77 + s), cw);
             }));
    }
  }
  return worst;
}

}  // namespace crossemo::testing

#endif  // CROSSEMO_TESTS_GRADCHECK_H_
