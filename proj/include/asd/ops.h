// Copyright 2026 The ASD Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ASD_OPS_H_
#define ASD_OPS_H_

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "asd/autograd.h"

// Differentiable primitives. All ops are instantiated for float and double.

namespace asd {

template <typename T> Var<T> add(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> mul(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> scale(const Var<T>& a, T factor);
template <typename T> Var<T> square(const Var<T>& x);
template <typename T> Var<T> relu(const Var<T>& x);
template <typename T> Var<T> sigmoid(const Var<T>& x);
template <typename T> Var<T> tanh(const Var<T>& x);

// Scalar reductions (result shape is rank 0).
template <typename T> Var<T> sum(const Var<T>& x);
template <typename T> Var<T> mean(const Var<T>& x);

template <typename T> Var<T> reshape(const Var<T>& x, Shape shape);

// a [m x k] times b [k x n].
template <typename T> Var<T> matmul(const Var<T>& a, const Var<T>& b);

// Affine map over the last axis: x [..., in], weight [out x in], bias [out].
template <typename T>
Var<T> linear(const Var<T>& x, const Var<T>& weight, const Var<T>& bias);

// Rank-2 helpers over the feature axis.
template <typename T> Var<T> concat_features(const std::vector<Var<T>>& parts);
template <typename T>
Var<T> slice_features(const Var<T>& x, std::int64_t start, std::int64_t length);

// Sequence helpers for x [batch x steps x features].
template <typename T> Var<T> select_step(const Var<T>& x, std::int64_t step);
template <typename T> Var<T> mean_steps(const Var<T>& x);

// x [N x C x T x H x W] (or unbatched [C x T x H x W]),
// weight [O x C x kt x kh x kw], bias [O]. Zero padding.
template <typename T>
Var<T> conv3d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias,
              std::array<std::int64_t, 3> stride, std::array<std::int64_t, 3> pad);

// x [N x C x H x W] (or [C x H x W]), weight [O x C x kh x kw], bias [O].
template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias,
              std::array<std::int64_t, 2> stride, std::array<std::int64_t, 2> pad);

// x [N x C x H x W] (or [C x H x W]); no padding.
template <typename T>
Var<T> maxpool2d(const Var<T>& x, std::array<std::int64_t, 2> kernel,
                 std::array<std::int64_t, 2> stride);

// Temporal convolution on channels-last sequences x [B x L x C] with weight
// [O x C x K] (K odd). Out-of-range taps replicate the first/last step, so
// the output keeps length L.
template <typename T>
Var<T> conv1d_replicate(const Var<T>& x, const Var<T>& weight, const Var<T>& bias);

// Mean over the batch of -log softmax(logits)[target]; logits [B x K].
template <typename T>
Var<T> softmax_cross_entropy(const Var<T>& logits, std::span<const int> targets);

// Output extent of a convolution or pooling axis; throws on a kernel that
// does not fit or a non-positive stride. `axis` names the axis in errors.
std::int64_t conv_output_size(std::int64_t in, std::int64_t kernel,
                              std::int64_t stride, std::int64_t pad,
                              const char* axis);

}  // namespace asd

#endif  // ASD_OPS_H_
