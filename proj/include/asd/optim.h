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

#ifndef ASD_OPTIM_H_
#define ASD_OPTIM_H_

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "asd/tensor.h"

namespace asd {

// Adam moments for the trainable entries of a ParamSet. Defaults are the
// usual beta1 = 0.9, beta2 = 0.999, epsilon = 1e-8.
template <typename T>
struct AdamState {
  struct Moments {
    std::vector<T> first;
    std::vector<T> second;
  };

  std::int64_t step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::map<std::string, Moments> moments;

  // Zero moments shaped like every parameter that currently requires grad.
  static AdamState for_params(const ParamSet<T>& params);
};

// One bias-corrected Adam update of every trainable parameter, then clears
// their gradients. Frozen parameters are left alone.
template <typename T>
void adam_step(ParamSet<T>& params, AdamState<T>& state, double learning_rate);

// Central differences (f(x + eps e_i) - f(x - eps e_i)) / 2 eps per
// coordinate. Test oracle for the autograd tape.
template <typename T>
Tensor<T> finite_difference_gradient(const std::function<double(const Tensor<T>&)>& f,
                                     const Tensor<T>& x, double eps);

}  // namespace asd

#endif  // ASD_OPTIM_H_
