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

#include "asd/optim.h"

#include <cmath>

namespace asd {

template <typename T>
AdamState<T> AdamState<T>::for_params(const ParamSet<T>& params) {
  AdamState state;
  for (const auto& e : params) {
    if (!e.tensor.requires_grad()) continue;
    state.moments[e.name] = Moments{std::vector<T>(e.tensor.size(), T(0)),
                                    std::vector<T>(e.tensor.size(), T(0))};
  }
  return state;
}

template <typename T>
void adam_step(ParamSet<T>& params, AdamState<T>& state, double learning_rate) {
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  for (const auto& e : params) {
    if (!e.tensor.requires_grad()) continue;
    if (!e.tensor.has_grad()) {
      throw StateError("adam_step: parameter '" + e.name + "' has no gradient");
    }
    auto it = state.moments.find(e.name);
    if (it == state.moments.end() || it->second.first.size() != e.tensor.size()) {
      throw StateError("adam_step: optimizer state does not cover '" + e.name + "'");
    }
  }
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  const T b1 = static_cast<T>(state.beta1);
  const T b2 = static_cast<T>(state.beta2);
  for (auto& e : params) {
    if (!e.tensor.requires_grad()) continue;
    auto& mom = state.moments.at(e.name);
    auto g = e.tensor.grad();
    auto x = e.tensor.data();
    for (std::size_t i = 0; i < x.size(); ++i) {
      mom.first[i] = b1 * mom.first[i] + (T(1) - b1) * g[i];
      mom.second[i] = b2 * mom.second[i] + (T(1) - b2) * g[i] * g[i];
      const double m_hat = static_cast<double>(mom.first[i]) / correction1;
      const double v_hat = static_cast<double>(mom.second[i]) / correction2;
      x[i] -= static_cast<T>(learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon));
    }
    e.tensor.clear_grad();
  }
}

template <typename T>
Tensor<T> finite_difference_gradient(const std::function<double(const Tensor<T>&)>& f,
                                     const Tensor<T>& x, double eps) {
  if (!(eps > 0.0)) throw ConfigError("finite difference step must be positive");
  Tensor<T> probe = x;
  Tensor<T> grad(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const T original = probe[i];
    probe[i] = static_cast<T>(original + eps);
    const double up = f(probe);
    probe[i] = static_cast<T>(original - eps);
    const double down = f(probe);
    probe[i] = original;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericError("finite_difference_gradient: objective is not finite");
    }
    grad[i] = static_cast<T>((up - down) / (2.0 * eps));
  }
  return grad;
}

template struct AdamState<float>;
template struct AdamState<double>;
template void adam_step(ParamSet<float>&, AdamState<float>&, double);
template void adam_step(ParamSet<double>&, AdamState<double>&, double);
template Tensor<float> finite_difference_gradient(
    const std::function<double(const Tensor<float>&)>&, const Tensor<float>&, double);
template Tensor<double> finite_difference_gradient(
    const std::function<double(const Tensor<double>&)>&, const Tensor<double>&, double);

}  // namespace asd
