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

#ifndef ASD_LAYERS_H_
#define ASD_LAYERS_H_

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "asd/autograd.h"
#include "asd/tensor.h"

namespace asd {

struct Conv2dSpec {
  std::int64_t out_channels = 0;
  std::array<std::int64_t, 2> kernel{1, 1};
  std::array<std::int64_t, 2> stride{1, 1};
  std::array<std::int64_t, 2> pad{0, 0};
};

struct Conv3dSpec {
  std::int64_t out_channels = 0;
  std::array<std::int64_t, 3> kernel{1, 1, 1};
  std::array<std::int64_t, 3> stride{1, 1, 1};
  std::array<std::int64_t, 3> pad{0, 0, 0};
};

struct MaxPool2dSpec {
  std::array<std::int64_t, 2> kernel{2, 2};
  std::array<std::int64_t, 2> stride{2, 2};
};

struct ReluSpec {};

// Maps the last axis to `out_features`.
struct LinearSpec {
  std::int64_t out_features = 0;
};

// Collapses every axis after the batch axis.
struct FlattenSpec {};

// Drops the unit time axis a conv3d leaves behind (the third axis from the
// end), turning C x 1 x H x W into C x H x W.
struct SqueezeTimeSpec {};

using LayerSpec = std::variant<Conv2dSpec, Conv3dSpec, MaxPool2dSpec, ReluSpec,
                               LinearSpec, FlattenSpec, SqueezeTimeSpec>;

std::string layer_kind(const LayerSpec& spec);

// Convolution arithmetic; throws DimensionError naming the offending axis.
Shape layer_output_shape(const LayerSpec& spec, const Shape& input);

bool layer_has_params(const LayerSpec& spec);

// Adds `name.weight` and `name.bias` drawn from U(-1/sqrt(fan_in),
// 1/sqrt(fan_in)). No-op for parameterless layers.
template <typename T>
void init_layer(const LayerSpec& spec, const Shape& input, const std::string& name,
                ParamSet<T>& params, std::mt19937_64& rng);

template <typename T>
Var<T> apply_layer(const LayerSpec& spec, ParamSet<T>& params,
                   const std::string& name, const Var<T>& input);

struct NamedLayer {
  std::string name;
  LayerSpec spec;
};

// Ordered layer list whose parameters live under `<prefix>.<layer name>.*`.
class LayerStack {
 public:
  LayerStack() = default;
  explicit LayerStack(std::vector<NamedLayer> layers) : layers_(std::move(layers)) {}

  void push(std::string name, LayerSpec spec) {
    layers_.push_back({std::move(name), std::move(spec)});
  }
  const std::vector<NamedLayer>& layers() const { return layers_; }

  // Shape after each layer; element 0 is the input shape.
  std::vector<Shape> shape_chain(const Shape& input) const;

  template <typename T>
  void init(ParamSet<T>& params, const std::string& prefix, const Shape& input,
            std::mt19937_64& rng) const;

  template <typename T>
  Var<T> forward(ParamSet<T>& params, const std::string& prefix, Var<T> x) const;

 private:
  std::vector<NamedLayer> layers_;
};

}  // namespace asd

#endif  // ASD_LAYERS_H_
