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

#include "asd/layers.h"

#include <cmath>

#include "asd/ops.h"

namespace asd {

namespace {

template <class... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

void require_rank_in(const Shape& s, int lo, int hi, const std::string& kind) {
  const int r = static_cast<int>(s.size());
  if (r < lo || r > hi) {
    throw DimensionError(kind + ": unexpected input rank " + std::to_string(r) +
                         " for shape " + shape_string(s));
  }
}

// Input channel count and fan-in of a parameterized layer.
std::int64_t fan_in(const LayerSpec& spec, const Shape& in) {
  return std::visit(
      Overloaded{
          [&](const Conv2dSpec& c) { return in[in.size() - 3] * c.kernel[0] * c.kernel[1]; },
          [&](const Conv3dSpec& c) {
            return in[in.size() - 4] * c.kernel[0] * c.kernel[1] * c.kernel[2];
          },
          [&](const LinearSpec&) { return in.back(); },
          [](const auto&) -> std::int64_t { return 0; },
      },
      spec);
}

}  // namespace

std::string layer_kind(const LayerSpec& spec) {
  return std::visit(Overloaded{
                        [](const Conv2dSpec&) { return std::string("conv2d"); },
                        [](const Conv3dSpec&) { return std::string("conv3d"); },
                        [](const MaxPool2dSpec&) { return std::string("maxpool2d"); },
                        [](const ReluSpec&) { return std::string("relu"); },
                        [](const LinearSpec&) { return std::string("linear"); },
                        [](const FlattenSpec&) { return std::string("flatten"); },
                        [](const SqueezeTimeSpec&) { return std::string("squeeze_time"); },
                    },
                    spec);
}

bool layer_has_params(const LayerSpec& spec) {
  return std::holds_alternative<Conv2dSpec>(spec) ||
         std::holds_alternative<Conv3dSpec>(spec) ||
         std::holds_alternative<LinearSpec>(spec);
}

Shape layer_output_shape(const LayerSpec& spec, const Shape& in) {
  return std::visit(
      Overloaded{
          [&](const Conv2dSpec& c) {
            require_rank_in(in, 3, 4, "conv2d");
            if (c.out_channels <= 0) throw ConfigError("conv2d: non-positive out_channels");
            const std::size_t r = in.size();
            Shape out = in;
            out[r - 3] = c.out_channels;
            out[r - 2] = conv_output_size(in[r - 2], c.kernel[0], c.stride[0], c.pad[0], "height");
            out[r - 1] = conv_output_size(in[r - 1], c.kernel[1], c.stride[1], c.pad[1], "width");
            return out;
          },
          [&](const Conv3dSpec& c) {
            require_rank_in(in, 4, 5, "conv3d");
            if (c.out_channels <= 0) throw ConfigError("conv3d: non-positive out_channels");
            const std::size_t r = in.size();
            Shape out = in;
            out[r - 4] = c.out_channels;
            out[r - 3] = conv_output_size(in[r - 3], c.kernel[0], c.stride[0], c.pad[0], "time");
            out[r - 2] = conv_output_size(in[r - 2], c.kernel[1], c.stride[1], c.pad[1], "height");
            out[r - 1] = conv_output_size(in[r - 1], c.kernel[2], c.stride[2], c.pad[2], "width");
            return out;
          },
          [&](const MaxPool2dSpec& p) {
            require_rank_in(in, 3, 4, "maxpool2d");
            const std::size_t r = in.size();
            Shape out = in;
            out[r - 2] = conv_output_size(in[r - 2], p.kernel[0], p.stride[0], 0, "height");
            out[r - 1] = conv_output_size(in[r - 1], p.kernel[1], p.stride[1], 0, "width");
            return out;
          },
          [&](const ReluSpec&) { return in; },
          [&](const LinearSpec& l) {
            require_rank_in(in, 1, 8, "linear");
            if (l.out_features <= 0) throw ConfigError("linear: non-positive out_features");
            Shape out = in;
            out.back() = l.out_features;
            return out;
          },
          [&](const FlattenSpec&) {
            require_rank_in(in, 2, 8, "flatten");
            std::int64_t rest = 1;
            for (std::size_t i = 1; i < in.size(); ++i) rest *= in[i];
            return Shape{in[0], rest};
          },
          [&](const SqueezeTimeSpec&) {
            require_rank_in(in, 4, 5, "squeeze_time");
            const std::size_t axis = in.size() - 3;
            if (in[axis] != 1) {
              throw DimensionError("squeeze_time: time axis has extent " +
                                   std::to_string(in[axis]) + ", expected 1");
            }
            Shape out = in;
            out.erase(out.begin() + static_cast<std::ptrdiff_t>(axis));
            return out;
          },
      },
      spec);
}

template <typename T>
void init_layer(const LayerSpec& spec, const Shape& input, const std::string& name,
                ParamSet<T>& params, std::mt19937_64& rng) {
  if (!layer_has_params(spec)) return;
  const Shape out = layer_output_shape(spec, input);
  Shape weight_shape;
  std::int64_t out_features = 0;
  std::visit(Overloaded{
                 [&](const Conv2dSpec& c) {
                   out_features = c.out_channels;
                   weight_shape = {c.out_channels, input[input.size() - 3], c.kernel[0],
                                   c.kernel[1]};
                 },
                 [&](const Conv3dSpec& c) {
                   out_features = c.out_channels;
                   weight_shape = {c.out_channels, input[input.size() - 4], c.kernel[0],
                                   c.kernel[1], c.kernel[2]};
                 },
                 [&](const LinearSpec& l) {
                   out_features = l.out_features;
                   weight_shape = {l.out_features, input.back()};
                 },
                 [](const auto&) {},
             },
             spec);
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in(spec, input)));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor<T> weight(weight_shape);
  for (T& v : weight.data()) v = static_cast<T>(dist(rng));
  Tensor<T> bias(Shape{out_features});
  for (T& v : bias.data()) v = static_cast<T>(dist(rng));
  weight.set_requires_grad(true);
  bias.set_requires_grad(true);
  params.add(name + ".weight", std::move(weight));
  params.add(name + ".bias", std::move(bias));
}

template <typename T>
Var<T> apply_layer(const LayerSpec& spec, ParamSet<T>& params, const std::string& name,
                   const Var<T>& x) {
  Tape<T>& tape = x.tape();
  auto weight = [&] { return tape.param(params.at(name + ".weight")); };
  auto bias = [&] { return tape.param(params.at(name + ".bias")); };
  return std::visit(
      Overloaded{
          [&](const Conv2dSpec& c) { return conv2d(x, weight(), bias(), c.stride, c.pad); },
          [&](const Conv3dSpec& c) { return conv3d(x, weight(), bias(), c.stride, c.pad); },
          [&](const MaxPool2dSpec& p) { return maxpool2d(x, p.kernel, p.stride); },
          [&](const ReluSpec&) { return relu(x); },
          [&](const LinearSpec&) { return linear(x, weight(), bias()); },
          [&](const FlattenSpec& f) {
            return reshape(x, layer_output_shape(f, x.shape()));
          },
          [&](const SqueezeTimeSpec& s) {
            return reshape(x, layer_output_shape(s, x.shape()));
          },
      },
      spec);
}

std::vector<Shape> LayerStack::shape_chain(const Shape& input) const {
  std::vector<Shape> chain{input};
  for (const auto& layer : layers_) {
    chain.push_back(layer_output_shape(layer.spec, chain.back()));
  }
  return chain;
}

template <typename T>
void LayerStack::init(ParamSet<T>& params, const std::string& prefix, const Shape& input,
                      std::mt19937_64& rng) const {
  Shape shape = input;
  for (const auto& layer : layers_) {
    init_layer<T>(layer.spec, shape, prefix + "." + layer.name, params, rng);
    shape = layer_output_shape(layer.spec, shape);
  }
}

template <typename T>
Var<T> LayerStack::forward(ParamSet<T>& params, const std::string& prefix, Var<T> x) const {
  for (const auto& layer : layers_) {
    x = apply_layer<T>(layer.spec, params, prefix + "." + layer.name, x);
  }
  return x;
}

#define ASD_INSTANTIATE_LAYERS(T)                                                   \
  template void init_layer<T>(const LayerSpec&, const Shape&, const std::string&,   \
                              ParamSet<T>&, std::mt19937_64&);                      \
  template Var<T> apply_layer<T>(const LayerSpec&, ParamSet<T>&, const std::string&, \
                                 const Var<T>&);                                    \
  template void LayerStack::init<T>(ParamSet<T>&, const std::string&, const Shape&, \
                                    std::mt19937_64&) const;                        \
  template Var<T> LayerStack::forward<T>(ParamSet<T>&, const std::string&, Var<T>) const;

ASD_INSTANTIATE_LAYERS(float)
ASD_INSTANTIATE_LAYERS(double)

#undef ASD_INSTANTIATE_LAYERS

}  // namespace asd
