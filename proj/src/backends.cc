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

#include "asd/backends.h"

#include <cmath>
#include <random>
#include <vector>

#include "asd/error.h"
#include "asd/ops.h"

namespace asd {

namespace {

constexpr const char* kStreams[] = {"audio", "video"};

template <typename T>
void add_uniform(ParamSet<T>& params, const std::string& name, Shape shape, double fan_in,
                 std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(fan_in);
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor<T> t(std::move(shape));
  for (T& v : t.data()) v = static_cast<T>(dist(rng));
  t.set_requires_grad(true);
  params.add(name, std::move(t));
}

template <typename T>
void check_pair(const BackendConfig& config, const Var<T>& audio, const Var<T>& video) {
  if (audio.rank() != 3 || video.rank() != 3) {
    throw DimensionError("back-ends expect B x L x D sequences, got " +
                         shape_string(audio.shape()) + " and " + shape_string(video.shape()));
  }
  if (audio.dim(1) != video.dim(1)) {
    throw AlignmentError("audio sequence has " + std::to_string(audio.dim(1)) +
                         " steps but video has " + std::to_string(video.dim(1)));
  }
  if (audio.dim(0) != video.dim(0)) {
    throw DimensionError("audio and video batches differ on axis 0");
  }
  if (audio.dim(1) < 1) throw InputError("back-ends need at least one step");
  if (audio.dim(2) != config.embedding_dim || video.dim(2) != config.embedding_dim) {
    throw DimensionError("embedding width does not match the back-end on axis 2");
  }
}

template <typename T>
struct LstmWeights {
  Var<T> weight_ih, weight_hh, bias_ih, bias_hh;
};

template <typename T>
LstmWeights<T> lstm_weights(ParamSet<T>& params, Tape<T>& tape, const std::string& name) {
  return {tape.param(params.at(name + ".weight_ih")), tape.param(params.at(name + ".weight_hh")),
          tape.param(params.at(name + ".bias_ih")), tape.param(params.at(name + ".bias_hh"))};
}

// Runs one LSTM direction over per-step input projections (already
// x W_ih^T + b_ih). Visits steps in `order` and returns hidden states indexed
// by step; unvisited steps stay invalid.
template <typename T>
std::vector<Var<T>> run_lstm(const std::vector<Var<T>>& projected, const LstmWeights<T>& w,
                             std::int64_t hidden, const std::vector<std::int64_t>& order) {
  Tape<T>& tape = projected[order.front()].tape();
  const std::int64_t batch = projected[order.front()].dim(0);
  Var<T> h = tape.constant(Tensor<T>(Shape{batch, hidden}));
  Var<T> c = h;
  std::vector<Var<T>> out(projected.size());
  for (std::int64_t t : order) {
    auto gates = add(projected[t], linear(h, w.weight_hh, w.bias_hh));
    auto in_gate = sigmoid(slice_features(gates, 0, hidden));
    auto forget_gate = sigmoid(slice_features(gates, hidden, hidden));
    auto cell_input = tanh(slice_features(gates, 2 * hidden, hidden));
    auto out_gate = sigmoid(slice_features(gates, 3 * hidden, hidden));
    c = add(mul(forget_gate, c), mul(in_gate, cell_input));
    h = mul(out_gate, tanh(c));
    out[t] = h;
  }
  return out;
}

std::vector<std::int64_t> step_range(std::int64_t from, std::int64_t to) {
  std::vector<std::int64_t> steps;
  if (from <= to) {
    for (std::int64_t t = from; t <= to; ++t) steps.push_back(t);
  } else {
    for (std::int64_t t = from; t >= to; --t) steps.push_back(t);
  }
  return steps;
}

// Two-layer bidirectional LSTM over one stream; returns the [B x 2H]
// readout feature.
template <typename T>
Var<T> blstm_stream(const BackendConfig& config, ParamSet<T>& params, const std::string& prefix,
                    const Var<T>& seq) {
  Tape<T>& tape = seq.tape();
  const std::int64_t steps = seq.dim(1);
  const std::int64_t hidden = config.lstm_hidden;
  const std::int64_t center = center_step(steps);
  const bool center_only = config.readout == Readout::kCenter;
  std::vector<Var<T>> layer_input;  // per step, empty for layer 0
  std::vector<Var<T>> fwd, bwd;
  for (std::int64_t layer = 0; layer < config.lstm_layers; ++layer) {
    const bool top = layer + 1 == config.lstm_layers;
    std::vector<Var<T>> outputs[2];
    for (int dir = 0; dir < 2; ++dir) {
      const std::string name = prefix + ".layer" + std::to_string(layer) +
                               (dir == 0 ? ".forward" : ".backward");
      auto w = lstm_weights(params, tape, name);
      std::vector<Var<T>> projected(steps);
      if (layer == 0) {
        auto all = linear(seq, w.weight_ih, w.bias_ih);
        for (std::int64_t t = 0; t < steps; ++t) projected[t] = select_step(all, t);
      } else {
        for (std::int64_t t = 0; t < steps; ++t) {
          projected[t] = linear(layer_input[t], w.weight_ih, w.bias_ih);
        }
      }
      std::vector<std::int64_t> order =
          dir == 0 ? step_range(0, (top && center_only) ? center : steps - 1)
                   : step_range(steps - 1, (top && center_only) ? center : 0);
      outputs[dir] = run_lstm(projected, w, hidden, order);
    }
    fwd = outputs[0];
    bwd = outputs[1];
    if (!top) {
      layer_input.assign(steps, Var<T>());
      for (std::int64_t t = 0; t < steps; ++t) layer_input[t] = concat_features<T>({fwd[t], bwd[t]});
    }
  }
  if (center_only) return concat_features<T>({fwd[center], bwd[center]});
  Var<T> total = concat_features<T>({fwd[0], bwd[0]});
  for (std::int64_t t = 1; t < steps; ++t) total = add(total, concat_features<T>({fwd[t], bwd[t]}));
  return scale(total, T(1) / static_cast<T>(steps));
}

template <typename T>
Var<T> tc_stream(const BackendConfig& config, ParamSet<T>& params, const std::string& prefix,
                 const Var<T>& seq) {
  Tape<T>& tape = seq.tape();
  auto h = relu(conv1d_replicate(seq, tape.param(params.at(prefix + ".conv0.weight")),
                                 tape.param(params.at(prefix + ".conv0.bias"))));
  h = conv1d_replicate(h, tape.param(params.at(prefix + ".conv1.weight")),
                       tape.param(params.at(prefix + ".conv1.bias")));
  if (config.readout == Readout::kCenter) return select_step(h, center_step(seq.dim(1)));
  return mean_steps(h);
}

template <typename T>
Var<T> classify(ParamSet<T>& params, const std::string& prefix, const Var<T>& audio_feature,
                const Var<T>& video_feature) {
  Tape<T>& tape = audio_feature.tape();
  return linear(concat_features<T>({audio_feature, video_feature}),
                tape.param(params.at(prefix + ".classifier.weight")),
                tape.param(params.at(prefix + ".classifier.bias")));
}

template <typename T>
std::pair<Var<T>, Var<T>> as_batch(Tape<T>& tape, const EmbeddingSequence& audio,
                                   const EmbeddingSequence& video) {
  auto make = [&](const EmbeddingSequence& s) {
    return tape.constant(Tensor<T>(Shape{1, s.length, s.dim},
                                   Buffer<T>(s.values.begin(), s.values.end())));
  };
  return {make(audio), make(video)};
}

ClipLogits single_clip(BackendKind kind, const BackendConfig& config, ParamSet<float>& params,
                       const EmbeddingSequence& audio, const EmbeddingSequence& video) {
  if (audio.length != video.length) {
    throw AlignmentError("audio sequence has " + std::to_string(audio.length) +
                         " columns but video has " + std::to_string(video.length));
  }
  Tape<float> tape;
  auto [a, v] = as_batch<float>(tape, audio, video);
  auto logits = backend_logits(kind, config, params, a, v);
  ClipLogits out;
  out.logits = {logits.values()[0], logits.values()[1]};
  const std::int64_t c = center_step(audio.length);
  out.center_frame = c < static_cast<std::int64_t>(video.center_frame_indices.size())
                         ? video.center_frame_indices[c]
                         : c + 2;
  return out;
}

}  // namespace

template <typename T>
void init_lstm_backend(const BackendConfig& config, ParamSet<T>& params, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::int64_t h = config.lstm_hidden;
  for (const char* stream : kStreams) {
    for (std::int64_t layer = 0; layer < config.lstm_layers; ++layer) {
      const std::int64_t in = layer == 0 ? config.embedding_dim : 2 * h;
      for (const char* dir : {"forward", "backward"}) {
        const std::string name = std::string(kLstmBackendPrefix) + "." + stream + ".layer" +
                                 std::to_string(layer) + "." + dir;
        add_uniform(params, name + ".weight_ih", Shape{4 * h, in}, static_cast<double>(in), rng);
        add_uniform(params, name + ".weight_hh", Shape{4 * h, h}, static_cast<double>(h), rng);
        add_uniform(params, name + ".bias_ih", Shape{4 * h}, static_cast<double>(h), rng);
        add_uniform(params, name + ".bias_hh", Shape{4 * h}, static_cast<double>(h), rng);
      }
    }
  }
  const std::string cls = std::string(kLstmBackendPrefix) + ".classifier";
  add_uniform(params, cls + ".weight", Shape{2, 4 * h}, static_cast<double>(4 * h), rng);
  add_uniform(params, cls + ".bias", Shape{2}, static_cast<double>(4 * h), rng);
}

template <typename T>
void init_tc_backend(const BackendConfig& config, ParamSet<T>& params, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::int64_t f = config.tc_filters, k = config.tc_kernel;
  if (k % 2 == 0) throw ConfigError("temporal convolution kernel must be odd");
  for (const char* stream : kStreams) {
    const std::string base = std::string(kTcBackendPrefix) + "." + stream;
    add_uniform(params, base + ".conv0.weight", Shape{f, config.embedding_dim, k},
                static_cast<double>(config.embedding_dim * k), rng);
    add_uniform(params, base + ".conv0.bias", Shape{f}, static_cast<double>(config.embedding_dim * k), rng);
    add_uniform(params, base + ".conv1.weight", Shape{f, f, k}, static_cast<double>(f * k), rng);
    add_uniform(params, base + ".conv1.bias", Shape{f}, static_cast<double>(f * k), rng);
  }
  const std::string cls = std::string(kTcBackendPrefix) + ".classifier";
  add_uniform(params, cls + ".weight", Shape{2, 2 * f}, static_cast<double>(2 * f), rng);
  add_uniform(params, cls + ".bias", Shape{2}, static_cast<double>(2 * f), rng);
}

template <typename T>
Var<T> blstm_logits(const BackendConfig& config, ParamSet<T>& params, const Var<T>& audio,
                    const Var<T>& video) {
  check_pair(config, audio, video);
  const std::string p = kLstmBackendPrefix;
  return classify(params, p, blstm_stream(config, params, p + ".audio", audio),
                  blstm_stream(config, params, p + ".video", video));
}

template <typename T>
Var<T> tc_logits(const BackendConfig& config, ParamSet<T>& params, const Var<T>& audio,
                 const Var<T>& video) {
  check_pair(config, audio, video);
  const std::string p = kTcBackendPrefix;
  return classify(params, p, tc_stream(config, params, p + ".audio", audio),
                  tc_stream(config, params, p + ".video", video));
}

template <typename T>
Var<T> backend_logits(BackendKind kind, const BackendConfig& config, ParamSet<T>& params,
                      const Var<T>& audio, const Var<T>& video) {
  switch (kind) {
    case BackendKind::kLstm:
      return blstm_logits(config, params, audio, video);
    case BackendKind::kTc:
      return tc_logits(config, params, audio, video);
    case BackendKind::kEnsemble:
      break;
  }
  throw ConfigError("the ensemble has no logits of its own; it averages probabilities");
}

ClipLogits blstm_forward(const BackendConfig& config, ParamSet<float>& params,
                         const EmbeddingSequence& audio, const EmbeddingSequence& video) {
  return single_clip(BackendKind::kLstm, config, params, audio, video);
}

ClipLogits tc_forward(const BackendConfig& config, ParamSet<float>& params,
                      const EmbeddingSequence& audio, const EmbeddingSequence& video) {
  return single_clip(BackendKind::kTc, config, params, audio, video);
}

double speaking_probability(const std::array<double, 2>& logits) {
  const double d = logits[0] - logits[1];
  if (d >= 0) {
    const double e = std::exp(-d);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(d));
}

bool has_backend_params(BackendKind kind, const ParamSet<float>& params) {
  switch (kind) {
    case BackendKind::kLstm:
      return params.contains(std::string(kLstmBackendPrefix) + ".classifier.weight");
    case BackendKind::kTc:
      return params.contains(std::string(kTcBackendPrefix) + ".classifier.weight");
    case BackendKind::kEnsemble:
      return has_backend_params(BackendKind::kLstm, params) &&
             has_backend_params(BackendKind::kTc, params);
  }
  return false;
}

double predict_proba(BackendKind kind, const BackendConfig& config, ParamSet<float>& params,
                     const EmbeddingSequence& audio, const EmbeddingSequence& video) {
  if (!has_backend_params(kind, params)) {
    throw StateError("parameters for the " + backend_name(kind) + " back-end are missing");
  }
  if (kind == BackendKind::kEnsemble) {
    const double lstm = speaking_probability(blstm_forward(config, params, audio, video).logits);
    const double tc = speaking_probability(tc_forward(config, params, audio, video).logits);
    return 0.5 * (lstm + tc);
  }
  return speaking_probability(single_clip(kind, config, params, audio, video).logits);
}

std::string backend_name(BackendKind kind) {
  switch (kind) {
    case BackendKind::kLstm:
      return "lstm";
    case BackendKind::kTc:
      return "tc";
    case BackendKind::kEnsemble:
      return "ensemble";
  }
  return "unknown";
}

#define ASD_INSTANTIATE_BACKENDS(T)                                                          \
  template void init_lstm_backend<T>(const BackendConfig&, ParamSet<T>&, std::uint64_t);     \
  template void init_tc_backend<T>(const BackendConfig&, ParamSet<T>&, std::uint64_t);       \
  template Var<T> blstm_logits<T>(const BackendConfig&, ParamSet<T>&, const Var<T>&,         \
                                  const Var<T>&);                                            \
  template Var<T> tc_logits<T>(const BackendConfig&, ParamSet<T>&, const Var<T>&,            \
                               const Var<T>&);                                               \
  template Var<T> backend_logits<T>(BackendKind, const BackendConfig&, ParamSet<T>&,         \
                                    const Var<T>&, const Var<T>&);

ASD_INSTANTIATE_BACKENDS(float)
ASD_INSTANTIATE_BACKENDS(double)

#undef ASD_INSTANTIATE_BACKENDS

}  // namespace asd
