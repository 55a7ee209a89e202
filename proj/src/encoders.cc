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

#include "asd/encoders.h"

#include <random>
#include <string>

#include "asd/error.h"
#include "asd/ops.h"

namespace asd {

namespace {

std::int64_t width(const EncoderConfig& config, std::int64_t channels) {
  if (config.width_divisor <= 0) throw ConfigError("width_divisor must be positive");
  return std::max<std::int64_t>(1, channels / config.width_divisor);
}

void check_clip(const EncoderConfig& config, const Clip& clip) {
  if (clip.num_frames() < kVideoWindowFrames) {
    throw InputError("clip has " + std::to_string(clip.num_frames()) +
                     " frames; at least 5 are needed");
  }
  if (clip.height != config.resolution || clip.width != config.resolution) {
    throw DimensionError("clip frames are " + std::to_string(clip.height) + "x" +
                         std::to_string(clip.width) + " but the encoder expects " +
                         std::to_string(config.resolution) + "x" +
                         std::to_string(config.resolution));
  }
  if (clip.cepstra == nullptr) throw InputError("clip has no cepstra");
  const std::size_t frame_bytes = static_cast<std::size_t>(clip.height * clip.width * 3);
  for (const auto& f : clip.frames) {
    if (f.size() != frame_bytes) throw DimensionError("clip frame has the wrong byte count");
  }
}

}  // namespace

EncoderConfig EncoderConfig::for_preset(ModelPreset preset) {
  EncoderConfig config;
  if (preset == ModelPreset::kTiny) {
    config.width_divisor = 8;
    config.resolution = 72;
  }
  return config;
}

LayerStack video_encoder_stack(const EncoderConfig& config) {
  LayerStack stack;
  stack.push("conv1", Conv3dSpec{width(config, 96), {5, 7, 7}, {1, 2, 2}, {0, 0, 0}});
  stack.push("relu1", ReluSpec{});
  stack.push("squeeze", SqueezeTimeSpec{});
  stack.push("pool1", MaxPool2dSpec{{3, 3}, {2, 2}});
  stack.push("conv2", Conv2dSpec{width(config, 256), {5, 5}, {2, 2}, {1, 1}});
  stack.push("relu2", ReluSpec{});
  stack.push("pool2", MaxPool2dSpec{{3, 3}, {2, 2}});
  stack.push("conv3", Conv2dSpec{width(config, 512), {3, 3}, {1, 1}, {1, 1}});
  stack.push("relu3", ReluSpec{});
  stack.push("conv4", Conv2dSpec{width(config, 512), {3, 3}, {1, 1}, {1, 1}});
  stack.push("relu4", ReluSpec{});
  stack.push("conv5", Conv2dSpec{width(config, 512), {3, 3}, {1, 1}, {1, 1}});
  stack.push("relu5", ReluSpec{});
  stack.push("pool5", MaxPool2dSpec{{3, 3}, {2, 2}});
  stack.push("flatten", FlattenSpec{});
  stack.push("fc", LinearSpec{config.embedding_dim});
  return stack;
}

LayerStack audio_encoder_stack(const EncoderConfig& config) {
  LayerStack stack;
  stack.push("conv1", Conv2dSpec{width(config, 64), {3, 3}, {1, 1}, {1, 1}});
  stack.push("relu1", ReluSpec{});
  stack.push("pool1", MaxPool2dSpec{{1, 2}, {1, 2}});
  stack.push("conv2", Conv2dSpec{width(config, 192), {3, 3}, {1, 1}, {1, 1}});
  stack.push("relu2", ReluSpec{});
  stack.push("conv3", Conv2dSpec{width(config, 256), {3, 3}, {1, 1}, {1, 1}});
  stack.push("relu3", ReluSpec{});
  stack.push("pool3", MaxPool2dSpec{{2, 2}, {2, 2}});
  stack.push("flatten", FlattenSpec{});
  stack.push("fc", LinearSpec{config.embedding_dim});
  return stack;
}

Shape video_window_shape(const EncoderConfig& config) {
  return {3, kVideoWindowFrames, config.resolution, config.resolution};
}

Shape audio_window_shape() { return {1, kNumCepstra, kAudioWindowFrames}; }

template <typename T>
void init_encoders(const EncoderConfig& config, ParamSet<T>& params, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Shape video = video_window_shape(config);
  video.insert(video.begin(), 1);
  Shape audio = audio_window_shape();
  audio.insert(audio.begin(), 1);
  video_encoder_stack(config).init(params, kVideoEncoderPrefix, video, rng);
  audio_encoder_stack(config).init(params, kAudioEncoderPrefix, audio, rng);
}

template <typename T>
Var<T> encode_video_windows(const EncoderConfig& config, ParamSet<T>& params,
                            const Var<T>& windows) {
  Shape expected = video_window_shape(config);
  if (windows.rank() != 5 || Shape(windows.shape().begin() + 1, windows.shape().end()) != expected) {
    throw DimensionError("video encoder expects N x " + shape_string(expected) + ", got " +
                         shape_string(windows.shape()));
  }
  return video_encoder_stack(config).forward(params, kVideoEncoderPrefix, windows);
}

template <typename T>
Var<T> encode_audio_windows(const EncoderConfig& config, ParamSet<T>& params,
                            const Var<T>& blocks) {
  Shape expected = audio_window_shape();
  if (blocks.rank() != 4 || Shape(blocks.shape().begin() + 1, blocks.shape().end()) != expected) {
    throw DimensionError("audio encoder expects N x " + shape_string(expected) + ", got " +
                         shape_string(blocks.shape()));
  }
  return audio_encoder_stack(config).forward(params, kAudioEncoderPrefix, blocks);
}

std::vector<float> encode_video_window(const EncoderConfig& config, ParamSet<float>& params,
                                       const Tensor<float>& window) {
  if (window.shape() != video_window_shape(config)) {
    throw DimensionError("video window must be " + shape_string(video_window_shape(config)) +
                         ", got " + shape_string(window.shape()));
  }
  Tape<float> tape;
  Shape batched = window.shape();
  batched.insert(batched.begin(), 1);
  auto out = encode_video_windows(config, params,
                                  tape.constant(Tensor<float>(batched, Buffer<float>(window.data().begin(), window.data().end()))));
  return {out.values().begin(), out.values().end()};
}

std::vector<float> encode_audio_window(const EncoderConfig& config, ParamSet<float>& params,
                                       const AudioBlock& block) {
  Tape<float> tape;
  Buffer<float> values(block.begin(), block.end());
  auto out = encode_audio_windows(
      config, params, tape.constant(Tensor<float>(Shape{1, 1, kNumCepstra, kAudioWindowFrames},
                                                  std::move(values))));
  return {out.values().begin(), out.values().end()};
}

template <typename T>
void append_video_window(std::span<const std::span<const std::uint8_t>> frames,
                         std::int64_t height, std::int64_t width, Buffer<T>& out) {
  if (static_cast<std::int64_t>(frames.size()) != kVideoWindowFrames) {
    throw DimensionError("a video window takes exactly 5 frames");
  }
  const std::int64_t plane = height * width;
  const std::size_t base = out.size();
  out.resize(base + static_cast<std::size_t>(3 * kVideoWindowFrames * plane));
  const T scale = T(1) / T(255);
  for (std::int64_t t = 0; t < kVideoWindowFrames; ++t) {
    const std::uint8_t* src = frames[t].data();
    for (std::int64_t p = 0; p < plane; ++p) {
      for (std::int64_t c = 0; c < 3; ++c) {
        out[base + (c * kVideoWindowFrames + t) * plane + p] = src[p * 3 + c] * scale;
      }
    }
  }
}

template <typename T>
void append_audio_window(const CepstralFrames& cepstra, std::int64_t video_frame_index,
                         Buffer<T>& out) {
  const AudioBlock block = slice_audio_window(cepstra, video_frame_index);
  for (double v : block) out.push_back(static_cast<T>(v));
}

namespace {

template <typename T>
void append_clip_windows(const Clip& clip, Buffer<T>& video, Buffer<T>& audio) {
  for (std::int64_t j = 0; j < clip.num_windows(); ++j) {
    append_video_window<T>(std::span(clip.frames).subspan(j, kVideoWindowFrames), clip.height,
                           clip.width, video);
    append_audio_window<T>(*clip.cepstra, clip.cepstral_offset + j, audio);
  }
}

}  // namespace

SlidingEncoding sliding_encode(const EncoderConfig& config, ParamSet<float>& params,
                               const Clip& clip) {
  check_clip(config, clip);
  Tape<float> tape;
  const EncodedBatch<float> batch = encode_clips<float>(config, params, tape, std::span(&clip, 1));
  const std::int64_t length = clip.num_windows();
  auto pack = [&](const Var<float>& v, Stream stream) {
    EmbeddingSequence seq;
    seq.stream = stream;
    seq.dim = config.embedding_dim;
    seq.length = length;
    seq.values.assign(v.values().begin(), v.values().end());
    for (std::int64_t j = 0; j < length; ++j) seq.center_frame_indices.push_back(j + 2);
    return seq;
  };
  return {pack(batch.audio, Stream::kAudio), pack(batch.video, Stream::kVideo)};
}

template <typename T>
EncodedBatch<T> encode_clips(const EncoderConfig& config, ParamSet<T>& params, Tape<T>& tape,
                             std::span<const Clip> clips) {
  if (clips.empty()) throw InputError("encode_clips: empty batch");
  const std::int64_t length = clips[0].num_windows();
  Buffer<T> video, audio;
  for (const Clip& clip : clips) {
    check_clip(config, clip);
    if (clip.num_windows() != length) throw InputError("encode_clips: clips differ in length");
    append_clip_windows(clip, video, audio);
  }
  const std::int64_t n = static_cast<std::int64_t>(clips.size()) * length;
  Shape vshape = video_window_shape(config);
  vshape.insert(vshape.begin(), n);
  Shape ashape = audio_window_shape();
  ashape.insert(ashape.begin(), n);
  auto v = encode_video_windows(config, params, tape.constant(Tensor<T>(vshape, std::move(video))));
  auto a = encode_audio_windows(config, params, tape.constant(Tensor<T>(ashape, std::move(audio))));
  const Shape seq{static_cast<std::int64_t>(clips.size()), length, config.embedding_dim};
  return {reshape(a, seq), reshape(v, seq)};
}

#define ASD_INSTANTIATE_ENCODERS(T)                                                         \
  template void init_encoders<T>(const EncoderConfig&, ParamSet<T>&, std::uint64_t);        \
  template Var<T> encode_video_windows<T>(const EncoderConfig&, ParamSet<T>&, const Var<T>&); \
  template Var<T> encode_audio_windows<T>(const EncoderConfig&, ParamSet<T>&, const Var<T>&); \
  template void append_video_window<T>(std::span<const std::span<const std::uint8_t>>,      \
                                       std::int64_t, std::int64_t, Buffer<T>&);             \
  template void append_audio_window<T>(const CepstralFrames&, std::int64_t, Buffer<T>&);    \
  template EncodedBatch<T> encode_clips<T>(const EncoderConfig&, ParamSet<T>&, Tape<T>&,    \
                                           std::span<const Clip>);

ASD_INSTANTIATE_ENCODERS(float)
ASD_INSTANTIATE_ENCODERS(double)

#undef ASD_INSTANTIATE_ENCODERS

}  // namespace asd
