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

#ifndef ASD_ENCODERS_H_
#define ASD_ENCODERS_H_

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "asd/audio_features.h"
#include "asd/autograd.h"
#include "asd/layers.h"
#include "asd/tensor.h"

namespace asd {

inline constexpr std::int64_t kVideoWindowFrames = 5;
inline constexpr const char* kVideoEncoderPrefix = "video_encoder";
inline constexpr const char* kAudioEncoderPrefix = "audio_encoder";

enum class ModelPreset { kTiny, kFull };

// Front-end geometry. The tiny preset divides every channel width by 8 and
// runs at 72 x 72, the smallest round resolution the video stack admits;
// the embedding stays 512-D in both presets.
struct EncoderConfig {
  std::int64_t resolution = 112;
  std::int64_t width_divisor = 1;
  std::int64_t embedding_dim = 512;

  static EncoderConfig for_preset(ModelPreset preset);
};

// conv3d(96, 5x7x7, stride 1x2x2) -> maxpool 3/2 -> conv2d(256, 5x5, s2, p1)
// -> maxpool 3/2 -> 3 x conv2d(512, 3x3, p1) -> maxpool 3/2 -> linear.
// Every convolution is followed by a ReLU.
LayerStack video_encoder_stack(const EncoderConfig& config);

// conv2d(64, 3x3, p1) -> maxpool 1x2 over time -> conv2d(192) -> conv2d(256)
// -> maxpool 2x2 -> linear. Every convolution is followed by a ReLU.
LayerStack audio_encoder_stack(const EncoderConfig& config);

Shape video_window_shape(const EncoderConfig& config);  // 3 x 5 x R x R
Shape audio_window_shape();                             // 1 x 13 x 20

template <typename T>
void init_encoders(const EncoderConfig& config, ParamSet<T>& params, std::uint64_t seed);

// Batched front-ends: [N x 3 x 5 x R x R] -> [N x D] and
// [N x 1 x 13 x 20] -> [N x D].
template <typename T>
Var<T> encode_video_windows(const EncoderConfig& config, ParamSet<T>& params,
                            const Var<T>& windows);
template <typename T>
Var<T> encode_audio_windows(const EncoderConfig& config, ParamSet<T>& params,
                            const Var<T>& blocks);

// Single-window inference with values in [0, 1] laid out 3 x 5 x R x R.
std::vector<float> encode_video_window(const EncoderConfig& config, ParamSet<float>& params,
                                       const Tensor<float>& window);
std::vector<float> encode_audio_window(const EncoderConfig& config, ParamSet<float>& params,
                                       const AudioBlock& block);

// T consecutive RGB face crops (height x width x 3 bytes each) and cepstra
// on a shared timeline: frames[k] sits at video frame cepstral_offset + k of
// `cepstra`.
struct Clip {
  std::int64_t height = 0;
  std::int64_t width = 0;
  std::vector<std::span<const std::uint8_t>> frames;
  const CepstralFrames* cepstra = nullptr;
  std::int64_t cepstral_offset = 0;

  std::int64_t num_frames() const { return static_cast<std::int64_t>(frames.size()); }
  std::int64_t num_windows() const { return num_frames() - (kVideoWindowFrames - 1); }
};

// Appends the 3 x 5 x H x W window of frames[start .. start + 4], scaled to
// [0, 1].
template <typename T>
void append_video_window(std::span<const std::span<const std::uint8_t>> frames,
                         std::int64_t height, std::int64_t width, Buffer<T>& out);

template <typename T>
void append_audio_window(const CepstralFrames& cepstra, std::int64_t video_frame_index,
                         Buffer<T>& out);

enum class Stream { kAudio, kVideo };

// D x L embedding matrix stored step-major: column j is
// values[j * dim .. (j + 1) * dim).
struct EmbeddingSequence {
  Stream stream = Stream::kVideo;
  std::int64_t dim = 0;
  std::int64_t length = 0;
  std::vector<float> values;
  // Clip-relative video frame index of each window's centre (j + 2).
  std::vector<std::int64_t> center_frame_indices;

  std::int64_t rows() const { return dim; }
  std::int64_t cols() const { return length; }
  float at(std::int64_t row, std::int64_t col) const { return values[col * dim + row]; }
};

struct SlidingEncoding {
  EmbeddingSequence audio;
  EmbeddingSequence video;
};

// Window j covers frames [j, j + 4] and cepstral columns [4j, 4j + 20) of
// the clip, giving T - 4 columns per stream.
SlidingEncoding sliding_encode(const EncoderConfig& config, ParamSet<float>& params,
                               const Clip& clip);

template <typename T>
struct EncodedBatch {
  Var<T> audio;  // [B x L x D]
  Var<T> video;  // [B x L x D]
};

// Differentiable sliding encoding of equally long clips.
template <typename T>
EncodedBatch<T> encode_clips(const EncoderConfig& config, ParamSet<T>& params, Tape<T>& tape,
                             std::span<const Clip> clips);

}  // namespace asd

#endif  // ASD_ENCODERS_H_
