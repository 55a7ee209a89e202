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

#ifndef ASD_AUDIO_FEATURES_H_
#define ASD_AUDIO_FEATURES_H_

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace asd {

inline constexpr int kNumCepstra = 13;
inline constexpr int kAudioWindowFrames = 20;
// 100 cepstral frames per second against 25 video frames per second.
inline constexpr int kCepstraPerVideoFrame = 4;
inline constexpr double kCepstralFrameRate = 100.0;

struct Waveform {
  std::vector<float> samples;
  int sample_rate = 16000;

  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
};

struct MfccOptions {
  double window_seconds = 0.025;
  double hop_seconds = 0.010;
  int dft_size = 512;
  int num_filters = 40;
  double preemphasis = 0.97;
  double log_floor = 1e-10;
};

// 13 x N cepstra stored frame-major: coefficient c of frame n is
// coefficients[n * 13 + c].
struct CepstralFrames {
  std::vector<double> coefficients;
  double frame_rate = kCepstralFrameRate;
  // Time of the centre of frame 0, in seconds.
  double origin_time = 0.0;

  std::int64_t num_frames() const {
    return static_cast<std::int64_t>(coefficients.size()) / kNumCepstra;
  }
  double at(int coeff, std::int64_t frame) const {
    return coefficients[frame * kNumCepstra + coeff];
  }
  std::span<const double, kNumCepstra> frame(std::int64_t n) const {
    return std::span<const double, kNumCepstra>(coefficients.data() + n * kNumCepstra,
                                                kNumCepstra);
  }
};

// Encoder input block, row-major [coefficient][time].
using AudioBlock = std::array<double, kNumCepstra * kAudioWindowFrames>;

// Pre-emphasis (per frame) -> Hamming -> |DFT| -> mel filterbank -> log ->
// orthonormal DCT-II, keeping c0..c12.
CepstralFrames compute_mfcc(const Waveform& wave, const MfccOptions& options = {});

// Subtracts the per-coefficient mean over all frames.
void subtract_cepstral_mean(CepstralFrames& cepstra);

// The 20 columns starting at 4 * video_frame_index. Columns past either end
// replicate the nearest real column.
AudioBlock slice_audio_window(const CepstralFrames& cepstra, std::int64_t video_frame_index);

// Triangular filters on the HTK mel scale spanning 0 Hz to Nyquist, as a
// [num_filters][dft_size / 2 + 1] row-major matrix.
std::vector<double> mel_filterbank(int num_filters, int dft_size, int sample_rate);

}  // namespace asd

#endif  // ASD_AUDIO_FEATURES_H_
