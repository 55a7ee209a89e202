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

#include "asd/audio_features.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include <unsupported/Eigen/FFT>

#include "asd/error.h"

namespace asd {

namespace {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

}  // namespace

std::vector<double> mel_filterbank(int num_filters, int dft_size, int sample_rate) {
  const int bins = dft_size / 2 + 1;
  const double mel_high = hz_to_mel(sample_rate / 2.0);
  const double spacing = mel_high / (num_filters + 1);
  std::vector<double> bank(static_cast<std::size_t>(num_filters) * bins, 0.0);
  for (int m = 0; m < num_filters; ++m) {
    const double left = spacing * m, centre = spacing * (m + 1), right = spacing * (m + 2);
    for (int k = 0; k < bins; ++k) {
      const double mel = hz_to_mel(static_cast<double>(k) * sample_rate / dft_size);
      double w = 0.0;
      if (mel > left && mel <= centre) {
        w = (mel - left) / (centre - left);
      } else if (mel > centre && mel < right) {
        w = (right - mel) / (right - centre);
      }
      bank[static_cast<std::size_t>(m) * bins + k] = w;
    }
  }
  return bank;
}

CepstralFrames compute_mfcc(const Waveform& wave, const MfccOptions& options) {
  if (wave.sample_rate <= 0) throw InputError("sample rate must be positive");
  const int window = static_cast<int>(std::lround(options.window_seconds * wave.sample_rate));
  const int hop = static_cast<int>(std::lround(options.hop_seconds * wave.sample_rate));
  const int n_dft = options.dft_size;
  if (window > n_dft) throw ConfigError("analysis window longer than the DFT size");
  const std::int64_t length = static_cast<std::int64_t>(wave.samples.size());
  if (length < window) {
    throw InputError("waveform has " + std::to_string(length) +
                     " samples, fewer than one " + std::to_string(window) +
                     "-sample analysis window");
  }
  for (float s : wave.samples) {
    if (!std::isfinite(s)) throw NumericError("waveform contains a non-finite sample");
  }

  const std::int64_t frames = (length - window) / hop + 1;
  const int bins = n_dft / 2 + 1;
  const int filters = options.num_filters;

  std::vector<double> hamming(window);
  for (int n = 0; n < window; ++n) {
    hamming[n] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * n / (window - 1));
  }
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  const std::vector<double> bank = mel_filterbank(filters, n_dft, wave.sample_rate);
  std::vector<double> dct(static_cast<std::size_t>(kNumCepstra) * filters);
  for (int c = 0; c < kNumCepstra; ++c) {
    const double norm = std::sqrt((c == 0 ? 1.0 : 2.0) / filters);
    for (int m = 0; m < filters; ++m) {
      dct[c * filters + m] = norm * std::cos(std::numbers::pi * c * (m + 0.5) / filters);
    }
  }

  CepstralFrames out;
  out.frame_rate = static_cast<double>(wave.sample_rate) / hop;
  out.origin_time = 0.5 * window / wave.sample_rate;
  out.coefficients.resize(static_cast<std::size_t>(frames) * kNumCepstra);
  std::vector<double> buf(n_dft, 0.0), magnitude(bins), log_mel(filters);
  std::vector<std::complex<double>> spectrum;
  for (std::int64_t f = 0; f < frames; ++f) {
    const float* x = wave.samples.data() + f * hop;
    for (int n = window - 1; n > 0; --n) {
      buf[n] = (x[n] - options.preemphasis * x[n - 1]) * hamming[n];
    }
    buf[0] = (x[0] - options.preemphasis * x[0]) * hamming[0];
    fft.fwd(spectrum, buf);
    for (int k = 0; k < bins; ++k) magnitude[k] = std::abs(spectrum[k]);
    for (int m = 0; m < filters; ++m) {
      double e = 0.0;
      const double* w = bank.data() + static_cast<std::size_t>(m) * bins;
      for (int k = 0; k < bins; ++k) e += w[k] * magnitude[k];
      log_mel[m] = std::log(std::max(e, options.log_floor));
    }
    double* dst = out.coefficients.data() + f * kNumCepstra;
    for (int c = 0; c < kNumCepstra; ++c) {
      double acc = 0.0;
      for (int m = 0; m < filters; ++m) acc += dct[c * filters + m] * log_mel[m];
      dst[c] = acc;
    }
  }
  return out;
}

void subtract_cepstral_mean(CepstralFrames& cepstra) {
  const std::int64_t n = cepstra.num_frames();
  if (n == 0) return;
  for (int c = 0; c < kNumCepstra; ++c) {
    double mean = 0.0;
    for (std::int64_t f = 0; f < n; ++f) mean += cepstra.at(c, f);
    mean /= static_cast<double>(n);
    for (std::int64_t f = 0; f < n; ++f) cepstra.coefficients[f * kNumCepstra + c] -= mean;
  }
}

AudioBlock slice_audio_window(const CepstralFrames& cepstra, std::int64_t video_frame_index) {
  const std::int64_t n = cepstra.num_frames();
  if (n == 0) throw InputError("cannot slice an empty cepstral sequence");
  AudioBlock block{};
  const std::int64_t start = video_frame_index * kCepstraPerVideoFrame;
  for (int t = 0; t < kAudioWindowFrames; ++t) {
    const std::int64_t col = std::clamp<std::int64_t>(start + t, 0, n - 1);
    for (int c = 0; c < kNumCepstra; ++c) {
      block[c * kAudioWindowFrames + t] = cepstra.at(c, col);
    }
  }
  return block;
}

}  // namespace asd
