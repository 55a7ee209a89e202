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

#include "asd/synthetic.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "asd/error.h"

namespace asd {

namespace {

constexpr int kBackground = 40;
constexpr int kBar = 220;
constexpr int kPixelNoise = 10;
constexpr int kBrightThreshold = (kBackground + kBar) / 2;
constexpr std::int64_t kSamplesPerFrame = kBundleSampleRate / kBundleFps;

struct Run {
  bool speaking = false;
  std::int64_t length = 0;
  double freq_hz = 0;
  double phase = 0;
  double rest_height = 0;  // fraction of the frame, non-speaking runs
};

std::int64_t run_length(double mean, std::mt19937_64& rng) {
  if (mean <= 1.0) return 1;
  std::geometric_distribution<std::int64_t> geo(1.0 / mean);
  return 1 + geo(rng);
}

std::string zero_pad(std::int64_t v, int width) {
  std::string s = std::to_string(v);
  return std::string(std::max<int>(0, width - static_cast<int>(s.size())), '0') + s;
}

void draw_frame(std::uint8_t* out, std::int64_t side, std::int64_t bar_height,
                std::mt19937_64& rng) {
  std::uniform_int_distribution<int> noise(-kPixelNoise, kPixelNoise);
  const std::int64_t bar_w = side / 3, x0 = (side - bar_w) / 2;
  const std::int64_t y0 = (side - bar_height) / 2;
  for (std::int64_t y = 0; y < side; ++y) {
    for (std::int64_t x = 0; x < side; ++x) {
      const bool on = x >= x0 && x < x0 + bar_w && y >= y0 && y < y0 + bar_height;
      const int base = on ? kBar : kBackground;
      for (int c = 0; c < 3; ++c) {
        out[(y * side + x) * 3 + c] = static_cast<std::uint8_t>(std::clamp(base + noise(rng), 0, 255));
      }
    }
  }
}

// Quantized to the s16 grid so bundles survive a disk round trip exactly.
float quantize(double s) {
  return static_cast<float>(std::clamp(std::round(s * 32767.0), -32768.0, 32767.0) / 32767.0);
}

TrackBundle make_track(const SyntheticConfig& cfg, std::int64_t index, std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double mean_quiet =
      cfg.mean_speaking_run * (1.0 - cfg.positive_rate) / cfg.positive_rate;
  const std::int64_t n = cfg.frames_per_track, side = cfg.resolution;

  TrackBundle b;
  const std::int64_t video = index / cfg.entities_per_video;
  b.video_id = "synth" + zero_pad(video, 4);
  b.entity_id = b.video_id + "_e" + std::to_string(index % cfg.entities_per_video);
  b.start_time = 900.0;
  b.height = b.width = side;
  b.pixels.resize(n * side * side * 3);
  b.waveform.sample_rate = kBundleSampleRate;
  b.waveform.samples.resize(n * kSamplesPerFrame);
  b.labels.resize(n);
  b.annotated.assign(n, true);

  Run run;
  bool speaking = u01(rng) < cfg.positive_rate;
  std::int64_t left = 0;
  for (std::int64_t f = 0; f < n; ++f) {
    if (left == 0) {
      run = Run{};
      run.speaking = speaking;
      run.length = run_length(speaking ? cfg.mean_speaking_run : mean_quiet, rng);
      run.freq_hz = 3.0 + 3.0 * u01(rng);
      run.phase = 2 * std::numbers::pi * u01(rng);
      run.rest_height = 0.15 + 0.45 * u01(rng);
      left = run.length;
      speaking = !speaking;
    }
    --left;
    b.labels[f] = run.speaking ? SpeakingLabel::kSpeakingAudible : SpeakingLabel::kNotSpeaking;
    auto openness = [&](double t) {
      return 0.5 * (1.0 - std::cos(2 * std::numbers::pi * run.freq_hz * t + run.phase));
    };
    const double frame_time = static_cast<double>(f) / kBundleFps;
    double height_frac;
    if (run.speaking) {
      height_frac = 0.15 + 0.45 * openness(frame_time);
    } else {
      std::uniform_int_distribution<int> jitter(-1, 1);
      height_frac = run.rest_height + jitter(rng) / static_cast<double>(side);
    }
    const auto bar = std::clamp<std::int64_t>(std::llround(height_frac * side), 1, side);
    draw_frame(b.pixels.data() + f * side * side * 3, side, bar, rng);

    const double quiet = 0.03 + 0.07 * u01(rng);
    for (std::int64_t s = 0; s < kSamplesPerFrame; ++s) {
      const std::int64_t k = f * kSamplesPerFrame + s;
      const double carrier = 2.0 * u01(rng) - 1.0;
      const double t = static_cast<double>(k) / kBundleSampleRate;
      const double amp = run.speaking ? 0.1 + 0.8 * openness(t) : quiet;
      b.waveform.samples[k] = quantize(amp * carrier);
    }
  }
  return b;
}

}  // namespace

std::vector<TrackBundle> generate_synthetic(const SyntheticConfig& config, std::uint64_t seed) {
  if (config.num_tracks <= 0) throw ConfigError("synthetic track count must be positive");
  if (config.frames_per_track < config.clip_frames || config.frames_per_track < 5) {
    throw ConfigError("synthetic tracks need at least " +
                      std::to_string(std::max<std::int64_t>(config.clip_frames, 5)) +
                      " frames, got " + std::to_string(config.frames_per_track));
  }
  if (!(config.positive_rate > 0 && config.positive_rate < 1)) {
    throw ConfigError("positive_rate must lie strictly between 0 and 1");
  }
  if (config.resolution < 8 || config.entities_per_video <= 0 ||
      !(config.mean_speaking_run >= 1)) {
    throw ConfigError("invalid synthetic geometry");
  }
  std::vector<TrackBundle> out;
  out.reserve(config.num_tracks);
  for (std::int64_t i = 0; i < config.num_tracks; ++i) out.push_back(make_track(config, i, seed));
  return out;
}

std::int64_t measured_bar_height(const TrackBundle& bundle, std::int64_t frame) {
  const auto px = bundle.frame(frame);
  const std::int64_t x = bundle.width / 2;
  std::int64_t count = 0;
  for (std::int64_t y = 0; y < bundle.height; ++y) {
    if (px[(y * bundle.width + x) * 3] > kBrightThreshold) ++count;
  }
  return count;
}

}  // namespace asd
