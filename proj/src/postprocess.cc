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

#include "asd/postprocess.h"

#include <algorithm>
#include <cmath>

#include "asd/error.h"

namespace asd {

namespace {

// x[clamp(i, 0, n - 1)].
double replicated(const std::vector<double>& x, std::int64_t i) {
  const std::int64_t n = static_cast<std::int64_t>(x.size());
  return x[std::clamp<std::int64_t>(i, 0, n - 1)];
}

void check_filter_args(const std::vector<double>& x, std::int64_t w) {
  if (x.empty()) throw InputError("cannot smooth an empty track");
  if (w <= 0 || w % 2 == 0) throw ConfigError("filter window must be a positive odd count");
}

}  // namespace

SmoothingMethod parse_smoothing_method(std::string_view name) {
  if (name == "none") return SmoothingMethod::kNone;
  if (name == "median") return SmoothingMethod::kMedian;
  if (name == "wiener") return SmoothingMethod::kWiener;
  throw ConfigError("unknown smoothing method '" + std::string(name) +
                    "' (expected none, median or wiener)");
}

std::string smoothing_method_name(SmoothingMethod method) {
  switch (method) {
    case SmoothingMethod::kNone:
      return "none";
    case SmoothingMethod::kMedian:
      return "median";
    case SmoothingMethod::kWiener:
      return "wiener";
  }
  return "none";
}

void validate_track(const ScoreTrack& track) {
  if (track.scores.empty()) throw InputError("track '" + track.entity_id + "' is empty");
  if (track.scores.size() != track.frame_timestamps.size()) {
    throw InputError("track '" + track.entity_id + "' has " +
                     std::to_string(track.scores.size()) + " scores but " +
                     std::to_string(track.frame_timestamps.size()) + " timestamps");
  }
  for (std::size_t i = 0; i < track.scores.size(); ++i) {
    if (!(track.scores[i] >= 0.0 && track.scores[i] <= 1.0)) {
      throw InputError("track '" + track.entity_id + "' score at index " + std::to_string(i) +
                       " is outside [0, 1]");
    }
  }
  for (std::size_t i = 1; i < track.frame_timestamps.size(); ++i) {
    if (!(track.frame_timestamps[i] > track.frame_timestamps[i - 1])) {
      throw InputError("track '" + track.entity_id + "' timestamps do not increase at index " +
                       std::to_string(i));
    }
  }
}

std::int64_t window_frames(double window_seconds, double fps) {
  if (!(window_seconds > 0) || !(fps > 0)) {
    throw ConfigError("smoothing window and frame rate must be positive");
  }
  // The small slack keeps products like 0.52 * 25 from rounding up a frame.
  auto w = static_cast<std::int64_t>(std::ceil(window_seconds * fps - 1e-9));
  w = std::max<std::int64_t>(w, 1);
  return w % 2 == 0 ? w + 1 : w;
}

std::vector<double> median_filter(const std::vector<double>& x, std::int64_t w) {
  check_filter_args(x, w);
  const std::int64_t n = static_cast<std::int64_t>(x.size()), h = w / 2;
  std::vector<double> out(n), window(w);
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t k = 0; k < w; ++k) window[k] = replicated(x, i - h + k);
    std::nth_element(window.begin(), window.begin() + h, window.end());
    out[i] = window[h];
  }
  return out;
}

std::vector<double> wiener_filter(const std::vector<double>& x, std::int64_t w) {
  check_filter_args(x, w);
  const std::int64_t n = static_cast<std::int64_t>(x.size()), h = w / 2;
  std::vector<double> mean(n), var(n);
  for (std::int64_t i = 0; i < n; ++i) {
    double s = 0;
    for (std::int64_t k = -h; k <= h; ++k) s += replicated(x, i + k);
    const double mu = s / w;
    double v = 0;
    for (std::int64_t k = -h; k <= h; ++k) {
      const double d = replicated(x, i + k) - mu;
      v += d * d;
    }
    mean[i] = mu;
    var[i] = v / w;
  }
  double noise = 0;
  for (double v : var) noise += v;
  noise /= n;
  std::vector<double> out(n);
  for (std::int64_t i = 0; i < n; ++i) {
    const double denom = std::max(var[i], noise);
    const double gain = denom > 0 ? std::max(var[i] - noise, 0.0) / denom : 0.0;
    out[i] = std::clamp(mean[i] + gain * (x[i] - mean[i]), 0.0, 1.0);
  }
  return out;
}

ScoreTrack median_smooth(const ScoreTrack& track, double window_seconds) {
  validate_track(track);
  ScoreTrack out = track;
  out.scores = median_filter(track.scores, window_frames(window_seconds));
  return out;
}

ScoreTrack wiener_smooth(const ScoreTrack& track, double window_seconds) {
  validate_track(track);
  ScoreTrack out = track;
  out.scores = wiener_filter(track.scores, window_frames(window_seconds));
  return out;
}

ScoreTrack smooth_track(const ScoreTrack& track, SmoothingMethod method, double window_seconds) {
  switch (method) {
    case SmoothingMethod::kMedian:
      return median_smooth(track, window_seconds);
    case SmoothingMethod::kWiener:
      return wiener_smooth(track, window_seconds);
    case SmoothingMethod::kNone:
      break;
  }
  validate_track(track);
  return track;
}

}  // namespace asd
