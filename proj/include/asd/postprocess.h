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

#ifndef ASD_POSTPROCESS_H_
#define ASD_POSTPROCESS_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace asd {

inline constexpr double kVideoFrameRate = 25.0;
inline constexpr double kDefaultSmoothingSeconds = 0.5;

// Per-entity speaking scores on the 25 fps frame grid.
struct ScoreTrack {
  std::string entity_id;
  std::vector<double> frame_timestamps;
  std::vector<double> scores;

  std::size_t size() const { return scores.size(); }
};

enum class SmoothingMethod { kNone, kMedian, kWiener };

SmoothingMethod parse_smoothing_method(std::string_view name);
std::string smoothing_method_name(SmoothingMethod method);

// Throws InputError when the track is empty, lengths differ, a score leaves
// [0, 1], or timestamps do not strictly increase. Spacing is not checked:
// real annotation timestamps jitter around 0.04 s.
void validate_track(const ScoreTrack& track);

// Smallest odd frame count >= window_seconds * fps (0.5 s -> 13).
std::int64_t window_frames(double window_seconds, double fps = kVideoFrameRate);

// Sliding filters over w = window_frames(...) samples with the first and
// last values replicated past the ends.
std::vector<double> median_filter(const std::vector<double>& x, std::int64_t w);
std::vector<double> wiener_filter(const std::vector<double>& x, std::int64_t w);

ScoreTrack median_smooth(const ScoreTrack& track,
                         double window_seconds = kDefaultSmoothingSeconds);
ScoreTrack wiener_smooth(const ScoreTrack& track,
                         double window_seconds = kDefaultSmoothingSeconds);
ScoreTrack smooth_track(const ScoreTrack& track, SmoothingMethod method,
                        double window_seconds = kDefaultSmoothingSeconds);

}  // namespace asd

#endif  // ASD_POSTPROCESS_H_
