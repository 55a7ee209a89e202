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

#ifndef ASD_SYNTHETIC_H_
#define ASD_SYNTHETIC_H_

#include <cstdint>
#include <vector>

#include "asd/dataset.h"

namespace asd {

// Talking-bar tracks: while an entity speaks, a centred bright bar opens and
// closes at 3-6 Hz and the audio loudness follows the bar height; otherwise
// the bar holds still (+-1 px jitter) over quiet independent noise.
struct SyntheticConfig {
  std::int64_t num_tracks = 40;
  std::int64_t frames_per_track = 250;
  std::int64_t resolution = 112;
  std::int64_t entities_per_video = 2;
  // Expected fraction of speaking frames.
  double positive_rate = 0.3;
  // Mean speaking run in frames (1.11 s at 25 fps).
  double mean_speaking_run = 28.0;
  // Shortest clip the data must support.
  std::int64_t clip_frames = 9;
};

std::vector<TrackBundle> generate_synthetic(const SyntheticConfig& config, std::uint64_t seed);

// Bar height (pixels) of the given frame, measured down the centre column.
std::int64_t measured_bar_height(const TrackBundle& bundle, std::int64_t frame);

}  // namespace asd

#endif  // ASD_SYNTHETIC_H_
