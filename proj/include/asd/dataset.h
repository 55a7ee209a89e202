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

#ifndef ASD_DATASET_H_
#define ASD_DATASET_H_

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "asd/annotations.h"
#include "asd/audio_features.h"

namespace asd {

inline constexpr int kBundleFps = 25;
inline constexpr int kBundleSampleRate = 16000;
inline constexpr const char* kManifestFile = "manifest.txt";
inline constexpr const char* kFramesFile = "frames.rgb";
inline constexpr const char* kAudioFile = "audio.s16le";

// One face track: RGB crops at 25 fps plus the matching 16 kHz audio.
// video_id, start_time and the label vectors are not stored in the bundle
// directory; they come from the annotation CSV (see attach_labels).
struct TrackBundle {
  std::string entity_id;
  std::string video_id;
  double start_time = 0.0;
  std::int64_t height = 0;
  std::int64_t width = 0;
  std::vector<std::uint8_t> pixels;  // num_frames x height x width x 3
  Waveform waveform;
  std::vector<SpeakingLabel> labels;
  std::vector<bool> annotated;

  std::int64_t frame_bytes() const { return height * width * 3; }
  std::int64_t num_frames() const {
    return frame_bytes() == 0 ? 0 : static_cast<std::int64_t>(pixels.size()) / frame_bytes();
  }
  std::span<const std::uint8_t> frame(std::int64_t i) const {
    return {pixels.data() + i * frame_bytes(), static_cast<std::size_t>(frame_bytes())};
  }
};

// Frame count >= 5, audio long enough, label vectors sized to the frames.
void validate_bundle(const TrackBundle& bundle);

// <dir>/manifest.txt, frames.rgb and audio.s16le.
void write_bundle(const std::string& dir, const TrackBundle& bundle);
TrackBundle read_bundle(const std::string& dir);

// Loads <root>/<entity_id> for every entity named in `records`, in first
// appearance order, and attaches labels.
std::vector<TrackBundle> load_bundles(const std::string& root,
                                      const std::vector<AnnotationRecord>& records);

// Frame index of an annotation row: round((t - start_time) * 25).
std::int64_t frame_index(const TrackBundle& bundle, double timestamp);

// Fills labels/annotated from the rows of this bundle's entity. start_time
// becomes the earliest row timestamp. Rows past the last frame are an
// AlignmentError.
void attach_labels(TrackBundle& bundle, const std::vector<AnnotationRecord>& records);

// Annotation rows for every frame of a labelled bundle (full-frame box).
std::vector<AnnotationRecord> bundle_annotations(const TrackBundle& bundle);

// A T-frame clip centred on one annotated frame. Frame indices are
// clamped to the track, so clips near the ends repeat the edge frame.
struct TrainingExample {
  std::size_t track = 0;
  std::int64_t center = 0;
  std::vector<std::int64_t> frame_indices;
  int label = 0;
};

std::vector<TrainingExample> make_examples(const TrackBundle& bundle, std::int64_t clip_frames,
                                           std::size_t track_index,
                                           const LabelMapping& mapping = {});

// Emits index batches with exactly batch_size / 2 positives and negatives.
// Each class is drawn from its own shuffled permutation, reshuffled when
// exhausted, so the minority class repeats and nothing repeats within a
// pass over its class.
class BalancedBatchSampler {
 public:
  BalancedBatchSampler(std::span<const int> labels, std::int64_t batch_size, std::uint64_t seed);

  std::vector<std::size_t> next();
  // Batches needed to visit every majority-class example once.
  std::int64_t batches_per_epoch() const;

 private:
  std::size_t draw(int cls);

  std::int64_t batch_size_;
  std::mt19937_64 rng_;
  std::vector<std::size_t> pools_[2];
  std::size_t cursor_[2] = {0, 0};
};

// Blocking FIFO with a capacity bound. pop() returns nullopt once the queue
// is closed and drained; each item is delivered to exactly one consumer.
template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(capacity == 0 ? 1 : capacity) {}

  // Returns false if the queue was closed.
  bool push(T item) {
    std::unique_lock lock(mu_);
    not_full_.wait(lock, [&] { return closed_ || items_.size() < capacity_; });
    if (closed_) return false;
    items_.push_back(std::move(item));
    not_empty_.notify_one();
    return true;
  }

  std::optional<T> pop() {
    std::unique_lock lock(mu_);
    not_empty_.wait(lock, [&] { return closed_ || !items_.empty(); });
    if (items_.empty()) return std::nullopt;
    T item = std::move(items_.front());
    items_.pop_front();
    not_full_.notify_one();
    return item;
  }

  void close() {
    std::lock_guard lock(mu_);
    closed_ = true;
    not_empty_.notify_all();
    not_full_.notify_all();
  }

 private:
  std::size_t capacity_;
  std::mutex mu_;
  std::condition_variable not_empty_, not_full_;
  std::deque<T> items_;
  bool closed_ = false;
};

}  // namespace asd

#endif  // ASD_DATASET_H_
