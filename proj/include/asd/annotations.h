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

#ifndef ASD_ANNOTATIONS_H_
#define ASD_ANNOTATIONS_H_

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace asd {

enum class SpeakingLabel { kNotSpeaking, kSpeakingAudible, kSpeakingNotAudible };

SpeakingLabel parse_label(std::string_view text);  // throws InputError
std::string_view label_name(SpeakingLabel label);

// Positive class is SPEAKING_AUDIBLE; SPEAKING_NOT_AUDIBLE can be moved to
// the positive side.
struct LabelMapping {
  bool not_audible_is_positive = false;
};

int binary_label(SpeakingLabel label, const LabelMapping& mapping = {});

// One row of an AVA-ActiveSpeaker style CSV. The box is normalized.
struct AnnotationRecord {
  std::string video_id;
  double frame_timestamp = 0.0;
  double x1 = 0.0, y1 = 0.0, x2 = 1.0, y2 = 1.0;
  SpeakingLabel label = SpeakingLabel::kNotSpeaking;
  std::string entity_id;

  bool operator==(const AnnotationRecord&) const = default;
};

struct PredictionRecord {
  AnnotationRecord row;
  double score = 0.0;

  bool operator==(const PredictionRecord&) const = default;
};

// Join key: timestamps compare at millisecond resolution.
struct FrameKey {
  std::string video_id;
  std::int64_t timestamp_ms = 0;
  std::string entity_id;

  bool operator==(const FrameKey&) const = default;
  std::string to_string() const;
};

struct FrameKeyHash {
  std::size_t operator()(const FrameKey& key) const;
};

FrameKey frame_key(const AnnotationRecord& record);

// Shortest decimal text that parses back to the same double.
std::string format_number(double value);

// Eight columns: video_id, frame_timestamp, x1, y1, x2, y2, label,
// entity_id. A first line with a non-numeric timestamp is taken as a header.
// Extra trailing columns are ignored; blank lines are skipped.
std::vector<AnnotationRecord> parse_annotations(std::string_view text);
std::string serialize_annotations(const std::vector<AnnotationRecord>& records);

// The eight annotation columns plus a score in [0, 1].
std::vector<PredictionRecord> parse_predictions(std::string_view text);
std::string serialize_predictions(const std::vector<PredictionRecord>& records);

std::string read_text_file(const std::string& path);  // IoError
void write_text_file(const std::string& path, std::string_view text);

}  // namespace asd

#endif  // ASD_ANNOTATIONS_H_
