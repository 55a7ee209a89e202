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

#include "asd/annotations.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "asd/error.h"

namespace asd {

namespace {

constexpr std::size_t kAnnotationColumns = 8;

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

bool to_double(std::string_view s, double& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

double number_field(std::string_view s, const char* name, std::size_t line) {
  double v = 0;
  if (!to_double(s, v)) {
    throw ParseError(line, std::string(name) + " '" + std::string(s) + "' is not a number");
  }
  return v;
}

AnnotationRecord parse_record(const std::vector<std::string_view>& f, std::size_t line) {
  AnnotationRecord r;
  r.video_id = std::string(trim(f[0]));
  r.frame_timestamp = number_field(f[1], "timestamp", line);
  r.x1 = number_field(f[2], "x1", line);
  r.y1 = number_field(f[3], "y1", line);
  r.x2 = number_field(f[4], "x2", line);
  r.y2 = number_field(f[5], "y2", line);
  try {
    r.label = parse_label(trim(f[6]));
  } catch (const InputError& e) {
    throw ParseError(line, e.what());
  }
  r.entity_id = std::string(trim(f[7]));
  if (r.video_id.empty() || r.entity_id.empty()) {
    throw ParseError(line, "video_id and entity_id must be non-empty");
  }
  if (r.frame_timestamp < 0) throw ParseError(line, "negative timestamp");
  if (!(r.x1 < r.x2) || !(r.y1 < r.y2)) throw ParseError(line, "box needs x1 < x2 and y1 < y2");
  for (double c : {r.x1, r.y1, r.x2, r.y2}) {
    if (c < 0 || c > 1) throw ParseError(line, "box coordinate outside [0, 1]");
  }
  return r;
}

// Calls fn(fields, line number) for each data row.
template <typename Fn>
void for_each_row(std::string_view text, std::size_t min_columns, Fn fn) {
  std::size_t line_no = 0;
  bool first = true;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = trim(text.substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (first) {
      first = false;
      double ts = 0;
      if (fields.size() >= 2 && !to_double(fields[1], ts)) continue;  // header
    }
    if (fields.size() < min_columns) {
      throw ParseError(line_no, "expected " + std::to_string(min_columns) + " columns, found " +
                                    std::to_string(fields.size()));
    }
    fn(fields, line_no);
  }
}

void append_row(std::string& out, const AnnotationRecord& r) {
  out += r.video_id;
  for (double v : {r.frame_timestamp, r.x1, r.y1, r.x2, r.y2}) {
    out += ',';
    out += format_number(v);
  }
  out += ',';
  out += label_name(r.label);
  out += ',';
  out += r.entity_id;
}

}  // namespace

SpeakingLabel parse_label(std::string_view text) {
  if (text == "NOT_SPEAKING") return SpeakingLabel::kNotSpeaking;
  if (text == "SPEAKING_AUDIBLE") return SpeakingLabel::kSpeakingAudible;
  if (text == "SPEAKING_NOT_AUDIBLE") return SpeakingLabel::kSpeakingNotAudible;
  throw InputError("unknown label '" + std::string(text) + "'");
}

std::string_view label_name(SpeakingLabel label) {
  switch (label) {
    case SpeakingLabel::kNotSpeaking:
      return "NOT_SPEAKING";
    case SpeakingLabel::kSpeakingAudible:
      return "SPEAKING_AUDIBLE";
    case SpeakingLabel::kSpeakingNotAudible:
      return "SPEAKING_NOT_AUDIBLE";
  }
  return "NOT_SPEAKING";
}

int binary_label(SpeakingLabel label, const LabelMapping& mapping) {
  if (label == SpeakingLabel::kSpeakingAudible) return 1;
  if (label == SpeakingLabel::kSpeakingNotAudible && mapping.not_audible_is_positive) return 1;
  return 0;
}

std::string FrameKey::to_string() const {
  return video_id + "," + format_number(timestamp_ms / 1000.0) + "," + entity_id;
}

std::size_t FrameKeyHash::operator()(const FrameKey& key) const {
  std::size_t h = std::hash<std::string>()(key.video_id);
  h = h * 1000003u ^ std::hash<std::int64_t>()(key.timestamp_ms);
  return h * 1000003u ^ std::hash<std::string>()(key.entity_id);
}

FrameKey frame_key(const AnnotationRecord& record) {
  return {record.video_id, std::llround(record.frame_timestamp * 1000.0), record.entity_id};
}

std::string format_number(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw InputError("cannot format number");
  return std::string(buf, ptr);
}

std::vector<AnnotationRecord> parse_annotations(std::string_view text) {
  std::vector<AnnotationRecord> records;
  for_each_row(text, kAnnotationColumns, [&](const auto& fields, std::size_t line) {
    records.push_back(parse_record(fields, line));
  });
  return records;
}

std::string serialize_annotations(const std::vector<AnnotationRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    append_row(out, r);
    out += '\n';
  }
  return out;
}

std::vector<PredictionRecord> parse_predictions(std::string_view text) {
  std::vector<PredictionRecord> records;
  for_each_row(text, kAnnotationColumns + 1, [&](const auto& fields, std::size_t line) {
    PredictionRecord p;
    p.row = parse_record(fields, line);
    p.score = number_field(fields[kAnnotationColumns], "score", line);
    if (p.score < 0 || p.score > 1) throw ParseError(line, "score outside [0, 1]");
    records.push_back(std::move(p));
  });
  return records;
}

std::string serialize_predictions(const std::vector<PredictionRecord>& records) {
  std::string out;
  for (const auto& p : records) {
    append_row(out, p.row);
    out += ',';
    out += format_number(p.score);
    out += '\n';
  }
  return out;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace asd
