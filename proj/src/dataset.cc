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

#include "asd/dataset.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "asd/error.h"

namespace asd {

namespace fs = std::filesystem;

namespace {

void check_entity_name(const std::string& id) {
  if (id.empty() || id == "." || id == ".." || id.find('/') != std::string::npos ||
      id.find('\\') != std::string::npos) {
    throw InputError("entity id '" + id + "' cannot name a bundle directory");
  }
}

std::vector<char> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return std::vector<char>(std::istreambuf_iterator<char>(in), {});
}

void write_bytes(const fs::path& path, const char* data, std::size_t size) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(data, static_cast<std::streamsize>(size));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::int64_t manifest_int(const std::map<std::string, std::string>& m, const std::string& key,
                          const std::string& where) {
  auto it = m.find(key);
  if (it == m.end()) throw InputError(where + ": manifest lacks '" + key + "'");
  try {
    std::size_t used = 0;
    const long long v = std::stoll(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(key);
    return v;
  } catch (const std::exception&) {
    throw InputError(where + ": manifest value for '" + key + "' is not an integer");
  }
}

}  // namespace

void validate_bundle(const TrackBundle& bundle) {
  const std::string& id = bundle.entity_id;
  if (bundle.height <= 0 || bundle.width <= 0) {
    throw InputError("bundle '" + id + "' has non-positive frame size");
  }
  if (static_cast<std::int64_t>(bundle.pixels.size()) % bundle.frame_bytes() != 0) {
    throw InputError("bundle '" + id + "' pixel data is not a whole number of frames");
  }
  const std::int64_t frames = bundle.num_frames();
  if (frames < 5) {
    throw InputError("bundle '" + id + "' has " + std::to_string(frames) +
                     " frames; at least 5 are needed");
  }
  if (bundle.waveform.sample_rate != kBundleSampleRate) {
    throw InputError("bundle '" + id + "' audio is not 16 kHz");
  }
  if (bundle.waveform.duration() < frames / static_cast<double>(kBundleFps) - 0.02) {
    throw InputError("bundle '" + id + "' audio is shorter than its frames");
  }
  if (bundle.labels.size() != static_cast<std::size_t>(frames) ||
      bundle.annotated.size() != static_cast<std::size_t>(frames)) {
    throw InputError("bundle '" + id + "' label count differs from frame count");
  }
}

void write_bundle(const std::string& dir, const TrackBundle& bundle) {
  check_entity_name(bundle.entity_id);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir + "': " + ec.message());
  std::ostringstream manifest;
  manifest << "entity_id=" << bundle.entity_id << "\n"
           << "fps=" << kBundleFps << "\n"
           << "height=" << bundle.height << "\n"
           << "width=" << bundle.width << "\n"
           << "num_frames=" << bundle.num_frames() << "\n"
           << "sample_rate=" << kBundleSampleRate << "\n";
  const std::string text = manifest.str();
  write_bytes(fs::path(dir) / kManifestFile, text.data(), text.size());
  write_bytes(fs::path(dir) / kFramesFile, reinterpret_cast<const char*>(bundle.pixels.data()),
              bundle.pixels.size());
  std::string audio;
  audio.reserve(bundle.waveform.samples.size() * 2);
  for (float s : bundle.waveform.samples) {
    const auto q = static_cast<std::int16_t>(
        std::clamp(std::lround(static_cast<double>(s) * 32767.0), -32768L, 32767L));
    const auto u = static_cast<std::uint16_t>(q);
    audio.push_back(static_cast<char>(u & 0xff));
    audio.push_back(static_cast<char>(u >> 8));
  }
  write_bytes(fs::path(dir) / kAudioFile, audio.data(), audio.size());
}

TrackBundle read_bundle(const std::string& dir) {
  std::map<std::string, std::string> m;
  {
    const auto bytes = read_bytes(fs::path(dir) / kManifestFile);
    std::istringstream in(std::string(bytes.begin(), bytes.end()));
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw InputError(dir + ": manifest line without '='");
      m[line.substr(0, eq)] = line.substr(eq + 1);
    }
  }
  TrackBundle b;
  if (!m.count("entity_id")) throw InputError(dir + ": manifest lacks 'entity_id'");
  b.entity_id = m["entity_id"];
  if (manifest_int(m, "fps", dir) != kBundleFps) throw InputError(dir + ": fps must be 25");
  if (manifest_int(m, "sample_rate", dir) != kBundleSampleRate) {
    throw InputError(dir + ": sample_rate must be 16000");
  }
  b.height = manifest_int(m, "height", dir);
  b.width = manifest_int(m, "width", dir);
  const std::int64_t frames = manifest_int(m, "num_frames", dir);
  if (b.height <= 0 || b.width <= 0 || frames <= 0) {
    throw InputError(dir + ": manifest sizes must be positive");
  }
  const auto pixels = read_bytes(fs::path(dir) / kFramesFile);
  if (static_cast<std::int64_t>(pixels.size()) != frames * b.frame_bytes()) {
    throw InputError(dir + ": frames file holds " + std::to_string(pixels.size()) +
                     " bytes, manifest implies " + std::to_string(frames * b.frame_bytes()));
  }
  b.pixels.assign(pixels.begin(), pixels.end());
  const auto audio = read_bytes(fs::path(dir) / kAudioFile);
  if (audio.size() % 2 != 0) throw InputError(dir + ": audio file has an odd byte count");
  b.waveform.sample_rate = kBundleSampleRate;
  b.waveform.samples.resize(audio.size() / 2);
  for (std::size_t i = 0; i < b.waveform.samples.size(); ++i) {
    const auto u = static_cast<std::uint16_t>(static_cast<std::uint8_t>(audio[2 * i]) |
                                              static_cast<std::uint8_t>(audio[2 * i + 1]) << 8);
    b.waveform.samples[i] = static_cast<float>(static_cast<std::int16_t>(u) / 32767.0);
  }
  b.labels.assign(frames, SpeakingLabel::kNotSpeaking);
  b.annotated.assign(frames, false);
  return b;
}

std::vector<TrackBundle> load_bundles(const std::string& root,
                                      const std::vector<AnnotationRecord>& records) {
  std::vector<std::string> order;
  std::unordered_map<std::string, std::string> video_of;
  for (const auto& r : records) {
    auto [it, inserted] = video_of.emplace(r.entity_id, r.video_id);
    if (inserted) {
      order.push_back(r.entity_id);
    } else if (it->second != r.video_id) {
      throw InputError("entity '" + r.entity_id + "' appears in videos '" + it->second +
                       "' and '" + r.video_id + "'");
    }
  }
  std::vector<TrackBundle> bundles;
  bundles.reserve(order.size());
  for (const auto& id : order) {
    check_entity_name(id);
    TrackBundle b = read_bundle((fs::path(root) / id).string());
    if (b.entity_id != id) {
      throw InputError("bundle directory '" + id + "' holds entity '" + b.entity_id + "'");
    }
    attach_labels(b, records);
    validate_bundle(b);
    bundles.push_back(std::move(b));
  }
  return bundles;
}

std::int64_t frame_index(const TrackBundle& bundle, double timestamp) {
  return std::llround((timestamp - bundle.start_time) * kBundleFps);
}

void attach_labels(TrackBundle& bundle, const std::vector<AnnotationRecord>& records) {
  const std::int64_t frames = bundle.num_frames();
  bundle.labels.assign(frames, SpeakingLabel::kNotSpeaking);
  bundle.annotated.assign(frames, false);
  bool any = false;
  for (const auto& r : records) {
    if (r.entity_id != bundle.entity_id) continue;
    if (!any || r.frame_timestamp < bundle.start_time) bundle.start_time = r.frame_timestamp;
    bundle.video_id = r.video_id;
    any = true;
  }
  if (!any) throw InputError("no annotation rows for entity '" + bundle.entity_id + "'");
  for (const auto& r : records) {
    if (r.entity_id != bundle.entity_id) continue;
    const std::int64_t i = frame_index(bundle, r.frame_timestamp);
    if (i >= frames) {
      throw AlignmentError("entity '" + bundle.entity_id + "' row at " +
                           format_number(r.frame_timestamp) + " s maps to frame " +
                           std::to_string(i) + " of " + std::to_string(frames));
    }
    if (bundle.annotated[i]) {
      throw InputError("entity '" + bundle.entity_id + "' has two rows for frame " +
                       std::to_string(i));
    }
    bundle.labels[i] = r.label;
    bundle.annotated[i] = true;
  }
}

std::vector<AnnotationRecord> bundle_annotations(const TrackBundle& bundle) {
  std::vector<AnnotationRecord> rows;
  for (std::int64_t i = 0; i < bundle.num_frames(); ++i) {
    if (i < static_cast<std::int64_t>(bundle.annotated.size()) && !bundle.annotated[i]) continue;
    AnnotationRecord r;
    r.video_id = bundle.video_id;
    r.frame_timestamp = std::round((bundle.start_time + i / static_cast<double>(kBundleFps)) *
                                   1000.0) / 1000.0;
    r.label = bundle.labels.at(i);
    r.entity_id = bundle.entity_id;
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<TrainingExample> make_examples(const TrackBundle& bundle, std::int64_t clip_frames,
                                           std::size_t track_index, const LabelMapping& mapping) {
  if (clip_frames < 5 || clip_frames % 2 == 0) {
    throw ConfigError("clip length T must be odd and at least 5, got " +
                      std::to_string(clip_frames));
  }
  const std::int64_t n = bundle.num_frames(), h = (clip_frames - 1) / 2;
  std::vector<TrainingExample> out;
  for (std::int64_t i = 0; i < n; ++i) {
    if (!bundle.annotated.empty() && !bundle.annotated[i]) continue;
    TrainingExample e;
    e.track = track_index;
    e.center = i;
    for (std::int64_t k = i - h; k <= i + h; ++k) {
      e.frame_indices.push_back(std::clamp<std::int64_t>(k, 0, n - 1));
    }
    e.label = binary_label(bundle.labels.at(i), mapping);
    out.push_back(std::move(e));
  }
  return out;
}

BalancedBatchSampler::BalancedBatchSampler(std::span<const int> labels, std::int64_t batch_size,
                                           std::uint64_t seed)
    : batch_size_(batch_size), rng_(seed) {
  if (batch_size <= 0 || batch_size % 2 != 0) {
    throw ConfigError("balanced batches need a positive even batch size, got " +
                      std::to_string(batch_size));
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw InputError("labels must be 0 or 1");
    pools_[labels[i]].push_back(i);
  }
  if (pools_[0].empty() || pools_[1].empty()) {
    throw ConfigError("balanced batches need both classes; found " +
                      std::to_string(pools_[1].size()) + " positives and " +
                      std::to_string(pools_[0].size()) + " negatives");
  }
  for (auto& pool : pools_) std::shuffle(pool.begin(), pool.end(), rng_);
}

std::size_t BalancedBatchSampler::draw(int cls) {
  auto& pool = pools_[cls];
  if (cursor_[cls] == pool.size()) {
    std::shuffle(pool.begin(), pool.end(), rng_);
    cursor_[cls] = 0;
  }
  return pool[cursor_[cls]++];
}

std::vector<std::size_t> BalancedBatchSampler::next() {
  std::vector<std::size_t> batch;
  batch.reserve(batch_size_);
  for (std::int64_t i = 0; i < batch_size_ / 2; ++i) {
    batch.push_back(draw(1));
    batch.push_back(draw(0));
  }
  return batch;
}

std::int64_t BalancedBatchSampler::batches_per_epoch() const {
  const std::int64_t half = batch_size_ / 2;
  const auto most = static_cast<std::int64_t>(std::max(pools_[0].size(), pools_[1].size()));
  return (most + half - 1) / half;
}

}  // namespace asd
