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

#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <thread>

#include "asd/annotations.h"
#include "asd/dataset.h"
#include "asd/error.h"
#include "asd/synthetic.h"

namespace asd {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("asd_data_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

TEST(AnnotationTest, ParsesOneRow) {
  const auto rows = parse_annotations("v1,902.10,0.2,0.2,0.5,0.8,SPEAKING_AUDIBLE,v1_e3\n");
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].video_id, "v1");
  EXPECT_DOUBLE_EQ(rows[0].frame_timestamp, 902.10);
  EXPECT_DOUBLE_EQ(rows[0].x1, 0.2);
  EXPECT_DOUBLE_EQ(rows[0].y2, 0.8);
  EXPECT_EQ(rows[0].entity_id, "v1_e3");
  EXPECT_EQ(binary_label(rows[0].label), 1);
}

TEST(AnnotationTest, LabelMapping) {
  EXPECT_EQ(binary_label(SpeakingLabel::kNotSpeaking), 0);
  EXPECT_EQ(binary_label(SpeakingLabel::kSpeakingNotAudible), 0);
  EXPECT_EQ(binary_label(SpeakingLabel::kSpeakingNotAudible, {.not_audible_is_positive = true}),
            1);
  const auto rows = parse_annotations("v,1,0,0,1,1,NOT_SPEAKING,e\n");
  EXPECT_EQ(binary_label(rows.at(0).label), 0);
}

TEST(AnnotationTest, HeaderBlankLinesAndExtraColumns) {
  const std::string text =
      "video_id,frame_timestamp,x1,y1,x2,y2,label,entity_id\r\n"
      "\n"
      "a,0.04,0,0,1,1,SPEAKING_NOT_AUDIBLE,a_0,extra,1\r\n"
      "a,0.08,0.1,0.1,0.9,0.9,NOT_SPEAKING,a_0\n";
  const auto rows = parse_annotations(text);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].label, SpeakingLabel::kSpeakingNotAudible);
  EXPECT_EQ(rows[1].entity_id, "a_0");
}

TEST(AnnotationTest, EmptyInputIsEmpty) {
  EXPECT_TRUE(parse_annotations("").empty());
  EXPECT_TRUE(parse_annotations("\n\n").empty());
}

void expect_parse_error_at(const std::string& text, std::size_t line) {
  try {
    parse_annotations(text);
    ADD_FAILURE() << "no error for " << text;
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), line) << e.what();
    EXPECT_NE(std::string(e.what()).find("line " + std::to_string(line)), std::string::npos);
  }
}

TEST(AnnotationTest, MalformedRowsNameTheirLine) {
  const std::string ok = "v,1,0,0,1,1,NOT_SPEAKING,e\n";
  expect_parse_error_at(ok + "v,2,0.5,0,0.5,1,NOT_SPEAKING,e\n", 2);  // x1 == x2
  expect_parse_error_at(ok + ok + "v,2,0.6,0,0.5,1,NOT_SPEAKING,e\n", 3);
  expect_parse_error_at(ok + "v,2,zero,0,1,1,NOT_SPEAKING,e\n", 2);
  expect_parse_error_at(ok + "v,2,0,0,1,1,WHISPERING,e\n", 2);
  expect_parse_error_at(ok + "v,2,0,0,1,1,NOT_SPEAKING\n", 2);
  expect_parse_error_at(ok + "v,-2,0,0,1,1,NOT_SPEAKING,e\n", 2);
  expect_parse_error_at(ok + "v,2,0,0,1,1.5,NOT_SPEAKING,e\n", 2);
}

std::vector<AnnotationRecord> random_records(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(0, 1);
  std::uniform_int_distribution<int> lab(0, 2);
  std::vector<AnnotationRecord> out;
  for (int i = 0; i < n; ++i) {
    AnnotationRecord r;
    r.video_id = "vid" + std::to_string(i % 7);
    r.frame_timestamp = std::round(u(rng) * 180000) / 100.0;
    r.x1 = u(rng) * 0.5;
    r.y1 = u(rng) * 0.5;
    r.x2 = r.x1 + 0.01 + u(rng) * 0.49;
    r.y2 = r.y1 + 0.01 + u(rng) * 0.49;
    r.label = static_cast<SpeakingLabel>(lab(rng));
    r.entity_id = r.video_id + ":" + std::to_string(i % 3);
    out.push_back(r);
  }
  return out;
}

TEST(AnnotationTest, SerializeParseRoundTrip) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto records = random_records(rng, 1 + trial * 3);
    EXPECT_EQ(parse_annotations(serialize_annotations(records)), records);
  }
}

TEST(AnnotationTest, PredictionRoundTripAndScoreChecks) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<PredictionRecord> preds;
  for (const auto& r : random_records(rng, 40)) preds.push_back({r, u(rng)});
  EXPECT_EQ(parse_predictions(serialize_predictions(preds)), preds);
  EXPECT_THROW(parse_predictions("v,1,0,0,1,1,NOT_SPEAKING,e\n"), ParseError);
  EXPECT_THROW(parse_predictions("v,1,0,0,1,1,NOT_SPEAKING,e,1.2\n"), ParseError);
  EXPECT_EQ(parse_predictions("v,1,0,0,1,1,NOT_SPEAKING,e,1,x\n").at(0).score, 1.0);
}

TEST(AnnotationTest, KeysUseMilliseconds) {
  AnnotationRecord a;
  a.video_id = "v";
  a.entity_id = "e";
  a.frame_timestamp = 902.1;
  AnnotationRecord b = a;
  b.frame_timestamp = 902.1000000001;
  EXPECT_EQ(frame_key(a), frame_key(b));
  EXPECT_EQ(frame_key(a).timestamp_ms, 902100);
  EXPECT_EQ(FrameKeyHash()(frame_key(a)), FrameKeyHash()(frame_key(b)));
  EXPECT_EQ(format_number(902.1), "902.1");
}

SyntheticConfig small_synth() {
  SyntheticConfig cfg;
  cfg.num_tracks = 4;
  cfg.frames_per_track = 100;
  cfg.resolution = 32;
  return cfg;
}

TEST(SyntheticTest, SameSeedGivesIdenticalBundles) {
  const auto a = generate_synthetic(small_synth(), 7);
  const auto b = generate_synthetic(small_synth(), 7);
  ASSERT_EQ(a.size(), 4u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].pixels, b[i].pixels);
    EXPECT_EQ(a[i].waveform.samples, b[i].waveform.samples);
    EXPECT_EQ(a[i].labels, b[i].labels);
    EXPECT_EQ(a[i].entity_id, b[i].entity_id);
    validate_bundle(a[i]);
  }
  EXPECT_NE(generate_synthetic(small_synth(), 8)[0].pixels, a[0].pixels);
  EXPECT_EQ(a[0].video_id, a[1].video_id);
  EXPECT_NE(a[0].entity_id, a[1].entity_id);
}

TEST(SyntheticTest, TooFewFramesIsConfigError) {
  SyntheticConfig cfg = small_synth();
  cfg.frames_per_track = 8;
  EXPECT_THROW(generate_synthetic(cfg, 1), ConfigError);
}

struct RunStats {
  std::int64_t frames = 0, positives = 0;
  std::vector<std::int64_t> speaking_runs;
};

RunStats run_stats(const std::vector<TrackBundle>& tracks) {
  RunStats s;
  for (const auto& t : tracks) {
    std::int64_t run = 0;
    for (std::size_t i = 0; i < t.labels.size(); ++i) {
      const bool pos = t.labels[i] == SpeakingLabel::kSpeakingAudible;
      ++s.frames;
      s.positives += pos;
      if (pos) ++run;
      // Runs cut by the track end are biased short; count only closed runs.
      if (!pos && run > 0) {
        s.speaking_runs.push_back(run);
        run = 0;
      }
    }
  }
  return s;
}

TEST(SyntheticTest, LabelStatisticsMatchConfiguration) {
  SyntheticConfig cfg;
  cfg.num_tracks = 60;
  cfg.frames_per_track = 1000;
  cfg.resolution = 8;
  for (double rate : {0.3, 0.5}) {
    cfg.positive_rate = rate;
    const RunStats s = run_stats(generate_synthetic(cfg, 11));
    ASSERT_GE(s.frames, 10000);
    const double frac = static_cast<double>(s.positives) / s.frames;
    EXPECT_NEAR(frac, rate, 0.1 * rate);
    double mean = 0;
    for (auto r : s.speaking_runs) mean += r;
    mean /= s.speaking_runs.size();
    EXPECT_NEAR(mean, 28.0, 0.2 * 28.0);
  }
}

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = a.size();
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

TEST(SyntheticTest, BarHeightTracksLoudnessOnlyWhileSpeaking) {
  SyntheticConfig cfg;
  cfg.num_tracks = 20;
  cfg.frames_per_track = 500;
  cfg.resolution = 64;
  const auto tracks = generate_synthetic(cfg, 5);
  constexpr std::int64_t kMinSegment = 20;
  double sum[2] = {0, 0};
  int count[2] = {0, 0};
  for (const auto& t : tracks) {
    std::int64_t start = 0;
    for (std::int64_t i = 1; i <= t.num_frames(); ++i) {
      if (i < t.num_frames() && t.labels[i] == t.labels[start]) continue;
      if (i - start >= kMinSegment) {
        std::vector<double> height, envelope;
        for (std::int64_t f = start; f < i; ++f) {
          height.push_back(static_cast<double>(measured_bar_height(t, f)));
          double e = 0;
          for (std::int64_t s = 0; s < 640; ++s) e += std::abs(t.waveform.samples[f * 640 + s]);
          envelope.push_back(e / 640);
        }
        const int cls = t.labels[start] == SpeakingLabel::kSpeakingAudible;
        sum[cls] += std::abs(correlation(height, envelope));
        ++count[cls];
      }
      start = i;
    }
  }
  ASSERT_GT(count[0], 10);
  ASSERT_GT(count[1], 10);
  EXPECT_GT(sum[1] / count[1], 0.8);
  EXPECT_LT(sum[0] / count[0], 0.2);
}

TEST(BundleTest, DiskRoundTripIsExact) {
  const fs::path dir = scratch_dir("roundtrip");
  const auto tracks = generate_synthetic(small_synth(), 3);
  write_bundle((dir / tracks[0].entity_id).string(), tracks[0]);
  TrackBundle back = read_bundle((dir / tracks[0].entity_id).string());
  EXPECT_EQ(back.entity_id, tracks[0].entity_id);
  EXPECT_EQ(back.height, 32);
  EXPECT_EQ(back.num_frames(), 100);
  EXPECT_EQ(back.pixels, tracks[0].pixels);
  EXPECT_EQ(back.waveform.samples, tracks[0].waveform.samples);
  EXPECT_EQ(read_text_file((dir / tracks[0].entity_id / kManifestFile).string()),
            "entity_id=" + tracks[0].entity_id +
                "\nfps=25\nheight=32\nwidth=32\nnum_frames=100\nsample_rate=16000\n");
  EXPECT_EQ(fs::file_size(dir / tracks[0].entity_id / kAudioFile), 100u * 640 * 2);
}

TEST(BundleTest, LoadAttachesLabelsFromCsv) {
  const fs::path dir = scratch_dir("load");
  const auto tracks = generate_synthetic(small_synth(), 3);
  std::vector<AnnotationRecord> rows;
  for (const auto& t : tracks) {
    write_bundle((dir / t.entity_id).string(), t);
    const auto r = bundle_annotations(t);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  const auto parsed = parse_annotations(serialize_annotations(rows));
  const auto loaded = load_bundles(dir.string(), parsed);
  ASSERT_EQ(loaded.size(), tracks.size());
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    EXPECT_EQ(loaded[i].labels, tracks[i].labels);
    EXPECT_EQ(loaded[i].video_id, tracks[i].video_id);
    EXPECT_DOUBLE_EQ(loaded[i].start_time, 900.0);
    EXPECT_EQ(bundle_annotations(loaded[i]), bundle_annotations(tracks[i]));
  }
}

TEST(BundleTest, BadInputsAreReported) {
  const fs::path dir = scratch_dir("bad");
  auto t = generate_synthetic(small_synth(), 3)[0];
  write_bundle((dir / "x").string(), t);
  fs::resize_file(dir / "x" / kFramesFile, 100);
  EXPECT_THROW(read_bundle((dir / "x").string()), InputError);
  EXPECT_THROW(read_bundle((dir / "missing").string()), IoError);
  t.entity_id = "../escape";
  EXPECT_THROW(write_bundle((dir / "y").string(), t), InputError);

  auto u = generate_synthetic(small_synth(), 3)[0];
  auto rows = bundle_annotations(u);
  rows.back().frame_timestamp += 1.0;  // past the last frame
  EXPECT_THROW(attach_labels(u, rows), AlignmentError);
  rows.back().frame_timestamp = rows.front().frame_timestamp;
  EXPECT_THROW(attach_labels(u, rows), InputError);
}

TEST(ExampleTest, OneClipPerFrameWithEdgeReplication) {
  const auto t = generate_synthetic(small_synth(), 2)[0];
  const auto ex = make_examples(t, 9, 5);
  ASSERT_EQ(ex.size(), 100u);
  EXPECT_EQ(ex[0].frame_indices, (std::vector<std::int64_t>{0, 0, 0, 0, 0, 1, 2, 3, 4}));
  EXPECT_EQ(ex[99].frame_indices, (std::vector<std::int64_t>{95, 96, 97, 98, 99, 99, 99, 99, 99}));
  for (std::size_t i = 0; i < ex.size(); ++i) {
    EXPECT_EQ(ex[i].track, 5u);
    EXPECT_EQ(ex[i].center, static_cast<std::int64_t>(i));
    EXPECT_EQ(ex[i].frame_indices.size(), 9u);
    EXPECT_EQ(ex[i].label, binary_label(t.labels[i]));
  }
  EXPECT_THROW(make_examples(t, 8, 0), ConfigError);
  EXPECT_THROW(make_examples(t, 3, 0), ConfigError);
}

TEST(ExampleTest, UnannotatedFramesAreSkipped) {
  auto t = generate_synthetic(small_synth(), 2)[0];
  t.annotated[10] = false;
  EXPECT_EQ(make_examples(t, 5, 0).size(), 99u);
}

std::vector<int> labels_with(int pos, int neg) {
  std::vector<int> l(pos, 1);
  l.insert(l.end(), neg, 0);
  std::shuffle(l.begin(), l.end(), std::mt19937(pos * 131 + neg));
  return l;
}

TEST(SamplerTest, EveryBatchIsHalfAndHalf) {
  const auto labels = labels_with(10, 90);
  BalancedBatchSampler sampler(labels, 8, 1);
  for (int b = 0; b < 200; ++b) {
    const auto batch = sampler.next();
    ASSERT_EQ(batch.size(), 8u);
    int pos = 0;
    for (auto i : batch) pos += labels[i];
    EXPECT_EQ(pos, 4);
  }
}

TEST(SamplerTest, NoRepeatsWithinAClassPass) {
  const auto labels = labels_with(50, 50);
  BalancedBatchSampler sampler(labels, 10, 2);
  std::set<std::size_t> seen;
  for (int b = 0; b < sampler.batches_per_epoch(); ++b) {
    for (auto i : sampler.next()) EXPECT_TRUE(seen.insert(i).second) << i;
  }
  EXPECT_EQ(seen.size(), 100u);
}

TEST(SamplerTest, SeedDeterminesSequence) {
  const auto labels = labels_with(13, 40);
  BalancedBatchSampler a(labels, 6, 9), b(labels, 6, 9), c(labels, 6, 10);
  bool differs = false;
  for (int i = 0; i < 30; ++i) {
    const auto x = a.next();
    EXPECT_EQ(x, b.next());
    differs = differs || x != c.next();
  }
  EXPECT_TRUE(differs);
}

TEST(SamplerTest, InvalidSetupsAreConfigErrors) {
  const auto labels = labels_with(3, 3);
  EXPECT_THROW(BalancedBatchSampler(labels, 5, 0), ConfigError);
  EXPECT_THROW(BalancedBatchSampler(labels, 0, 0), ConfigError);
  const std::vector<int> one_class(5, 1);
  EXPECT_THROW(BalancedBatchSampler(one_class, 4, 0), ConfigError);
}

TEST(QueueTest, EachItemReachesExactlyOneConsumer) {
  BoundedQueue<int> queue(4);
  std::vector<std::atomic<int>> hits(1000);
  std::vector<std::thread> consumers;
  for (int c = 0; c < 3; ++c) {
    consumers.emplace_back([&] {
      while (auto item = queue.pop()) hits[*item].fetch_add(1);
    });
  }
  for (int i = 0; i < 1000; ++i) ASSERT_TRUE(queue.push(i));
  queue.close();
  for (auto& t : consumers) t.join();
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(hits[i].load(), 1) << i;
  EXPECT_FALSE(queue.push(1));
  EXPECT_FALSE(queue.pop().has_value());
}

}  // namespace
}  // namespace asd
