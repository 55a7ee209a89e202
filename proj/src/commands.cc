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

#include "asd/commands.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>

#include "asd/checkpoint.h"
#include "asd/error.h"
#include "asd/eval.h"
#include "asd/synthetic.h"

namespace asd {

namespace fs = std::filesystem;

namespace {

void require(const std::string& value, const char* key) {
  if (value.empty()) throw ConfigError(std::string("'") + key + "' must be set");
}

std::vector<Track> load_tracks(const RunConfig& config, const std::vector<AnnotationRecord>& rows) {
  return prepare_tracks(load_bundles(config.bundles_path(), rows));
}

ModelConfig model_config(const RunConfig& config) {
  return ModelConfig::make(config.preset, config.backend);
}

struct ClassCounts {
  std::int64_t tracks = 0, frames = 0, audible = 0, not_audible = 0, silent = 0;
};

ClassCounts count_classes(const std::vector<TrackBundle>& tracks) {
  ClassCounts c;
  c.tracks = static_cast<std::int64_t>(tracks.size());
  for (const auto& t : tracks) {
    for (auto l : t.labels) {
      ++c.frames;
      if (l == SpeakingLabel::kSpeakingAudible) ++c.audible;
      else if (l == SpeakingLabel::kSpeakingNotAudible) ++c.not_audible;
      else ++c.silent;
    }
  }
  return c;
}

// Replaces the encoder tensors of `params` with those in `path`.
void load_encoders(const ModelConfig& model, const std::string& path, ParamSet<float>& params) {
  ParamSet<float> encoders;
  init_encoders(model.encoder, encoders, 0);
  assign_params(load_checkpoint<float>(path), encoders);
  for (const auto& e : encoders) {
    Tensor<float>& dst = params.at(e.name);
    std::copy(e.tensor.data().begin(), e.tensor.data().end(), dst.data().begin());
  }
}

// Reads a binary PPM (P6, maxval 255).
std::vector<std::uint8_t> read_ppm(const fs::path& path, std::int64_t& height,
                                   std::int64_t& width) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  auto token = [&]() {
    std::string t;
    char ch;
    while (in.get(ch)) {
      if (ch == '#') {
        std::string skip;
        std::getline(in, skip);
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(ch))) {
        if (!t.empty()) break;
        continue;
      }
      t.push_back(ch);
    }
    return t;
  };
  if (token() != "P6") throw InputError(path.string() + " is not a binary PPM (P6)");
  try {
    width = std::stoll(token());
    height = std::stoll(token());
    if (std::stoll(token()) != 255) throw InputError(path.string() + ": maxval must be 255");
  } catch (const std::invalid_argument&) {
    throw InputError(path.string() + ": malformed PPM header");
  }
  if (width <= 0 || height <= 0) throw InputError(path.string() + ": empty image");
  std::vector<std::uint8_t> px(static_cast<std::size_t>(width * height * 3));
  in.read(reinterpret_cast<char*>(px.data()), static_cast<std::streamsize>(px.size()));
  if (in.gcount() != static_cast<std::streamsize>(px.size())) {
    throw InputError(path.string() + ": truncated pixel data");
  }
  return px;
}

}  // namespace

void cmd_synth(const RunConfig& config, std::ostream& out) {
  config.validate();
  SyntheticConfig sc;
  sc.num_tracks = config.synth_tracks;
  sc.frames_per_track = config.synth_frames;
  sc.resolution = EncoderConfig::for_preset(config.preset).resolution;
  sc.positive_rate = config.synth_positive_rate;
  sc.clip_frames = config.clip_frames;
  auto tracks = generate_synthetic(sc, config.seed);

  // Whole videos go to validation so no scene appears in both splits.
  const std::int64_t videos = (sc.num_tracks + sc.entities_per_video - 1) / sc.entities_per_video;
  std::int64_t val_videos = std::llround(videos * config.val_fraction);
  if (config.val_fraction > 0) val_videos = std::clamp<std::int64_t>(val_videos, 1, videos - 1);
  const std::int64_t first_val = (videos - val_videos) * sc.entities_per_video;

  std::vector<TrackBundle> train, val;
  std::vector<AnnotationRecord> train_rows, val_rows;
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(tracks.size()); ++i) {
    write_bundle((fs::path(config.bundles_path()) / tracks[i].entity_id).string(), tracks[i]);
    const auto rows = bundle_annotations(tracks[i]);
    auto& dst = i < first_val ? train_rows : val_rows;
    dst.insert(dst.end(), rows.begin(), rows.end());
    (i < first_val ? train : val).push_back(std::move(tracks[i]));
  }
  write_text_file(config.train_csv_path(), serialize_annotations(train_rows));
  write_text_file(config.val_csv_path(), serialize_annotations(val_rows));

  char line[160];
  std::snprintf(line, sizeof(line), "%-6s %7s %8s %17s %21s %13s\n", "split", "tracks",
                "frames", "SPEAKING_AUDIBLE", "SPEAKING_NOT_AUDIBLE", "NOT_SPEAKING");
  out << line;
  for (const auto& [name, set] : {std::pair{"train", &train}, std::pair{"val", &val}}) {
    const ClassCounts c = count_classes(*set);
    std::snprintf(line, sizeof(line), "%-6s %7lld %8lld %17lld %21lld %13lld\n", name,
                  static_cast<long long>(c.tracks), static_cast<long long>(c.frames),
                  static_cast<long long>(c.audible), static_cast<long long>(c.not_audible),
                  static_cast<long long>(c.silent));
    out << line;
  }
}

void cmd_train(const RunConfig& config, std::ostream& out) {
  config.validate();
  require(config.checkpoint, "checkpoint");
  const auto train_rows = parse_annotations(read_text_file(config.train_csv_path()));
  const auto train = load_tracks(config, train_rows);
  std::vector<Track> val;
  if (fs::exists(config.val_csv_path())) {
    const auto val_rows = parse_annotations(read_text_file(config.val_csv_path()));
    if (!val_rows.empty()) val = load_tracks(config, val_rows);
  }
  const ModelConfig model = model_config(config);
  ParamSet<float> params = init_model(model, config.seed);
  if (config.freeze_frontend && config.init_checkpoint.empty()) {
    throw ConfigError("freeze_frontend needs init_checkpoint with encoder weights");
  }
  if (!config.init_checkpoint.empty()) load_encoders(model, config.init_checkpoint, params);

  std::unique_ptr<std::ofstream> log_file;
  if (!config.log_file.empty()) {
    log_file = std::make_unique<std::ofstream>(config.log_file, std::ios::trunc);
    if (!*log_file) throw IoError("cannot open '" + config.log_file + "' for writing");
  }
  TrainOptions options = config.train_options();
  options.log = [&](const std::string& line) {
    out << line << "\n";
    out.flush();
    if (log_file) *log_file << line << "\n";
  };
  const TrainResult result = train_model(model, params, train, val.empty() ? nullptr : &val,
                                         options);
  save_checkpoint(config.checkpoint, params);
  out << "trained " << result.steps_run << " steps";
  if (result.last_val_map) out << ", val_map " << format_number(*result.last_val_map);
  out << ", checkpoint " << config.checkpoint << "\n";
}

void cmd_infer(const RunConfig& config, std::ostream& out) {
  config.validate();
  require(config.output, "output");
  const auto rows = parse_annotations(read_text_file(config.annotations_path()));
  const auto tracks = load_tracks(config, rows);
  const ModelConfig model = model_config(config);
  ParamSet<float> params = init_model(model, 0);
  assign_params(load_checkpoint<float>(config.checkpoint), params);
  const auto preds = predict_rows(model, params, tracks, rows, config.clip_frames,
                                  inference_kind(config.backend));
  write_text_file(config.output, serialize_predictions(preds));
  out << "wrote " << preds.size() << " predictions to " << config.output << "\n";
}

void cmd_smooth(const RunConfig& config, std::ostream& out) {
  config.validate();
  require(config.input, "input");
  require(config.output, "output");
  const auto preds = parse_predictions(read_text_file(config.input));
  const auto smoothed = smooth_predictions(preds, config.smoothing, config.window_seconds);
  write_text_file(config.output, serialize_predictions(smoothed));
  out << "smoothed " << smoothed.size() << " rows (" << smoothing_method_name(config.smoothing)
      << ", " << window_frames(config.window_seconds) << " frames)\n";
}

void cmd_score(const RunConfig& config, std::ostream& out) {
  require(config.predictions, "predictions");
  const std::string gt_path =
      config.ground_truth.empty() ? config.annotations_path() : config.ground_truth;
  const auto gt = parse_annotations(read_text_file(gt_path));
  const auto preds = parse_predictions(read_text_file(config.predictions));
  const EvalReport report = evaluate_predictions(gt, preds, config.label_mapping());
  const std::string text = format_report(report);
  out << text;
  if (!config.output.empty()) write_text_file(config.output, text);
  if (!config.pr_curve.empty()) write_text_file(config.pr_curve, pr_curve_csv(pr_curve(report.items)));
}

void cmd_import(const RunConfig& config, std::ostream& out) {
  require(config.import_frames_dir, "import_frames_dir");
  require(config.import_audio, "import_audio");
  require(config.entity_id, "entity_id");
  std::vector<fs::path> files;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(config.import_frames_dir, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == ".ppm") files.push_back(entry.path());
  }
  if (ec) throw IoError("cannot list '" + config.import_frames_dir + "': " + ec.message());
  std::sort(files.begin(), files.end());
  TrackBundle b;
  b.entity_id = config.entity_id;
  for (const auto& f : files) {
    std::int64_t h = 0, w = 0;
    const auto px = read_ppm(f, h, w);
    if (b.height == 0) {
      b.height = h;
      b.width = w;
    } else if (h != b.height || w != b.width) {
      throw InputError(f.string() + " is " + std::to_string(w) + "x" + std::to_string(h) +
                       ", earlier frames are " + std::to_string(b.width) + "x" +
                       std::to_string(b.height));
    }
    b.pixels.insert(b.pixels.end(), px.begin(), px.end());
  }
  const std::string audio = read_text_file(config.import_audio);
  if (audio.size() % 2 != 0) throw InputError("audio file has an odd byte count");
  for (std::size_t i = 0; i + 1 < audio.size(); i += 2) {
    const auto u = static_cast<std::uint16_t>(static_cast<std::uint8_t>(audio[i]) |
                                              static_cast<std::uint8_t>(audio[i + 1]) << 8);
    b.waveform.samples.push_back(static_cast<float>(static_cast<std::int16_t>(u) / 32767.0));
  }
  b.labels.assign(b.num_frames(), SpeakingLabel::kNotSpeaking);
  b.annotated.assign(b.num_frames(), true);
  validate_bundle(b);
  const std::string dir = (fs::path(config.bundles_path()) / b.entity_id).string();
  write_bundle(dir, b);
  out << "imported " << b.num_frames() << " frames into " << dir << "\n";
}

}  // namespace asd
