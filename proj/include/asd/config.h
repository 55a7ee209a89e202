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

#ifndef ASD_CONFIG_H_
#define ASD_CONFIG_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "asd/encoders.h"
#include "asd/pipeline.h"
#include "asd/postprocess.h"

namespace asd {

// Everything a subcommand may read. Loaded from key=value lines, then
// overridden key by key from the command line.
struct RunConfig {
  std::int64_t clip_frames = 9;
  std::int64_t batch_size = 64;
  double learning_rate = 1e-2;
  std::int64_t max_steps = 2000;
  std::uint64_t seed = 1;
  BackendChoice backend = BackendChoice::kLstm;
  SmoothingMethod smoothing = SmoothingMethod::kNone;
  double window_seconds = kDefaultSmoothingSeconds;
  ModelPreset preset = ModelPreset::kTiny;
  bool freeze_frontend = false;
  bool not_audible_positive = false;
  std::int64_t eval_every = 50;
  double target_map = 0.0;

  std::int64_t synth_tracks = 40;
  std::int64_t synth_frames = 250;
  double synth_positive_rate = 0.3;
  double val_fraction = 0.2;

  std::string data_dir = ".";
  std::string bundles_dir;  // default <data_dir>/bundles
  std::string train_csv;    // default <data_dir>/train.csv
  std::string val_csv;      // default <data_dir>/val.csv
  std::string annotations;  // rows to predict; default val_csv
  std::string checkpoint = "model.asdc";
  std::string init_checkpoint;
  std::string output;
  std::string input;
  std::string ground_truth;
  std::string predictions;
  std::string pr_curve;
  std::string log_file;
  std::string import_frames_dir;
  std::string import_audio;
  std::string entity_id;

  // Throws ConfigError for unknown keys or malformed values.
  void set(std::string_view key, std::string_view value);
  // T in [5, 25] and odd, even batch, positive learning rate, ...
  void validate() const;

  std::string bundles_path() const;
  std::string train_csv_path() const;
  std::string val_csv_path() const;
  std::string annotations_path() const;
  LabelMapping label_mapping() const;
  TrainOptions train_options() const;

  static const std::vector<std::string>& keys();
};

// Applies `key = value` lines; '#' starts a comment. Errors carry the line.
void apply_config_text(RunConfig& config, std::string_view text);
RunConfig load_config_file(const std::string& path);

std::string preset_name(ModelPreset preset);
ModelPreset parse_preset(std::string_view name);

}  // namespace asd

#endif  // ASD_CONFIG_H_
