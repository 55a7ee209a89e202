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

#ifndef ASD_PIPELINE_H_
#define ASD_PIPELINE_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "asd/annotations.h"
#include "asd/backends.h"
#include "asd/dataset.h"
#include "asd/encoders.h"
#include "asd/postprocess.h"

namespace asd {

// Which classifiers a model carries. kBoth trains both heads on shared
// encoders and ensembles them at inference.
enum class BackendChoice { kLstm, kTc, kBoth };

BackendChoice parse_backend_choice(const std::string& name);
std::string backend_choice_name(BackendChoice choice);
// The inference-time kind: kBoth maps to the ensemble.
BackendKind inference_kind(BackendChoice choice);

struct ModelConfig {
  EncoderConfig encoder;
  BackendConfig backend;
  BackendChoice choice = BackendChoice::kLstm;

  static ModelConfig make(ModelPreset preset, BackendChoice choice);
};

ParamSet<float> init_model(const ModelConfig& config, std::uint64_t seed);

// A bundle plus its mean-normalized cepstra.
struct Track {
  TrackBundle bundle;
  CepstralFrames cepstra;
};

Track prepare_track(TrackBundle bundle);
std::vector<Track> prepare_tracks(std::vector<TrackBundle> bundles);

// The example's T frames; audio windows follow the unclamped frame
// positions, so they replicate the edge cepstra the same way.
Clip example_clip(const Track& track, const TrainingExample& example);

struct TrainOptions {
  std::int64_t clip_frames = 9;
  std::int64_t batch_size = 64;
  double learning_rate = 1e-2;
  std::int64_t max_steps = 2000;
  std::uint64_t seed = 1;
  // Validation mAP every eval_every steps (0 = never).
  std::int64_t eval_every = 50;
  // Stop once validation mAP reaches this value (<= 0 disables); a kBoth
  // model also needs each head to reach it.
  double target_map = 0.0;
  bool freeze_frontend = false;
  LabelMapping mapping;
  std::function<void(const std::string&)> log;
};

struct StepRecord {
  std::int64_t step = 0;
  double loss = 0.0;
  std::optional<double> val_map;
  // Per-head validation AP, for models that carry both heads.
  std::optional<double> val_map_lstm;
  std::optional<double> val_map_tc;
};

struct TrainResult {
  std::vector<StepRecord> history;
  std::int64_t steps_run = 0;
  std::optional<double> last_val_map;
  // First step at which target_map was reached.
  std::optional<std::int64_t> reached_at;
};

// Adam on balanced batches with softmax cross-entropy (summed over heads
// for kBoth). A non-finite loss raises NumericError naming the step.
TrainResult train_model(const ModelConfig& config, ParamSet<float>& params,
                        const std::vector<Track>& train, const std::vector<Track>* val,
                        const TrainOptions& options);

// Per-frame class-1 probabilities of every head the model carries.
struct FrameScores {
  std::vector<double> lstm;
  std::vector<double> tc;

  std::vector<double> combined(BackendKind kind) const;
};

// Scores every frame of a track with T-frame clips centred on it (edge
// replication). Windows shared between clips are encoded once.
FrameScores score_track(const ModelConfig& config, ParamSet<float>& params, const Track& track,
                        std::int64_t clip_frames);

// Pooled AP over every annotated frame of `tracks`.
double validation_map(const ModelConfig& config, ParamSet<float>& params,
                      const std::vector<Track>& tracks, std::int64_t clip_frames,
                      BackendKind kind, const LabelMapping& mapping = {});

// One prediction per ground-truth row, in row order.
std::vector<PredictionRecord> predict_rows(const ModelConfig& config, ParamSet<float>& params,
                                           const std::vector<Track>& tracks,
                                           const std::vector<AnnotationRecord>& rows,
                                           std::int64_t clip_frames, BackendKind kind);

// Smooths each (video_id, entity_id) track separately, in timestamp order;
// row order is preserved.
std::vector<PredictionRecord> smooth_predictions(const std::vector<PredictionRecord>& rows,
                                                 SmoothingMethod method,
                                                 double window_seconds = kDefaultSmoothingSeconds);

}  // namespace asd

#endif  // ASD_PIPELINE_H_
