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

#include "asd/pipeline.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "asd/error.h"
#include "asd/eval.h"
#include "asd/ops.h"
#include "asd/optim.h"

namespace asd {

namespace {

// Windows and frames are pushed through the networks in chunks of this
// many to bound tape memory.
constexpr std::int64_t kWindowChunk = 64;
constexpr std::int64_t kFrameChunk = 128;

bool has_lstm(BackendChoice c) { return c != BackendChoice::kTc; }
bool has_tc(BackendChoice c) { return c != BackendChoice::kLstm; }

std::vector<double> probabilities(const Var<float>& logits) {
  std::vector<double> p;
  const auto v = logits.values();
  for (std::size_t i = 0; i + 1 < v.size(); i += 2) {
    p.push_back(speaking_probability({static_cast<double>(v[i]), static_cast<double>(v[i + 1])}));
  }
  return p;
}

}  // namespace

BackendChoice parse_backend_choice(const std::string& name) {
  if (name == "lstm") return BackendChoice::kLstm;
  if (name == "tc") return BackendChoice::kTc;
  if (name == "both") return BackendChoice::kBoth;
  throw ConfigError("unknown backend '" + name + "' (expected lstm, tc or both)");
}

std::string backend_choice_name(BackendChoice choice) {
  switch (choice) {
    case BackendChoice::kLstm:
      return "lstm";
    case BackendChoice::kTc:
      return "tc";
    case BackendChoice::kBoth:
      return "both";
  }
  return "lstm";
}

BackendKind inference_kind(BackendChoice choice) {
  switch (choice) {
    case BackendChoice::kLstm:
      return BackendKind::kLstm;
    case BackendChoice::kTc:
      return BackendKind::kTc;
    case BackendChoice::kBoth:
      break;
  }
  return BackendKind::kEnsemble;
}

ModelConfig ModelConfig::make(ModelPreset preset, BackendChoice choice) {
  ModelConfig c;
  c.encoder = EncoderConfig::for_preset(preset);
  c.backend.embedding_dim = c.encoder.embedding_dim;
  c.choice = choice;
  return c;
}

ParamSet<float> init_model(const ModelConfig& config, std::uint64_t seed) {
  ParamSet<float> params;
  init_encoders(config.encoder, params, seed);
  if (has_lstm(config.choice)) init_lstm_backend(config.backend, params, seed + 1);
  if (has_tc(config.choice)) init_tc_backend(config.backend, params, seed + 2);
  return params;
}

Track prepare_track(TrackBundle bundle) {
  Track t;
  t.cepstra = compute_mfcc(bundle.waveform);
  subtract_cepstral_mean(t.cepstra);
  t.bundle = std::move(bundle);
  return t;
}

std::vector<Track> prepare_tracks(std::vector<TrackBundle> bundles) {
  std::vector<Track> tracks;
  tracks.reserve(bundles.size());
  for (auto& b : bundles) tracks.push_back(prepare_track(std::move(b)));
  return tracks;
}

Clip example_clip(const Track& track, const TrainingExample& example) {
  Clip clip;
  clip.height = track.bundle.height;
  clip.width = track.bundle.width;
  for (std::int64_t f : example.frame_indices) clip.frames.push_back(track.bundle.frame(f));
  clip.cepstra = &track.cepstra;
  clip.cepstral_offset =
      example.center - (static_cast<std::int64_t>(example.frame_indices.size()) - 1) / 2;
  return clip;
}

namespace {

// Validation AP of every head the model carries (and of the ensemble for
// kBoth) from one scoring pass.
std::map<BackendKind, double> head_maps(const ModelConfig& config, ParamSet<float>& params,
                                        const std::vector<Track>& tracks,
                                        std::int64_t clip_frames, const LabelMapping& mapping) {
  std::vector<BackendKind> kinds;
  if (has_lstm(config.choice)) kinds.push_back(BackendKind::kLstm);
  if (has_tc(config.choice)) kinds.push_back(BackendKind::kTc);
  if (config.choice == BackendChoice::kBoth) kinds.push_back(BackendKind::kEnsemble);
  std::map<BackendKind, std::vector<ScoredLabel>> items;
  for (const Track& t : tracks) {
    const FrameScores scores = score_track(config, params, t, clip_frames);
    for (BackendKind kind : kinds) {
      const auto p = scores.combined(kind);
      for (std::int64_t i = 0; i < t.bundle.num_frames(); ++i) {
        if (!t.bundle.annotated.empty() && !t.bundle.annotated[i]) continue;
        items[kind].push_back({p[i], binary_label(t.bundle.labels[i], mapping)});
      }
    }
  }
  std::map<BackendKind, double> maps;
  for (const auto& [kind, list] : items) maps[kind] = average_precision(list);
  return maps;
}

}  // namespace

TrainResult train_model(const ModelConfig& config, ParamSet<float>& params,
                        const std::vector<Track>& train, const std::vector<Track>* val,
                        const TrainOptions& options) {
  if (!(options.learning_rate > 0)) throw ConfigError("learning rate must be positive");
  if (options.max_steps < 0) throw ConfigError("max_steps must be non-negative");
  std::vector<TrainingExample> examples;
  for (std::size_t i = 0; i < train.size(); ++i) {
    auto e = make_examples(train[i].bundle, options.clip_frames, i, options.mapping);
    examples.insert(examples.end(), e.begin(), e.end());
  }
  std::vector<int> labels;
  labels.reserve(examples.size());
  for (const auto& e : examples) labels.push_back(e.label);
  BalancedBatchSampler sampler(labels, options.batch_size, options.seed);

  params.set_trainable(kVideoEncoderPrefix, !options.freeze_frontend);
  params.set_trainable(kAudioEncoderPrefix, !options.freeze_frontend);
  auto state = AdamState<float>::for_params(params);
  const BackendKind eval_kind = inference_kind(config.choice);

  TrainResult result;
  for (std::int64_t step = 0; step < options.max_steps; ++step) {
    const auto batch = sampler.next();
    std::vector<Clip> clips;
    std::vector<int> targets;
    for (std::size_t i : batch) {
      clips.push_back(example_clip(train[examples[i].track], examples[i]));
      targets.push_back(examples[i].label);
    }
    StepRecord record;
    record.step = step;
    try {
      Tape<float> tape;
      const auto enc = encode_clips<float>(config.encoder, params, tape, clips);
      std::optional<Var<float>> loss;
      for (BackendKind kind : {BackendKind::kLstm, BackendKind::kTc}) {
        if (kind == BackendKind::kLstm && !has_lstm(config.choice)) continue;
        if (kind == BackendKind::kTc && !has_tc(config.choice)) continue;
        auto l = softmax_cross_entropy(
            backend_logits(kind, config.backend, params, enc.audio, enc.video), targets);
        loss = loss ? add(*loss, l) : l;
      }
      record.loss = loss->item();
      tape.backward(*loss);
      adam_step(params, state, options.learning_rate);
    } catch (const NumericError& e) {
      throw NumericError("training diverged at step " + std::to_string(step) + ": " + e.what());
    }
    const bool last = step + 1 == options.max_steps;
    double worst_head = 0;
    if (val != nullptr && !val->empty() && options.eval_every > 0 &&
        ((step + 1) % options.eval_every == 0 || last)) {
      const auto maps = head_maps(config, params, *val, options.clip_frames, options.mapping);
      record.val_map = maps.at(eval_kind);
      if (config.choice == BackendChoice::kBoth) {
        record.val_map_lstm = maps.at(BackendKind::kLstm);
        record.val_map_tc = maps.at(BackendKind::kTc);
      }
      worst_head = *record.val_map;
      for (const auto& [kind, m] : maps) worst_head = std::min(worst_head, m);
      result.last_val_map = record.val_map;
    }
    if (options.log) {
      std::string line = "step " + std::to_string(step) + " loss " + format_number(record.loss);
      if (record.val_map) line += " val_map " + format_number(*record.val_map);
      if (record.val_map_lstm) line += " lstm " + format_number(*record.val_map_lstm);
      if (record.val_map_tc) line += " tc " + format_number(*record.val_map_tc);
      options.log(line);
    }
    result.history.push_back(record);
    result.steps_run = step + 1;
    // An ensemble only stops once each of its heads is good on its own.
    if (record.val_map && options.target_map > 0 && worst_head >= options.target_map) {
      result.reached_at = step + 1;
      break;
    }
  }
  return result;
}

std::vector<double> FrameScores::combined(BackendKind kind) const {
  switch (kind) {
    case BackendKind::kLstm:
      if (lstm.empty()) throw StateError("the model carries no lstm head");
      return lstm;
    case BackendKind::kTc:
      if (tc.empty()) throw StateError("the model carries no tc head");
      return tc;
    case BackendKind::kEnsemble:
      break;
  }
  if (lstm.empty() || tc.empty()) throw StateError("the ensemble needs both heads");
  std::vector<double> out(lstm.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 0.5 * (lstm[i] + tc[i]);
  return out;
}

FrameScores score_track(const ModelConfig& config, ParamSet<float>& params, const Track& track,
                        std::int64_t clip_frames) {
  if (clip_frames < 5 || clip_frames % 2 == 0) {
    throw ConfigError("clip length T must be odd and at least 5");
  }
  const TrackBundle& b = track.bundle;
  const std::int64_t n = b.num_frames(), half = (clip_frames - 1) / 2;
  const std::int64_t length = clip_frames - (kVideoWindowFrames - 1);
  const std::int64_t first = -half, count = n + length - 1;
  const std::int64_t dim = config.encoder.embedding_dim;
  if (b.height != config.encoder.resolution || b.width != config.encoder.resolution) {
    throw DimensionError("track '" + b.entity_id + "' frames are " + std::to_string(b.height) +
                         "x" + std::to_string(b.width) + " but the model expects " +
                         std::to_string(config.encoder.resolution));
  }

  // Window s covers frames clamp(s .. s + 4) and cepstral columns from 4s.
  std::vector<float> video_emb(count * dim), audio_emb(count * dim);
  for (std::int64_t c0 = 0; c0 < count; c0 += kWindowChunk) {
    const std::int64_t m = std::min(kWindowChunk, count - c0);
    Buffer<float> video, audio;
    for (std::int64_t w = c0; w < c0 + m; ++w) {
      const std::int64_t s = first + w;
      std::vector<std::span<const std::uint8_t>> frames;
      for (std::int64_t k = 0; k < kVideoWindowFrames; ++k) {
        frames.push_back(b.frame(std::clamp<std::int64_t>(s + k, 0, n - 1)));
      }
      append_video_window<float>(frames, b.height, b.width, video);
      append_audio_window<float>(track.cepstra, s, audio);
    }
    Shape vshape = video_window_shape(config.encoder);
    vshape.insert(vshape.begin(), m);
    Shape ashape = audio_window_shape();
    ashape.insert(ashape.begin(), m);
    Tape<float> tape;
    auto v = encode_video_windows(config.encoder, params,
                                  tape.constant(Tensor<float>(vshape, std::move(video))));
    auto a = encode_audio_windows(config.encoder, params,
                                  tape.constant(Tensor<float>(ashape, std::move(audio))));
    std::copy(v.values().begin(), v.values().end(), video_emb.begin() + c0 * dim);
    std::copy(a.values().begin(), a.values().end(), audio_emb.begin() + c0 * dim);
  }

  // Frame i reads windows i .. i + length - 1 of the cache.
  FrameScores scores;
  for (std::int64_t f0 = 0; f0 < n; f0 += kFrameChunk) {
    const std::int64_t m = std::min(kFrameChunk, n - f0);
    Buffer<float> va, vv;
    for (std::int64_t i = f0; i < f0 + m; ++i) {
      va.insert(va.end(), audio_emb.begin() + i * dim, audio_emb.begin() + (i + length) * dim);
      vv.insert(vv.end(), video_emb.begin() + i * dim, video_emb.begin() + (i + length) * dim);
    }
    Tape<float> tape;
    const Shape seq{m, length, dim};
    auto a = tape.constant(Tensor<float>(seq, std::move(va)));
    auto v = tape.constant(Tensor<float>(seq, std::move(vv)));
    if (has_lstm(config.choice)) {
      const auto p = probabilities(blstm_logits(config.backend, params, a, v));
      scores.lstm.insert(scores.lstm.end(), p.begin(), p.end());
    }
    if (has_tc(config.choice)) {
      const auto p = probabilities(tc_logits(config.backend, params, a, v));
      scores.tc.insert(scores.tc.end(), p.begin(), p.end());
    }
  }
  return scores;
}

double validation_map(const ModelConfig& config, ParamSet<float>& params,
                      const std::vector<Track>& tracks, std::int64_t clip_frames,
                      BackendKind kind, const LabelMapping& mapping) {
  std::vector<ScoredLabel> items;
  for (const Track& t : tracks) {
    const auto p = score_track(config, params, t, clip_frames).combined(kind);
    for (std::int64_t i = 0; i < t.bundle.num_frames(); ++i) {
      if (!t.bundle.annotated.empty() && !t.bundle.annotated[i]) continue;
      items.push_back({p[i], binary_label(t.bundle.labels[i], mapping)});
    }
  }
  return average_precision(items);
}

std::vector<PredictionRecord> predict_rows(const ModelConfig& config, ParamSet<float>& params,
                                           const std::vector<Track>& tracks,
                                           const std::vector<AnnotationRecord>& rows,
                                           std::int64_t clip_frames, BackendKind kind) {
  std::unordered_map<std::string, std::size_t> by_entity;
  for (std::size_t i = 0; i < tracks.size(); ++i) by_entity[tracks[i].bundle.entity_id] = i;
  std::map<std::size_t, std::vector<double>> cache;
  std::vector<PredictionRecord> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    auto it = by_entity.find(r.entity_id);
    if (it == by_entity.end()) throw InputError("no track bundle for entity '" + r.entity_id + "'");
    const Track& t = tracks[it->second];
    auto c = cache.find(it->second);
    if (c == cache.end()) {
      c = cache.emplace(it->second, score_track(config, params, t, clip_frames).combined(kind))
              .first;
    }
    const std::int64_t f = frame_index(t.bundle, r.frame_timestamp);
    if (f < 0 || f >= t.bundle.num_frames()) {
      throw AlignmentError("row at " + format_number(r.frame_timestamp) + " s for entity '" +
                           r.entity_id + "' falls outside its track");
    }
    out.push_back({r, c->second[f]});
  }
  return out;
}

std::vector<PredictionRecord> smooth_predictions(const std::vector<PredictionRecord>& rows,
                                                 SmoothingMethod method, double window_seconds) {
  std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    groups[{rows[i].row.video_id, rows[i].row.entity_id}].push_back(i);
  }
  std::vector<PredictionRecord> out = rows;
  for (auto& [key, idx] : groups) {
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return rows[a].row.frame_timestamp < rows[b].row.frame_timestamp;
    });
    ScoreTrack track;
    track.entity_id = key.second;
    for (std::size_t i : idx) {
      track.frame_timestamps.push_back(rows[i].row.frame_timestamp);
      track.scores.push_back(rows[i].score);
    }
    const ScoreTrack smoothed = smooth_track(track, method, window_seconds);
    for (std::size_t k = 0; k < idx.size(); ++k) out[idx[k]].score = smoothed.scores[k];
  }
  return out;
}

}  // namespace asd
