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

#ifndef ASD_BACKENDS_H_
#define ASD_BACKENDS_H_

#include <array>
#include <cstdint>
#include <string>

#include "asd/autograd.h"
#include "asd/encoders.h"
#include "asd/tensor.h"

namespace asd {

inline constexpr const char* kLstmBackendPrefix = "lstm_backend";
inline constexpr const char* kTcBackendPrefix = "tc_backend";

enum class BackendKind { kLstm, kTc, kEnsemble };

// Which time steps feed the classifier: the centre step, or the mean over
// all steps (kept for ablation).
enum class Readout { kCenter, kMean };

struct BackendConfig {
  std::int64_t embedding_dim = 512;
  std::int64_t lstm_hidden = 128;
  std::int64_t lstm_layers = 2;
  std::int64_t tc_filters = 128;
  std::int64_t tc_kernel = 3;
  Readout readout = Readout::kCenter;
};

// Class 0 = not speaking, class 1 = speaking.
struct ClipLogits {
  std::array<double, 2> logits{};
  std::int64_t center_frame = 0;
};

inline std::int64_t center_step(std::int64_t length) { return (length - 1) / 2; }

template <typename T>
void init_lstm_backend(const BackendConfig& config, ParamSet<T>& params, std::uint64_t seed);
template <typename T>
void init_tc_backend(const BackendConfig& config, ParamSet<T>& params, std::uint64_t seed);

// Batched classifiers over [B x L x D] audio and video sequences; return
// [B x 2] logits.
template <typename T>
Var<T> blstm_logits(const BackendConfig& config, ParamSet<T>& params, const Var<T>& audio,
                    const Var<T>& video);
template <typename T>
Var<T> tc_logits(const BackendConfig& config, ParamSet<T>& params, const Var<T>& audio,
                 const Var<T>& video);
template <typename T>
Var<T> backend_logits(BackendKind kind, const BackendConfig& config, ParamSet<T>& params,
                      const Var<T>& audio, const Var<T>& video);

ClipLogits blstm_forward(const BackendConfig& config, ParamSet<float>& params,
                         const EmbeddingSequence& audio, const EmbeddingSequence& video);
ClipLogits tc_forward(const BackendConfig& config, ParamSet<float>& params,
                      const EmbeddingSequence& audio, const EmbeddingSequence& video);

// Softmax probability of class 1.
double speaking_probability(const std::array<double, 2>& logits);

// Class-1 probability of one classifier, or the equal-weight mean of both
// for kEnsemble.
double predict_proba(BackendKind kind, const BackendConfig& config, ParamSet<float>& params,
                     const EmbeddingSequence& audio, const EmbeddingSequence& video);

bool has_backend_params(BackendKind kind, const ParamSet<float>& params);

std::string backend_name(BackendKind kind);

}  // namespace asd

#endif  // ASD_BACKENDS_H_
