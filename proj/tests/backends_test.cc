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

#include "asd/backends.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "asd/error.h"
#include "asd/ops.h"
#include "gradcheck.h"

namespace asd {
namespace {

using Vec = std::vector<double>;

BackendConfig small_config(Readout readout = Readout::kCenter) {
  BackendConfig cfg;
  cfg.embedding_dim = 6;
  cfg.lstm_hidden = 4;
  cfg.tc_filters = 5;
  cfg.readout = readout;
  return cfg;
}

Tensor<double> random_seq(std::int64_t batch, std::int64_t steps, std::int64_t dim,
                          std::mt19937_64& rng) {
  return testing::random_tensor({batch, steps, dim}, rng);
}

Vec logits_of(BackendKind kind, const BackendConfig& cfg, ParamSet<double>& params,
              const Tensor<double>& audio, const Tensor<double>& video) {
  Tape<double> tape;
  auto out = backend_logits(kind, cfg, params, tape.constant(audio), tape.constant(video));
  return Vec(out.values().begin(), out.values().end());
}

// y = W x + b with W stored [out x in].
Vec affine(const Tensor<double>& w, const Tensor<double>& b, const Vec& x) {
  const std::int64_t out = w.dim(0), in = w.dim(1);
  Vec y(out);
  for (std::int64_t o = 0; o < out; ++o) {
    double s = b[o];
    for (std::int64_t i = 0; i < in; ++i) s += w[o * in + i] * x[i];
    y[o] = s;
  }
  return y;
}

double sigm(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// One LSTM step from a zero state.
Vec first_step(ParamSet<double>& p, const std::string& name, const Vec& x) {
  Vec g = affine(p.at(name + ".weight_ih"), p.at(name + ".bias_ih"), x);
  const Tensor<double>& bhh = p.at(name + ".bias_hh");
  const std::size_t h = g.size() / 4;
  Vec out(h);
  for (std::size_t k = 0; k < h; ++k) {
    const double i = sigm(g[k] + bhh[k]);
    const double gg = std::tanh(g[2 * h + k] + bhh[2 * h + k]);
    const double o = sigm(g[3 * h + k] + bhh[3 * h + k]);
    out[k] = o * std::tanh(i * gg);
  }
  return out;
}

Vec concat(Vec a, const Vec& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

TEST(BlstmTest, OutputsTwoLogitsPerClip) {
  BackendConfig cfg;
  ParamSet<double> params;
  init_lstm_backend(cfg, params, 1);
  std::mt19937_64 rng(2);
  const auto a = random_seq(3, 5, 512, rng), v = random_seq(3, 5, 512, rng);
  Tape<double> tape;
  auto out = blstm_logits(cfg, params, tape.constant(a), tape.constant(v));
  EXPECT_EQ(out.shape(), (Shape{3, 2}));
  EXPECT_EQ(center_step(5), 2);
  EXPECT_EQ(center_step(1), 0);
  EXPECT_TRUE(params.contains("lstm_backend.video.layer1.backward.weight_ih"));
  EXPECT_EQ(params.at("lstm_backend.audio.layer1.forward.weight_ih").shape(),
            (Shape{512, 256}));
  EXPECT_EQ(params.at("lstm_backend.classifier.weight").shape(), (Shape{2, 512}));
}

TEST(BlstmTest, SingleStepEqualsDirectCellEvaluation) {
  const BackendConfig cfg = small_config();
  for (int seed = 0; seed < 5; ++seed) {
    ParamSet<double> params;
    init_lstm_backend(cfg, params, seed);
    std::mt19937_64 rng(seed + 50);
    const auto a = random_seq(1, 1, 6, rng), v = random_seq(1, 1, 6, rng);
    Vec feature;
    for (const auto& [stream, x] : {std::pair{"audio", &a}, std::pair{"video", &v}}) {
      const std::string base = std::string("lstm_backend.") + stream;
      const Vec in(x->data().begin(), x->data().end());
      const Vec l0 = concat(first_step(params, base + ".layer0.forward", in),
                            first_step(params, base + ".layer0.backward", in));
      feature = concat(feature, concat(first_step(params, base + ".layer1.forward", l0),
                                       first_step(params, base + ".layer1.backward", l0)));
    }
    const Vec expected = affine(params.at("lstm_backend.classifier.weight"),
                                params.at("lstm_backend.classifier.bias"), feature);
    const Vec got = logits_of(BackendKind::kLstm, cfg, params, a, v);
    EXPECT_NEAR(got[0], expected[0], 1e-12);
    EXPECT_NEAR(got[1], expected[1], 1e-12);
  }
}

Tensor<double> reversed(const Tensor<double>& seq) {
  Tensor<double> out(seq.shape());
  const std::int64_t b = seq.dim(0), l = seq.dim(1), d = seq.dim(2);
  for (std::int64_t i = 0; i < b; ++i) {
    for (std::int64_t t = 0; t < l; ++t) {
      for (std::int64_t k = 0; k < d; ++k) {
        out[(i * l + t) * d + k] = seq[(i * l + (l - 1 - t)) * d + k];
      }
    }
  }
  return out;
}

// Swaps columns [offset, offset + half) with [offset + half, offset + 2 half)
// in every row.
void swap_column_halves(Tensor<double>& w, std::int64_t offset, std::int64_t half) {
  const std::int64_t cols = w.dim(1);
  for (std::int64_t r = 0; r < w.dim(0); ++r) {
    for (std::int64_t c = 0; c < half; ++c) {
      std::swap(w[r * cols + offset + c], w[r * cols + offset + half + c]);
    }
  }
}

ParamSet<double> mirrored(const ParamSet<double>& params, const BackendConfig& cfg) {
  ParamSet<double> out(params);
  const std::int64_t h = cfg.lstm_hidden;
  for (const char* stream : {"audio", "video"}) {
    for (int layer = 0; layer < cfg.lstm_layers; ++layer) {
      const std::string base =
          std::string("lstm_backend.") + stream + ".layer" + std::to_string(layer);
      for (const char* p : {".weight_ih", ".weight_hh", ".bias_ih", ".bias_hh"}) {
        std::swap(out.at(base + ".forward" + p), out.at(base + ".backward" + p));
      }
      if (layer > 0) {
        swap_column_halves(out.at(base + ".forward.weight_ih"), 0, h);
        swap_column_halves(out.at(base + ".backward.weight_ih"), 0, h);
      }
    }
  }
  swap_column_halves(out.at("lstm_backend.classifier.weight"), 0, h);
  swap_column_halves(out.at("lstm_backend.classifier.weight"), 2 * h, h);
  return out;
}

TEST(BlstmTest, TimeReversalWithDirectionSwapIsSymmetric) {
  const BackendConfig cfg = small_config();
  for (int seed = 0; seed < 10; ++seed) {
    for (std::int64_t steps : {1, 3, 5, 7}) {
      ParamSet<double> params;
      init_lstm_backend(cfg, params, seed);
      ParamSet<double> swapped = mirrored(params, cfg);
      std::mt19937_64 rng(seed * 31 + steps);
      const auto a = random_seq(2, steps, 6, rng), v = random_seq(2, steps, 6, rng);
      const Vec base = logits_of(BackendKind::kLstm, cfg, params, a, v);
      const Vec mirror =
          logits_of(BackendKind::kLstm, cfg, swapped, reversed(a), reversed(v));
      for (std::size_t i = 0; i < base.size(); ++i) EXPECT_NEAR(base[i], mirror[i], 1e-12);
    }
  }
}

TEST(BlstmTest, ReadoutDependsOnAllSteps) {
  const BackendConfig cfg = small_config();
  ParamSet<double> params;
  init_lstm_backend(cfg, params, 3);
  std::mt19937_64 rng(4);
  const auto a = random_seq(1, 5, 6, rng), v = random_seq(1, 5, 6, rng);
  const Vec base = logits_of(BackendKind::kLstm, cfg, params, a, v);
  for (std::int64_t t : {0, 4}) {
    Tensor<double> edited = v;
    edited[t * 6] += 1.0;
    EXPECT_NE(logits_of(BackendKind::kLstm, cfg, params, a, edited), base) << t;
  }
}

TEST(TcTest, OutputsTwoLogitsPerClip) {
  BackendConfig cfg;
  ParamSet<double> params;
  init_tc_backend(cfg, params, 1);
  std::mt19937_64 rng(2);
  const auto a = random_seq(2, 5, 512, rng), v = random_seq(2, 5, 512, rng);
  EXPECT_EQ(logits_of(BackendKind::kTc, cfg, params, a, v).size(), 4u);
  EXPECT_EQ(params.at("tc_backend.audio.conv0.weight").shape(), (Shape{128, 512, 3}));
  EXPECT_EQ(params.at("tc_backend.video.conv1.weight").shape(), (Shape{128, 128, 3}));
  EXPECT_EQ(params.at("tc_backend.classifier.weight").shape(), (Shape{2, 256}));
}

Tensor<double> constant_seq(std::int64_t steps, const Vec& column) {
  const std::int64_t d = static_cast<std::int64_t>(column.size());
  Tensor<double> t({1, steps, d});
  for (std::int64_t s = 0; s < steps; ++s) {
    for (std::int64_t k = 0; k < d; ++k) t[s * d + k] = column[k];
  }
  return t;
}

TEST(TcTest, ConstantInputGivesTimeConstantFeatures) {
  // Every step carries the same feature, so the centre readout agrees with
  // the mean readout and with any other length.
  const BackendConfig center = small_config(Readout::kCenter);
  const BackendConfig mean = small_config(Readout::kMean);
  ParamSet<double> params;
  init_tc_backend(center, params, 5);
  const Vec ca{0.3, -0.2, 0.9, 0.1, -0.7, 0.4}, cv{-0.5, 0.8, 0.2, 0.6, -0.1, 0.05};
  const Vec ref = logits_of(BackendKind::kTc, center, params, constant_seq(1, ca),
                            constant_seq(1, cv));
  for (std::int64_t steps : {3, 5, 9}) {
    const auto a = constant_seq(steps, ca), v = constant_seq(steps, cv);
    const Vec c = logits_of(BackendKind::kTc, center, params, a, v);
    const Vec m = logits_of(BackendKind::kTc, mean, params, a, v);
    for (int i = 0; i < 2; ++i) {
      EXPECT_NEAR(c[i], ref[i], 1e-12);
      EXPECT_NEAR(m[i], ref[i], 1e-12);
    }
  }
}

// Dense evaluation for L = 1: replication padding shows all taps the one
// column, so each conv acts as W summed over taps.
Vec tc_dense(ParamSet<double>& p, const std::string& base, const Vec& x) {
  Vec h = x;
  for (int layer = 0; layer < 2; ++layer) {
    const Tensor<double>& w = p.at(base + ".conv" + std::to_string(layer) + ".weight");
    const Tensor<double>& b = p.at(base + ".conv" + std::to_string(layer) + ".bias");
    const std::int64_t out = w.dim(0), in = w.dim(1), k = w.dim(2);
    Vec y(out);
    for (std::int64_t o = 0; o < out; ++o) {
      double s = b[o];
      for (std::int64_t c = 0; c < in; ++c) {
        for (std::int64_t t = 0; t < k; ++t) s += w[(o * in + c) * k + t] * h[c];
      }
      y[o] = layer == 0 ? std::max(s, 0.0) : s;
    }
    h = y;
  }
  return h;
}

TEST(TcTest, SingleColumnEqualsDenseOracle) {
  const BackendConfig cfg = small_config();
  for (int seed = 0; seed < 10; ++seed) {
    ParamSet<double> params;
    init_tc_backend(cfg, params, seed);
    std::mt19937_64 rng(seed + 70);
    const auto a = random_seq(1, 1, 6, rng), v = random_seq(1, 1, 6, rng);
    const Vec feature =
        concat(tc_dense(params, "tc_backend.audio", Vec(a.data().begin(), a.data().end())),
               tc_dense(params, "tc_backend.video", Vec(v.data().begin(), v.data().end())));
    const Vec expected = affine(params.at("tc_backend.classifier.weight"),
                                params.at("tc_backend.classifier.bias"), feature);
    const Vec got = logits_of(BackendKind::kTc, cfg, params, a, v);
    EXPECT_NEAR(got[0], expected[0], 1e-12);
    EXPECT_NEAR(got[1], expected[1], 1e-12);
  }
}

TEST(TcTest, OddKernelRequired) {
  BackendConfig cfg = small_config();
  cfg.tc_kernel = 4;
  ParamSet<double> params;
  EXPECT_THROW(init_tc_backend(cfg, params, 0), ConfigError);
}

TEST(BackendErrorTest, LengthMismatchIsAlignmentError) {
  const BackendConfig cfg = small_config();
  ParamSet<double> params;
  init_lstm_backend(cfg, params, 0);
  init_tc_backend(cfg, params, 0);
  std::mt19937_64 rng(1);
  const auto a = random_seq(1, 5, 6, rng), v = random_seq(1, 4, 6, rng);
  EXPECT_THROW(logits_of(BackendKind::kLstm, cfg, params, a, v), AlignmentError);
  EXPECT_THROW(logits_of(BackendKind::kTc, cfg, params, a, v), AlignmentError);
  EXPECT_THROW(logits_of(BackendKind::kEnsemble, cfg, params, a, a), ConfigError);
}

EmbeddingSequence random_embedding(Stream stream, std::int64_t dim, std::int64_t length,
                                   std::mt19937_64& rng) {
  std::uniform_real_distribution<float> dist(-1.f, 1.f);
  EmbeddingSequence s;
  s.stream = stream;
  s.dim = dim;
  s.length = length;
  for (std::int64_t i = 0; i < dim * length; ++i) s.values.push_back(dist(rng));
  for (std::int64_t j = 0; j < length; ++j) s.center_frame_indices.push_back(j + 2);
  return s;
}

// Zero classifier weights make the probability a function of the bias only.
void pin_probability(ParamSet<float>& params, const char* prefix, double p) {
  for (float& w : params.at(std::string(prefix) + ".classifier.weight").data()) w = 0.f;
  Tensor<float>& b = params.at(std::string(prefix) + ".classifier.bias");
  b[0] = 0.f;
  b[1] = static_cast<float>(std::log(p / (1 - p)));
}

class PredictTest : public ::testing::Test {
 protected:
  void SetUp() override {
    cfg_ = small_config();
    init_lstm_backend(cfg_, params_, 11);
    init_tc_backend(cfg_, params_, 12);
    std::mt19937_64 rng(13);
    audio_ = random_embedding(Stream::kAudio, 6, 5, rng);
    video_ = random_embedding(Stream::kVideo, 6, 5, rng);
  }

  BackendConfig cfg_;
  ParamSet<float> params_;
  EmbeddingSequence audio_, video_;
};

TEST_F(PredictTest, UniformLogitsGiveHalf) {
  EXPECT_DOUBLE_EQ(speaking_probability({0.0, 0.0}), 0.5);
  EXPECT_NEAR(speaking_probability({0.0, std::log(3.0)}), 0.75, 1e-15);
  EXPECT_EQ(speaking_probability({0.0, 1e4}), 1.0);
  EXPECT_EQ(speaking_probability({1e4, 0.0}), 0.0);
}

TEST_F(PredictTest, EnsembleAveragesProbabilities) {
  pin_probability(params_, kLstmBackendPrefix, 0.8);
  pin_probability(params_, kTcBackendPrefix, 0.6);
  EXPECT_NEAR(predict_proba(BackendKind::kLstm, cfg_, params_, audio_, video_), 0.8, 1e-6);
  EXPECT_NEAR(predict_proba(BackendKind::kTc, cfg_, params_, audio_, video_), 0.6, 1e-6);
  EXPECT_NEAR(predict_proba(BackendKind::kEnsemble, cfg_, params_, audio_, video_), 0.7, 1e-6);
}

TEST_F(PredictTest, EnsembleOfEqualMembersIsThatMember) {
  pin_probability(params_, kLstmBackendPrefix, 0.35);
  pin_probability(params_, kTcBackendPrefix, 0.35);
  EXPECT_EQ(predict_proba(BackendKind::kEnsemble, cfg_, params_, audio_, video_),
            predict_proba(BackendKind::kTc, cfg_, params_, audio_, video_));
}

TEST_F(PredictTest, EnsembleLiesBetweenMembers) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = random_embedding(Stream::kAudio, 6, 3, rng);
    const auto v = random_embedding(Stream::kVideo, 6, 3, rng);
    const double l = predict_proba(BackendKind::kLstm, cfg_, params_, a, v);
    const double t = predict_proba(BackendKind::kTc, cfg_, params_, a, v);
    const double e = predict_proba(BackendKind::kEnsemble, cfg_, params_, a, v);
    for (double p : {l, t, e}) {
      EXPECT_GE(p, 0.0);
      EXPECT_LE(p, 1.0);
    }
    EXPECT_GE(e, std::min(l, t));
    EXPECT_LE(e, std::max(l, t));
  }
}

TEST_F(PredictTest, ShiftingBothLogitsLeavesProbabilityUnchanged) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> dist(-20, 20);
  for (int trial = 0; trial < 1000; ++trial) {
    const double a = dist(rng), b = dist(rng), k = dist(rng) * 10;
    EXPECT_NEAR(speaking_probability({a, b}), speaking_probability({a + k, b + k}), 1e-6);
  }
}

TEST_F(PredictTest, CenterFrameFollowsCenterStep) {
  EXPECT_EQ(blstm_forward(cfg_, params_, audio_, video_).center_frame, 4);
  EXPECT_EQ(tc_forward(cfg_, params_, audio_, video_).center_frame, 4);
}

TEST_F(PredictTest, MatchesBatchedLogits) {
  Tape<float> tape;
  auto a = tape.constant(Tensor<float>(Shape{1, 5, 6}, audio_.values));
  auto v = tape.constant(Tensor<float>(Shape{1, 5, 6}, video_.values));
  auto batched = tc_logits(cfg_, params_, a, v);
  const ClipLogits single = tc_forward(cfg_, params_, audio_, video_);
  EXPECT_EQ(single.logits[0], batched.values()[0]);
  EXPECT_EQ(single.logits[1], batched.values()[1]);
}

TEST_F(PredictTest, MissingParamsIsStateError) {
  ParamSet<float> lstm_only;
  init_lstm_backend(cfg_, lstm_only, 1);
  EXPECT_NO_THROW(predict_proba(BackendKind::kLstm, cfg_, lstm_only, audio_, video_));
  EXPECT_THROW(predict_proba(BackendKind::kTc, cfg_, lstm_only, audio_, video_), StateError);
  EXPECT_THROW(predict_proba(BackendKind::kEnsemble, cfg_, lstm_only, audio_, video_),
               StateError);
}

TEST_F(PredictTest, MismatchedSequencesAreAlignmentError) {
  std::mt19937_64 rng(1);
  const auto shorter = random_embedding(Stream::kVideo, 6, 4, rng);
  EXPECT_THROW(predict_proba(BackendKind::kLstm, cfg_, params_, audio_, shorter), AlignmentError);
}

struct GradCase {
  BackendKind kind;
  Readout readout;
};

class BackendGradientTest : public ::testing::TestWithParam<GradCase> {};

TEST_P(BackendGradientTest, CrossEntropyMatchesFiniteDifferences) {
  const GradCase gc = GetParam();
  const BackendConfig cfg = small_config(gc.readout);
  for (int seed = 0; seed < 20; ++seed) {
    ParamSet<double> params;
    if (gc.kind == BackendKind::kLstm) {
      init_lstm_backend(cfg, params, seed);
    } else {
      init_tc_backend(cfg, params, seed);
    }
    std::mt19937_64 rng(seed + 1000);
    const std::int64_t steps = 1 + 2 * (seed % 3);
    params.add("input.audio", random_seq(2, steps, 6, rng));
    params.add("input.video", random_seq(2, steps, 6, rng));
    params.at("input.audio").set_requires_grad(true);
    params.at("input.video").set_requires_grad(true);
    const std::vector<int> labels{seed % 2, 1 - seed % 2};
    testing::LossBuilder build = [&](Tape<double>& tape, ParamSet<double>& p) {
      auto logits = backend_logits(gc.kind, cfg, p, tape.param(p.at("input.audio")),
                                   tape.param(p.at("input.video")));
      return softmax_cross_entropy(logits, labels);
    };
    const auto r = testing::check_gradients(build, params, 1e-6, 0, seed);
    EXPECT_LT(r.worst_relative_error, 1e-4) << "seed " << seed << " " << r.worst_tensor;
  }
}

INSTANTIATE_TEST_SUITE_P(Backends, BackendGradientTest,
                         ::testing::Values(GradCase{BackendKind::kLstm, Readout::kCenter},
                                           GradCase{BackendKind::kLstm, Readout::kMean},
                                           GradCase{BackendKind::kTc, Readout::kCenter},
                                           GradCase{BackendKind::kTc, Readout::kMean}));

}  // namespace
}  // namespace asd
