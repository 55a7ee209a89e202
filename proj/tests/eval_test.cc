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

#include "asd/eval.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "asd/error.h"
#include "oracles.h"

namespace asd {
namespace {

using Items = std::vector<ScoredLabel>;
using testing::brute_force_ap;

TEST(AveragePrecisionTest, WorkedExample) {
  const Items items{{0.9, 1}, {0.8, 0}, {0.7, 1}};
  EXPECT_NEAR(average_precision(items), 5.0 / 6.0, 1e-15);
}

TEST(AveragePrecisionTest, PerfectRankingIsOne) {
  EXPECT_DOUBLE_EQ(average_precision(Items{{0.9, 1}, {0.8, 1}, {0.3, 0}, {0.1, 0}}), 1.0);
}

TEST(AveragePrecisionTest, SingleTieGroupGivesPositiveFraction) {
  for (int n = 1; n <= 12; ++n) {
    for (int p = 1; p <= n; ++p) {
      Items items;
      for (int i = 0; i < n; ++i) items.push_back({0.5, i < p ? 1 : 0});
      EXPECT_NEAR(average_precision(items), static_cast<double>(p) / n, 1e-15);
    }
  }
}

TEST(AveragePrecisionTest, NoPositivesIsUndefined) {
  EXPECT_THROW(average_precision(Items{{0.3, 0}, {0.2, 0}}), UndefinedMetricError);
  EXPECT_THROW(average_precision(Items{}), UndefinedMetricError);
  EXPECT_THROW(average_precision(Items{{NAN, 1}}), InputError);
}

TEST(AveragePrecisionTest, MatchesBruteForceOnAllSmallLabelPatterns) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 1);
  std::uniform_int_distribution<int> level(0, 2);
  int cases = 0;
  for (int n = 1; n <= 10; ++n) {
    for (int mask = 1; mask < (1 << n); ++mask) {
      for (int tied = 0; tied < 2; ++tied) {
        Items items;
        for (int i = 0; i < n; ++i) {
          items.push_back({tied ? level(rng) / 2.0 : u(rng), (mask >> i) & 1});
        }
        ASSERT_NEAR(average_precision(items), brute_force_ap(items), 1e-9)
            << "n " << n << " mask " << mask << " tied " << tied;
        ++cases;
      }
    }
  }
  EXPECT_GE(cases, 1000);
}

TEST(AveragePrecisionTest, OrderInvariantAndBounded) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> level(0, 4), bit(0, 1);
  for (int trial = 0; trial < 300; ++trial) {
    Items items;
    for (int i = 0; i < 30; ++i) items.push_back({level(rng) / 4.0, bit(rng)});
    items.push_back({0.5, 1});
    const double ap = average_precision(items);
    EXPECT_GE(ap, 0.0);
    EXPECT_LE(ap, 1.0);
    for (int k = 0; k < 5; ++k) {
      std::shuffle(items.begin(), items.end(), rng);
      EXPECT_EQ(average_precision(items), ap);
    }
  }
}

TEST(AveragePrecisionTest, FixingAnAdjacentInversionNeverHurts) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  std::uniform_int_distribution<int> bit(0, 1);
  for (int trial = 0; trial < 500; ++trial) {
    Items items;
    for (int i = 0; i < 15; ++i) items.push_back({u(rng), bit(rng)});
    items.push_back({u(rng), 1});
    std::sort(items.begin(), items.end(),
              [](const auto& a, const auto& b) { return a.score > b.score; });
    for (std::size_t i = 0; i + 1 < items.size(); ++i) {
      if (items[i].label == 0 && items[i + 1].label == 1) {
        Items fixed = items;
        std::swap(fixed[i].score, fixed[i + 1].score);
        EXPECT_GE(average_precision(fixed), average_precision(items) - 1e-15);
      }
    }
  }
}

TEST(AveragePrecisionTest, OneExactlyWhenPositivesOutrankNegatives) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> level(0, 5), bit(0, 1);
  for (int trial = 0; trial < 500; ++trial) {
    Items items;
    for (int i = 0; i < 8; ++i) items.push_back({level(rng) / 5.0, bit(rng)});
    items.push_back({level(rng) / 5.0, 1});
    double min_pos = 2, max_neg = -1;
    for (const auto& it : items) {
      if (it.label) min_pos = std::min(min_pos, it.score);
      else max_neg = std::max(max_neg, it.score);
    }
    EXPECT_EQ(average_precision(items) > 1.0 - 1e-12, min_pos > max_neg);
  }
}

TEST(PrCurveTest, PerfectRankingStaysAtPrecisionOne) {
  const auto curve = pr_curve(Items{{0.9, 1}, {0.7, 1}, {0.4, 0}});
  ASSERT_EQ(curve.size(), 4u);
  EXPECT_TRUE(std::isinf(curve[0].threshold));
  EXPECT_EQ(curve[0].recall, 0.0);
  EXPECT_EQ(curve[1].precision, 1.0);
  EXPECT_EQ(curve[2].precision, 1.0);
  EXPECT_EQ(curve[2].recall, 1.0);
  EXPECT_EQ(curve[3].recall, 1.0);
}

TEST(PrCurveTest, SinglePositiveItem) {
  const auto curve = pr_curve(Items{{0.3, 1}});
  ASSERT_EQ(curve.size(), 2u);
  EXPECT_EQ(curve[1].precision, 1.0);
  EXPECT_EQ(curve[1].recall, 1.0);
  EXPECT_EQ(curve[1].threshold, 0.3);
}

TEST(PrCurveTest, StepSumEqualsAveragePrecision) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> level(0, 9), bit(0, 1);
  for (int trial = 0; trial < 300; ++trial) {
    Items items;
    for (int i = 0; i < 40; ++i) items.push_back({level(rng) / 9.0, bit(rng)});
    items.push_back({0.0, 1});
    const auto curve = pr_curve(items);
    double ap = 0;
    for (std::size_t i = 1; i < curve.size(); ++i) {
      EXPECT_GE(curve[i].recall, curve[i - 1].recall);
      EXPECT_LT(curve[i].threshold, curve[i - 1].threshold);
      EXPECT_GE(curve[i].precision, 0.0);
      EXPECT_LE(curve[i].precision, 1.0);
      ap += (curve[i].recall - curve[i - 1].recall) * curve[i].precision;
    }
    EXPECT_EQ(curve.back().recall, 1.0);
    EXPECT_NEAR(ap, average_precision(items), 1e-12);
  }
}

std::vector<AnnotationRecord> gt_rows(int n, std::mt19937_64& rng, double positive_rate) {
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<AnnotationRecord> rows;
  for (int i = 0; i < n; ++i) {
    AnnotationRecord r;
    r.video_id = "v" + std::to_string(i % 5);
    r.entity_id = r.video_id + "_" + std::to_string(i % 3);
    r.frame_timestamp = 900 + (i / 15) * 0.04;
    r.label = u(rng) < positive_rate ? SpeakingLabel::kSpeakingAudible
                                     : (u(rng) < 0.1 ? SpeakingLabel::kSpeakingNotAudible
                                                     : SpeakingLabel::kNotSpeaking);
    rows.push_back(r);
  }
  return rows;
}

TEST(EvaluateTest, OracleScoresGiveOne) {
  std::mt19937_64 rng(6);
  const auto gt = gt_rows(300, rng, 0.3);
  std::vector<PredictionRecord> preds;
  for (auto it = gt.rbegin(); it != gt.rend(); ++it) {
    preds.push_back({*it, static_cast<double>(binary_label(it->label))});
  }
  const EvalReport r = evaluate_predictions(gt, preds);
  EXPECT_EQ(r.mean_ap, 1.0);
  EXPECT_EQ(r.num_items, 300);
  EXPECT_EQ(r.num_positives + r.num_negatives, 300);
  EXPECT_NE(format_report(r).find("mAP: 1.0000"), std::string::npos);
}

TEST(EvaluateTest, ConstantScoresGivePositiveFraction) {
  std::mt19937_64 rng(7);
  const auto gt = gt_rows(200, rng, 0.4);
  std::vector<PredictionRecord> preds;
  for (const auto& g : gt) preds.push_back({g, 0.5});
  const EvalReport r = evaluate_predictions(gt, preds);
  EXPECT_NEAR(r.mean_ap, static_cast<double>(r.num_positives) / r.num_items, 1e-12);
}

TEST(EvaluateTest, RandomScoresSitNearBaseRate) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<ScoredLabel> items;
  for (int i = 0; i < 10000; ++i) items.push_back({u(rng), u(rng) < 0.3 ? 1 : 0});
  EXPECT_NEAR(average_precision(items), 0.30, 0.02);
}

TEST(EvaluateTest, JoinErrors) {
  std::mt19937_64 rng(9);
  const auto gt = gt_rows(40, rng, 0.5);
  std::vector<PredictionRecord> preds;
  for (const auto& g : gt) preds.push_back({g, 0.5});

  auto missing = preds;
  missing.erase(missing.begin(), missing.begin() + 12);
  try {
    evaluate_predictions(gt, missing);
    ADD_FAILURE();
  } catch (const CoverageError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("12 ground-truth rows"), std::string::npos);
    EXPECT_EQ(std::count(msg.begin(), msg.end(), '['), 10);
  }
  auto duplicated = preds;
  duplicated.push_back(preds[3]);
  EXPECT_THROW(evaluate_predictions(gt, duplicated), InputError);
  auto extra = preds;
  extra.back().row.entity_id = "stranger";
  EXPECT_THROW(evaluate_predictions(gt, extra), InputError);
}

TEST(EvaluateTest, TimestampsMatchAtMillisecondResolution) {
  std::mt19937_64 rng(10);
  const auto gt = gt_rows(30, rng, 0.5);
  std::vector<PredictionRecord> preds;
  for (const auto& g : gt) {
    PredictionRecord p{g, 0.5};
    p.row.frame_timestamp += 1e-7;
    preds.push_back(p);
  }
  EXPECT_NO_THROW(evaluate_predictions(gt, preds));
}

TEST(EvaluateTest, CurveCsvHasHeaderAndRows) {
  const auto csv = pr_curve_csv(pr_curve(Items{{0.9, 1}, {0.8, 0}, {0.7, 1}}));
  EXPECT_EQ(csv, "threshold,precision,recall\ninf,1,0\n0.9,1,0.5\n0.8,0.5,0.5\n0.7,"
                 "0.6666666666666666,1\n");
}

}  // namespace
}  // namespace asd
