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

#ifndef ASD_EVAL_H_
#define ASD_EVAL_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "asd/annotations.h"

namespace asd {

struct ScoredLabel {
  double score = 0.0;
  int label = 0;
};

struct PrPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

// Non-interpolated AP over one global ranking. Items with equal scores form
// one group whose precision is taken at the group's cumulative recall, so
// the result does not depend on input order. Throws UndefinedMetricError
// without positives.
double average_precision(std::span<const ScoredLabel> items);

// (+inf, 1, 0) followed by one point per distinct score, highest first.
// The step-wise sum over consecutive points reproduces average_precision.
std::vector<PrPoint> pr_curve(std::span<const ScoredLabel> items);

struct EvalReport {
  double mean_ap = 0.0;
  std::int64_t num_items = 0;
  std::int64_t num_positives = 0;
  std::int64_t num_negatives = 0;
  std::vector<ScoredLabel> items;  // ground-truth order
};

// Joins predictions to ground truth on (video_id, timestamp ms, entity_id)
// and pools every row into one AP. Missing predictions raise CoverageError
// naming up to 10 keys; duplicate or unmatched predictions raise
// InputError.
EvalReport evaluate_predictions(const std::vector<AnnotationRecord>& ground_truth,
                                const std::vector<PredictionRecord>& predictions,
                                const LabelMapping& mapping = {});

std::string format_report(const EvalReport& report);
std::string pr_curve_csv(const std::vector<PrPoint>& curve);

}  // namespace asd

#endif  // ASD_EVAL_H_
