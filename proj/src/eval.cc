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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <unordered_map>

#include "asd/error.h"

namespace asd {

namespace {

std::vector<ScoredLabel> sorted_items(std::span<const ScoredLabel> items) {
  std::vector<ScoredLabel> v(items.begin(), items.end());
  for (const auto& it : v) {
    if (!std::isfinite(it.score)) throw InputError("non-finite score");
    if (it.label != 0 && it.label != 1) throw InputError("labels must be 0 or 1");
  }
  std::sort(v.begin(), v.end(),
            [](const ScoredLabel& a, const ScoredLabel& b) { return a.score > b.score; });
  return v;
}

}  // namespace

std::vector<PrPoint> pr_curve(std::span<const ScoredLabel> items) {
  const auto v = sorted_items(items);
  std::int64_t positives = 0;
  for (const auto& it : v) positives += it.label;
  if (positives == 0) throw UndefinedMetricError("average precision needs at least one positive");
  std::vector<PrPoint> curve{{std::numeric_limits<double>::infinity(), 1.0, 0.0}};
  std::int64_t tp = 0;
  for (std::size_t i = 0; i < v.size();) {
    std::size_t j = i;
    while (j < v.size() && v[j].score == v[i].score) tp += v[j++].label;
    curve.push_back({v[i].score, static_cast<double>(tp) / static_cast<double>(j),
                     static_cast<double>(tp) / static_cast<double>(positives)});
    i = j;
  }
  return curve;
}

double average_precision(std::span<const ScoredLabel> items) {
  const auto curve = pr_curve(items);
  double ap = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    ap += (curve[i].recall - curve[i - 1].recall) * curve[i].precision;
  }
  return std::clamp(ap, 0.0, 1.0);
}

EvalReport evaluate_predictions(const std::vector<AnnotationRecord>& ground_truth,
                                const std::vector<PredictionRecord>& predictions,
                                const LabelMapping& mapping) {
  std::unordered_map<FrameKey, std::size_t, FrameKeyHash> gt_index;
  for (std::size_t i = 0; i < ground_truth.size(); ++i) {
    if (!gt_index.emplace(frame_key(ground_truth[i]), i).second) {
      throw InputError("duplicate ground-truth key " + frame_key(ground_truth[i]).to_string());
    }
  }
  std::vector<double> score(ground_truth.size());
  std::vector<bool> seen(ground_truth.size(), false);
  for (const auto& p : predictions) {
    const FrameKey key = frame_key(p.row);
    auto it = gt_index.find(key);
    if (it == gt_index.end()) {
      throw InputError("prediction " + key.to_string() + " has no ground-truth row");
    }
    if (seen[it->second]) throw InputError("duplicate prediction for " + key.to_string());
    seen[it->second] = true;
    score[it->second] = p.score;
  }
  std::vector<std::string> missing;
  std::size_t missing_count = 0;
  for (std::size_t i = 0; i < ground_truth.size(); ++i) {
    if (seen[i]) continue;
    ++missing_count;
    if (missing.size() < 10) missing.push_back(frame_key(ground_truth[i]).to_string());
  }
  if (missing_count > 0) {
    std::string msg = std::to_string(missing_count) + " ground-truth rows lack predictions:";
    for (const auto& m : missing) msg += " [" + m + "]";
    if (missing_count > missing.size()) msg += " ...";
    throw CoverageError(msg);
  }
  EvalReport report;
  for (std::size_t i = 0; i < ground_truth.size(); ++i) {
    const int label = binary_label(ground_truth[i].label, mapping);
    report.items.push_back({score[i], label});
    report.num_positives += label;
  }
  report.num_items = static_cast<std::int64_t>(report.items.size());
  report.num_negatives = report.num_items - report.num_positives;
  report.mean_ap = average_precision(report.items);
  return report;
}

std::string format_report(const EvalReport& report) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "mAP: %.4f\nitems: %lld\npositives: %lld\nnegatives: %lld\n", report.mean_ap,
                static_cast<long long>(report.num_items),
                static_cast<long long>(report.num_positives),
                static_cast<long long>(report.num_negatives));
  return buf;
}

std::string pr_curve_csv(const std::vector<PrPoint>& curve) {
  std::string out = "threshold,precision,recall\n";
  for (const auto& p : curve) {
    out += (std::isinf(p.threshold) ? std::string("inf") : format_number(p.threshold)) + "," +
           format_number(p.precision) + "," + format_number(p.recall) + "\n";
  }
  return out;
}

}  // namespace asd
