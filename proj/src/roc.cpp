//  Copyright 2026 The lnm Authors
//
//  Licensed under the Apache License, Version 2.0 (the "License");
//  you may not use this file except in compliance with the License.
//  You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
//  Unless required by applicable law or agreed to in writing, software
//  distributed under the License is distributed on an "AS IS" BASIS,
//  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//  See the License for the specific language governing permissions and
//  limitations under the License.
//

#include "lnm/roc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "lnm/error.hpp"

namespace lnm {

RocCurve roc_curve(std::span<const double> scores, std::span<const int> labels) {
  require(scores.size() == labels.size(), ErrorCode::kInvalidArgument,
          "scores and labels differ in length");
  RocCurve c;
  for (std::size_t n = 0; n < labels.size(); ++n) {
    require(labels[n] == 0 || labels[n] == 1, ErrorCode::kInvalidArgument, "labels must be 0/1");
    require(std::isfinite(scores[n]), ErrorCode::kInvalidArgument, "non-finite score");
    (labels[n] ? c.positives : c.negatives) += 1;
  }
  require(c.positives > 0 && c.negatives > 0, ErrorCode::kDegenerateLabels,
          "ROC needs both classes");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  c.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  std::size_t tp = 0, fp = 0;
  const double P = static_cast<double>(c.positives), N = static_cast<double>(c.negatives);
  for (std::size_t n = 0; n < order.size();) {
    const double t = scores[order[n]];
    for (; n < order.size() && scores[order[n]] == t; ++n) (labels[order[n]] ? tp : fp) += 1;
    c.points.push_back({fp / N, tp / P, t});
  }
  return c;
}

double auc(const RocCurve& curve) {
  double area = 0.0;
  for (std::size_t n = 1; n < curve.points.size(); ++n) {
    const auto& a = curve.points[n - 1];
    const auto& b = curve.points[n];
    area += (b.fpr - a.fpr) * (a.tpr + b.tpr) * 0.5;
  }
  return area;
}

double auc(std::span<const double> scores, std::span<const int> labels) {
  return auc(roc_curve(scores, labels));
}

CutPoint optimal_cut_point(const RocCurve& curve) {
  require(!curve.points.empty(), ErrorCode::kInvalidArgument, "empty ROC curve");
  // With known class sizes the squared distance is compared exactly as
  // fp^2 P^2 + fn^2 N^2, so geometric ties really tie.
  const bool counted = curve.positives > 0 && curve.negatives > 0;
  const auto P = static_cast<unsigned __int128>(curve.positives);
  const auto N = static_cast<unsigned __int128>(curve.negatives);
  auto exact = [&](const RocPoint& p) {
    const auto fp = static_cast<unsigned __int128>(std::llround(p.fpr * curve.negatives));
    const auto fn = static_cast<unsigned __int128>(std::llround((1.0 - p.tpr) * curve.positives));
    return fp * fp * P * P + fn * fn * N * N;
  };
  const RocPoint* best = nullptr;
  double best_d2 = 0.0;
  unsigned __int128 best_exact = 0;
  for (const auto& p : curve.points) {
    const double d2 = p.fpr * p.fpr + (1.0 - p.tpr) * (1.0 - p.tpr);
    const unsigned __int128 e = counted ? exact(p) : 0;
    const bool less = counted ? e < best_exact : d2 < best_d2;
    const bool tie = counted ? e == best_exact : d2 == best_d2;
    const bool better = !best || less ||
                        (tie && (p.tpr > best->tpr || (p.tpr == best->tpr && p.fpr < best->fpr)));
    if (better) {
      best = &p;
      best_d2 = d2;
      best_exact = e;
    }
  }
  return {best->threshold, 100.0 * best->tpr, 100.0 * (1.0 - best->fpr), std::sqrt(best_d2)};
}

double Confusion::sen() const { return tp + fn ? 100.0 * tp / double(tp + fn) : 0.0; }
double Confusion::spc() const { return tn + fp ? 100.0 * tn / double(tn + fp) : 0.0; }
double Confusion::acc() const {
  const auto n = tp + tn + fp + fn;
  return n ? 100.0 * (tp + tn) / double(n) : 0.0;
}

Confusion confusion_at(std::span<const double> scores, std::span<const int> labels,
                       double threshold) {
  require(scores.size() == labels.size(), ErrorCode::kInvalidArgument,
          "scores and labels differ in length");
  Confusion c;
  for (std::size_t n = 0; n < scores.size(); ++n) {
    const bool called = scores[n] >= threshold;
    if (labels[n])
      (called ? c.tp : c.fn) += 1;
    else
      (called ? c.fp : c.tn) += 1;
  }
  return c;
}

}  // namespace lnm
