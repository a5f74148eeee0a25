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

#pragma once

#include <span>
#include <vector>

namespace lnm {

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  // Scores >= threshold are called malignant; the first point uses +infinity.
  double threshold = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

// One vertex per distinct score, in decreasing threshold order, after the
// (0,0) vertex at +infinity. Tied scores form a single step.
RocCurve roc_curve(std::span<const double> scores, std::span<const int> labels);

// Trapezoidal area; equals the Mann-Whitney statistic with half credit for ties.
double auc(const RocCurve& curve);
double auc(std::span<const double> scores, std::span<const int> labels);

struct CutPoint {
  double threshold = 0.0;
  double sen = 0.0;  // percent
  double spc = 0.0;  // percent
  double distance = 0.0;
};

// Vertex closest to (0, 1); ties prefer higher sensitivity, then lower FPR.
CutPoint optimal_cut_point(const RocCurve& curve);

struct Confusion {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

  double sen() const;  // percent
  double spc() const;
  double acc() const;
};

Confusion confusion_at(std::span<const double> scores, std::span<const int> labels,
                       double threshold);

}  // namespace lnm
