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

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lnm/classifiers.hpp"
#include "lnm/error.hpp"

namespace lnm {

namespace {

constexpr double kErrorFloor = 1e-10;

}  // namespace

// Discrete AdaBoost over depth-1 stumps with a shrunken stump weight.
TrainedModel fit_adaboost(const TrainingSet& ts, const AdaBoostParams& hp) {
  ts.validate();
  require(hp.n_stumps >= 1 && hp.learn_rate > 0, ErrorCode::kInvalidArgument,
          "AdaBoost needs at least one round and a positive rate");
  const std::size_t N = ts.size(), F = ts.features();
  TrainedModel m;
  m.hyper.kind = ModelKind::kAdaBoost;
  m.hyper.ada = hp;
  m.feature_count = F;

  std::vector<std::vector<std::size_t>> order(F, std::vector<std::size_t>(N));
  for (std::size_t f = 0; f < F; ++f) {
    std::iota(order[f].begin(), order[f].end(), 0);
    std::stable_sort(order[f].begin(), order[f].end(),
                     [&](std::size_t a, std::size_t b) { return ts.x(a, f) < ts.x(b, f); });
  }
  std::vector<double> y(N), w(N, 1.0 / N), margin(N, 0.0);
  for (std::size_t i = 0; i < N; ++i) y[i] = ts.y[i] ? 1.0 : -1.0;

  for (int round = 0; round < hp.n_stumps; ++round) {
    double w_neg = 0.0;
    for (std::size_t i = 0; i < N; ++i)
      if (y[i] < 0) w_neg += w[i];
    Stump best;
    double best_err = 2.0;
    for (std::size_t f = 0; f < F; ++f) {
      // err_plus: error of "x > t votes malignant" with the first k+1 sorted samples left.
      double err_plus = w_neg;
      const auto& o = order[f];
      for (std::size_t k = 0; k + 1 < N; ++k) {
        err_plus += y[o[k]] > 0 ? w[o[k]] : -w[o[k]];
        const double a = ts.x(o[k], f), b = ts.x(o[k + 1], f);
        if (a == b) continue;
        const double err_minus = 1.0 - err_plus;
        const double err = std::min(err_plus, err_minus);
        if (err < best_err) {
          best_err = err;
          double t = 0.5 * (a + b);
          if (!(t < b)) t = a;
          best.feature = static_cast<std::int32_t>(f);
          best.threshold = t;
          best.polarity = err_plus <= err_minus ? 1 : -1;
        }
      }
    }
    if (best_err >= 0.5) break;
    // Recompute the chosen stump's error directly to avoid drift in the running sums.
    double err = 0.0;
    std::vector<double> h(N);
    for (std::size_t i = 0; i < N; ++i) {
      h[i] = (ts.x(i, best.feature) > best.threshold ? 1.0 : -1.0) * best.polarity;
      if (h[i] != y[i]) err += w[i];
    }
    if (err >= 0.5) break;
    best.error = err;
    const double e = std::max(err, kErrorFloor);
    best.alpha = hp.learn_rate * 0.5 * std::log((1.0 - e) / e);
    double total = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      w[i] *= std::exp(-best.alpha * y[i] * h[i]);
      total += w[i];
      margin[i] += best.alpha * h[i];
    }
    for (auto& v : w) v /= total;
    double loss = 0.0;
    for (std::size_t i = 0; i < N; ++i) loss += std::exp(-y[i] * margin[i]);
    m.boost.exp_loss.push_back(loss / N);
    m.boost.stumps.push_back(best);
  }
  return m;
}

}  // namespace lnm
