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
#include <limits>

#include "lnm/classifiers.hpp"
#include "lnm/error.hpp"

namespace lnm {

namespace {

constexpr double kTau = 1e-12;

}  // namespace

// SMO with second-order working-set selection (the libsvm scheme, without
// shrinking). Stops when the maximal KKT violation falls below tolerance.
TrainedModel fit_svm_rbf(const TrainingSet& ts, const SvmParams& hp) {
  ts.validate();
  require(hp.sigma > 0 && hp.c > 0 && hp.tolerance > 0, ErrorCode::kInvalidArgument,
          "SVM needs positive sigma, C and tolerance");
  const std::size_t N = ts.size();
  TrainedModel m;
  m.hyper.kind = ModelKind::kSvm;
  m.hyper.svm = hp;
  m.feature_count = ts.features();
  m.standardization = Standardization::fit(ts.x);
  const Matrix z = m.standardization.apply(ts.x);

  std::vector<double> y(N);
  for (std::size_t i = 0; i < N; ++i) y[i] = ts.y[i] ? 1.0 : -1.0;
  std::vector<double> K(N * N);
  for (std::size_t i = 0; i < N; ++i) {
    K[i * N + i] = 1.0;
    for (std::size_t j = 0; j < i; ++j)
      K[i * N + j] = K[j * N + i] = rbf_kernel(z.row(i), z.row(j), hp.sigma);
  }
  auto Q = [&](std::size_t i, std::size_t j) { return y[i] * y[j] * K[i * N + j]; };

  const double C = hp.c;
  std::vector<double> alpha(N, 0.0), G(N, -1.0);
  std::int64_t iter = 0;
  for (;; ++iter) {
    double gmax = -std::numeric_limits<double>::infinity();
    std::ptrdiff_t i = -1;
    for (std::size_t t = 0; t < N; ++t) {
      const bool up = y[t] > 0 ? alpha[t] < C : alpha[t] > 0;
      if (up && -y[t] * G[t] >= gmax) {
        gmax = -y[t] * G[t];
        i = static_cast<std::ptrdiff_t>(t);
      }
    }
    double gmax2 = -std::numeric_limits<double>::infinity();
    double obj_min = std::numeric_limits<double>::infinity();
    std::ptrdiff_t j = -1;
    for (std::size_t t = 0; t < N; ++t) {
      const bool low = y[t] > 0 ? alpha[t] > 0 : alpha[t] < C;
      if (!low) continue;
      const double v = y[t] * G[t];
      gmax2 = std::max(gmax2, v);
      const double grad_diff = gmax + v;
      if (i >= 0 && grad_diff > 0) {
        // K_ii + K_tt - 2 K_it, with unit diagonal.
        double quad = 2.0 - 2.0 * K[i * N + t];
        if (quad <= 0) quad = kTau;
        const double obj = -(grad_diff * grad_diff) / quad;
        if (obj <= obj_min) {
          obj_min = obj;
          j = static_cast<std::ptrdiff_t>(t);
        }
      }
    }
    if (i < 0 || j < 0 || gmax + gmax2 < hp.tolerance) break;
    require(iter < hp.max_iterations, ErrorCode::kConvergence,
            "SMO did not converge after " + std::to_string(iter) + " iterations");

    const double ai = alpha[i], aj = alpha[j];
    if (y[i] != y[j]) {
      double quad = 2.0 - 2.0 * K[i * N + j];
      if (quad <= 0) quad = kTau;
      const double delta = (-G[i] - G[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0) {
        if (alpha[j] < 0) {
          alpha[j] = 0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = -diff;
      }
      if (diff > 0) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = C - diff;
        }
      } else if (alpha[j] > C) {
        alpha[j] = C;
        alpha[i] = C + diff;
      }
    } else {
      double quad = 2.0 - 2.0 * K[i * N + j];
      if (quad <= 0) quad = kTau;
      const double delta = (G[i] - G[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > C) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = sum - C;
        }
      } else if (alpha[j] < 0) {
        alpha[j] = 0;
        alpha[i] = sum;
      }
      if (sum > C) {
        if (alpha[j] > C) {
          alpha[j] = C;
          alpha[i] = sum - C;
        }
      } else if (alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = sum;
      }
    }
    const double di = alpha[i] - ai, dj = alpha[j] - aj;
    for (std::size_t t = 0; t < N; ++t) G[t] += Q(t, i) * di + Q(t, j) * dj;
  }

  // Bias from free vectors, or the midpoint of the feasible interval.
  double ub = std::numeric_limits<double>::infinity(), lb = -ub, sum = 0.0;
  int nfree = 0;
  for (std::size_t t = 0; t < N; ++t) {
    const double yg = y[t] * G[t];
    if (alpha[t] >= C) {
      if (y[t] < 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (alpha[t] <= 0) {
      if (y[t] > 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++nfree;
      sum += yg;
    }
  }
  const double rho = nfree > 0 ? sum / nfree : 0.5 * (ub + lb);

  std::vector<std::size_t> sv;
  for (std::size_t t = 0; t < N; ++t)
    if (alpha[t] > 0) {
      sv.push_back(t);
      m.svm.coef.push_back(alpha[t] * y[t]);
    }
  m.svm.support = z.select_rows(sv);
  m.svm.bias = -rho;
  m.svm.iterations = iter;
  return m;
}

}  // namespace lnm
