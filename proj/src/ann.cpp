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

#include "lnm/classifiers.hpp"
#include "lnm/error.hpp"
#include "lnm/rng.hpp"

namespace lnm {

namespace {

double sigmoid(double v) { return logistic(v); }

std::size_t param_count(const std::vector<int>& layers) {
  std::size_t n = 0;
  for (std::size_t l = 1; l < layers.size(); ++l) n += static_cast<std::size_t>(layers[l]) * (layers[l - 1] + 1);
  return n;
}

void check_layers(const std::vector<int>& layers, std::size_t params) {
  require(layers.size() >= 2 && layers.back() == 1, ErrorCode::kInvalidArgument,
          "network must end in a single unit");
  for (int l : layers) require(l >= 1, ErrorCode::kInvalidArgument, "empty layer");
  require(params == param_count(layers), ErrorCode::kInvalidArgument,
          "parameter vector does not match the layer sizes");
}

}  // namespace

// Layout per layer: weights (out x in, row-major) then biases (out).
std::vector<double> ann_initial_params(const std::vector<int>& layers, std::uint64_t seed) {
  std::vector<double> p(param_count(layers));
  Rng rng(seed);
  std::size_t off = 0;
  for (std::size_t l = 1; l < layers.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layers[l - 1]));
    const std::size_t n = static_cast<std::size_t>(layers[l]) * (layers[l - 1] + 1);
    for (std::size_t k = 0; k < n; ++k) p[off + k] = draw_uniform(rng, -bound, bound);
    off += n;
  }
  return p;
}

double ann_forward(const std::vector<int>& layers, std::span<const double> params,
                   std::span<const double> x) {
  check_layers(layers, params.size());
  require(x.size() == static_cast<std::size_t>(layers[0]), ErrorCode::kInvalidArgument,
          "input width does not match the network");
  std::vector<double> a(x.begin(), x.end()), next;
  std::size_t off = 0;
  for (std::size_t l = 1; l < layers.size(); ++l) {
    const int in = layers[l - 1], out = layers[l];
    next.assign(out, 0.0);
    const double* W = params.data() + off;
    const double* b = W + static_cast<std::size_t>(out) * in;
    for (int o = 0; o < out; ++o) {
      double s = b[o];
      for (int i = 0; i < in; ++i) s += W[o * in + i] * a[i];
      next[o] = sigmoid(s);
    }
    off += static_cast<std::size_t>(out) * (in + 1);
    a.swap(next);
  }
  return a[0];
}

double ann_loss(const std::vector<int>& layers, std::span<const double> params, const Matrix& x,
                std::span<const int> y, std::vector<double>* grad) {
  check_layers(layers, params.size());
  require(x.cols() == static_cast<std::size_t>(layers[0]) && x.rows() == y.size() && x.rows() > 0,
          ErrorCode::kInvalidArgument, "batch shape does not match the network");
  const std::size_t L = layers.size() - 1, N = x.rows();
  std::vector<std::size_t> offs(L);
  for (std::size_t l = 0, off = 0; l < L; ++l) {
    offs[l] = off;
    off += static_cast<std::size_t>(layers[l + 1]) * (layers[l] + 1);
  }
  if (grad) grad->assign(params.size(), 0.0);

  // acts[l] holds the activations entering layer l (acts[0] = input row).
  std::vector<std::vector<double>> acts(L + 1);
  std::vector<double> delta, prev_delta;
  double loss = 0.0;
  for (std::size_t r = 0; r < N; ++r) {
    acts[0].assign(x.row(r).begin(), x.row(r).end());
    for (std::size_t l = 0; l < L; ++l) {
      const int in = layers[l], out = layers[l + 1];
      const double* W = params.data() + offs[l];
      const double* b = W + static_cast<std::size_t>(out) * in;
      auto& nxt = acts[l + 1];
      nxt.resize(out);
      for (int o = 0; o < out; ++o) {
        double s = b[o];
        const double* w = W + static_cast<std::size_t>(o) * in;
        for (int i = 0; i < in; ++i) s += w[i] * acts[l][i];
        nxt[o] = sigmoid(s);
      }
    }
    const double out = acts[L][0];
    const double err = out - y[r];
    loss += err * err;
    if (!grad) continue;
    // d(loss)/d(pre-activation) of the output unit.
    delta.assign(1, err * out * (1.0 - out));
    for (std::size_t l = L; l-- > 0;) {
      const int in = layers[l], outw = layers[l + 1];
      const double* W = params.data() + offs[l];
      double* gW = grad->data() + offs[l];
      double* gb = gW + static_cast<std::size_t>(outw) * in;
      for (int o = 0; o < outw; ++o) {
        const double d = delta[o];
        double* g = gW + static_cast<std::size_t>(o) * in;
        for (int i = 0; i < in; ++i) g[i] += d * acts[l][i];
        gb[o] += d;
      }
      if (l == 0) break;
      prev_delta.assign(in, 0.0);
      for (int o = 0; o < outw; ++o) {
        const double* w = W + static_cast<std::size_t>(o) * in;
        for (int i = 0; i < in; ++i) prev_delta[i] += w[i] * delta[o];
      }
      for (int i = 0; i < in; ++i) prev_delta[i] *= acts[l][i] * (1.0 - acts[l][i]);
      delta.swap(prev_delta);
    }
  }
  return 0.5 * loss;
}

TrainedModel fit_bp_ann(const TrainingSet& ts, const AnnParams& hp, std::uint64_t seed) {
  ts.validate();
  require(hp.hidden1 >= 1 && hp.hidden2 >= 1 && hp.epochs >= 0 && hp.learn_rate > 0,
          ErrorCode::kInvalidArgument, "invalid network hyperparameters");
  TrainedModel m;
  m.hyper.kind = ModelKind::kAnn;
  m.hyper.ann = hp;
  m.seed = seed;
  m.feature_count = ts.features();
  m.standardization = Standardization::fit(ts.x);
  const Matrix z = m.standardization.apply(ts.x);
  m.ann.layers = {static_cast<int>(ts.features()), hp.hidden1, hp.hidden2, 1};
  m.ann.params = ann_initial_params(m.ann.layers, seed);
  std::vector<double> grad;
  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    const double loss = ann_loss(m.ann.layers, m.ann.params, z, ts.y, &grad);
    require(std::isfinite(loss), ErrorCode::kDivergence,
            "network loss is not finite at epoch " + std::to_string(epoch));
    m.ann.loss_trace.push_back(loss);
    for (std::size_t k = 0; k < grad.size(); ++k) m.ann.params[k] -= hp.learn_rate * grad[k];
  }
  m.ann.loss_trace.push_back(ann_loss(m.ann.layers, m.ann.params, z, ts.y, nullptr));
  return m;
}

}  // namespace lnm
