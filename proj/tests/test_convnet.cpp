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

#include <doctest.h>

#include <cmath>
#include <algorithm>
#include <limits>

#include "lnm/classifiers.hpp"
#include "lnm/convnet.hpp"
#include "lnm/error.hpp"

using namespace lnm;

namespace {

PatchStack random_stack(Rng& rng) {
  PatchStack s;
  s.values.resize(kPatchValues);
  for (auto& v : s.values) v = static_cast<float>(draw_uniform(rng, -1.0, 1.0));
  return s;
}

struct Toy {
  std::vector<PatchStack> stacks;
  std::vector<int> labels;
};

Toy toy_set(std::uint64_t seed, int n = 8) {
  Rng rng(seed);
  Toy t;
  for (int i = 0; i < n; ++i) {
    t.stacks.push_back(random_stack(rng));
    t.labels.push_back(i % 2);
  }
  return t;
}

int correct(const CnnModel& m, const Toy& t) {
  int ok = 0;
  for (std::size_t i = 0; i < t.stacks.size(); ++i)
    ok += cnn_forward(m, t.stacks[i]).predicted() == t.labels[i];
  return ok;
}

}  // namespace

TEST_CASE("architecture shapes and initialization") {
  const auto m = build_cnn(1);
  CHECK(m.arch.conv_output_size(0) == 47);
  CHECK(m.arch.pooled_size(0) == 23);
  CHECK(m.arch.pooled_size(1) == 10);
  CHECK(m.arch.pooled_size(2) == 4);
  CHECK(m.arch.flat_inputs() == 1024);
  CHECK(m.arch.hidden == 512);
  // 6*32*25+32 + 32*64*9+64 + 64*64*9+64 + 1024*512+512 + 512*2+2
  CHECK(m.parameter_count() == 586082);
  CHECK(m.params.size() == 586082);

  const auto again = build_cnn(1);
  CHECK(again.params == m.params);
  CHECK(build_cnn(2).params != m.params);

  const auto t = m.tensors();
  CHECK(t.size() == 10);
  for (const auto& s : t) {
    if (s.bias) {
      for (std::size_t n = s.offset; n < s.offset + s.size; ++n) CHECK(m.params[n] == 0.0);
    }
  }
  const double bound = 1.0 / std::sqrt(150.0);
  for (std::size_t n = 0; n < t[0].size; ++n) CHECK(std::abs(m.params[n]) <= bound);
}

TEST_CASE("forward: softmax normalization, symmetry, shift invariance, faults") {
  const auto m = build_cnn(3);
  Rng rng(4);
  for (int i = 0; i < 5; ++i) {
    const auto out = cnn_forward(m, random_stack(rng));
    CHECK(out.probs[0] >= 0.0);
    CHECK(out.probs[1] >= 0.0);
    CHECK(std::abs(out.probs[0] + out.probs[1] - 1.0) <= 1e-9);
    CHECK(out.predicted() == (out.logits[1] > out.logits[0] ? 1 : 0));
  }
  PatchStack zero;
  zero.values.assign(kPatchValues, 0.0f);
  const auto z = cnn_forward(m, zero);
  CHECK(z.logits[0] == z.logits[1]);
  CHECK(z.probs[0] == 0.5);
  CHECK(z.probs[1] == 0.5);

  for (double c : {-700.0, -3.0, 0.25, 1e3}) {
    const auto a = softmax({0.3, -1.2});
    const auto b = softmax({0.3 + c, -1.2 + c});
    CHECK(std::abs(a[0] - b[0]) <= 1e-12);
    CHECK(std::abs(a[0] + a[1] - 1.0) <= 1e-12);
  }
  CHECK(softmax({800.0, -800.0})[0] == 1.0);

  auto bad = zero;
  bad.values[7] = std::numeric_limits<float>::quiet_NaN();
  try {
    cnn_forward(m, bad);
    FAIL("expected a numeric fault");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNumericFault);
    CHECK(std::string(e.what()).find("conv1") != std::string::npos);
  }
  std::vector<double> short_input(10, 0.0);
  CHECK_THROWS_AS(cnn_forward(m, short_input), Error);
}

TEST_CASE("flatten features: width, range, determinism, dropout does not leak") {
  const auto m = build_cnn(5);
  Rng rng(6);
  const auto s = random_stack(rng);
  const auto f = flatten_features(m, s);
  CHECK(f.size() == kFlattenWidth);
  for (double v : f) CHECK(v >= 0.0);
  CHECK(flatten_features(m, s) == f);
  Rng drop(1);
  const auto train_out = cnn_forward(m, s, true, &drop);
  CHECK(train_out.flatten == f);

  // The 512-wide vectors feed the classical pipeline directly.
  const auto toy = toy_set(7, 10);
  TrainingSet ts;
  ts.x = Matrix(toy.stacks.size(), kFlattenWidth);
  for (std::size_t i = 0; i < toy.stacks.size(); ++i) {
    const auto v = flatten_features(m, toy.stacks[i]);
    std::copy(v.begin(), v.end(), ts.x.row(i).begin());
    ts.y.push_back(toy.labels[i]);
  }
  RfParams rf;
  rf.n_trees = 5;
  const auto model = fit_random_forest(ts, rf, 1);
  CHECK(model.feature_count == 512);
  const auto sc = model.score(ts.x.row(0));
  CHECK((sc >= 0.0 && sc <= 1.0));
}

TEST_CASE("gradient check on the full network, with a fault-injected control") {
  for (std::uint64_t seed : {1u, 3u}) {
    const auto m = build_cnn(seed);
    Rng rng(seed + 10);
    const auto s = random_stack(rng);
    const auto ok = gradient_check(m, s, static_cast<int>(seed % 2), 12, seed);
    CHECK(std::isfinite(ok.loss));
    CHECK(ok.parameters_checked >= 100);
    CHECK(ok.max_relative_error < 1e-3);
    const auto bad = gradient_check(m, s, static_cast<int>(seed % 2), 12, seed, true);
    CHECK(bad.max_relative_error > 1e-1);
    CHECK(bad.worst_tensor.find(".b") != std::string::npos);
  }
}

TEST_CASE("training: null update, one plain gradient step, weight decay only") {
  auto m = build_cnn(8);
  m.dropout = 0.0;
  const auto toy = toy_set(9, 4);
  const auto data = CnnDataset::from_stacks(toy.stacks, toy.labels);

  TrainSchedule zero;
  zero.eta0 = 0.0;
  zero.eta_r = 0.0;
  zero.batch_size = 4;
  zero.epochs = 3;
  zero.reactivation_epochs = 0;
  const auto r0 = train_cnn(m, data, zero);
  CHECK(r0.model.params == m.params);
  REQUIRE(r0.trace.size() == 3);
  for (const auto& rec : r0.trace) CHECK(rec.loss == r0.trace.front().loss);

  TrainSchedule one;
  one.eta0 = 0.05;
  one.momentum = 0.0;
  one.batch_size = 4;
  one.epochs = 1;
  one.reactivation_epochs = 0;
  const auto r1 = train_cnn(m, data, one);
  std::vector<std::vector<double>> inputs;
  for (const auto& s : toy.stacks) inputs.push_back(stack_input(s));
  std::vector<double> grad;
  cnn_batch_loss(m, inputs, toy.labels, false, nullptr, &grad);
  std::vector<double> expect = m.params;
  for (std::size_t k = 0; k < expect.size(); ++k) expect[k] -= 0.05 * grad[k];
  CHECK(r1.model.params == expect);

  TrainSchedule decay;
  decay.eta0 = 0.5;
  decay.gamma = 1.0;
  decay.batch_size = 2;
  decay.epochs = 3;
  decay.reactivation_epochs = 0;
  decay.data_loss_weight = 0.0;
  auto wd = build_cnn(8);
  wd.weight_decay = 0.01;
  std::vector<double> prev = wd.params;
  bool monotone = true, biases_fixed = true;
  const auto tensors = wd.tensors();
  train_cnn(wd, data, decay, [&](const CnnModel& cur, std::int64_t) {
    for (const auto& t : tensors)
      for (std::size_t n = t.offset; n < t.offset + t.size; ++n) {
        if (t.bias)
          biases_fixed = biases_fixed && cur.params[n] == prev[n];
        else
          monotone = monotone && std::abs(cur.params[n]) <= std::abs(prev[n]);
      }
    prev = cur.params;
    return false;
  });
  CHECK(monotone);
  CHECK(biases_fixed);
  CHECK(prev != wd.params);
}

TEST_CASE("toy set is fit within 500 iterations at elevated rates") {
  const auto toy = toy_set(11);
  const auto data = CnnDataset::from_stacks(toy.stacks, toy.labels);
  TrainSchedule s;
  s.eta0 = 1e-2;
  s.gamma = 0.995;
  s.eta_r = 1e-2;
  s.gamma_r = 0.995;
  s.batch_size = 8;
  s.epochs = 500;
  s.max_iterations = 500;
  s.seed = 3;
  const auto init = build_cnn(12);
  const int before = correct(init, toy);
  const auto r = train_cnn(init, data, s, [&](const CnnModel& m, std::int64_t) {
    return correct(m, toy) == 8;
  });
  CHECK(r.stopped_by_observer);
  CHECK(r.trace.size() <= 500);
  CHECK(correct(r.model, toy) == 8);
  MESSAGE("toy fit after " << r.trace.size() << " iterations (from " << before << "/8)");

  // Deterministic replay.
  const auto again = train_cnn(init, data, s, [&](const CnnModel& m, std::int64_t) {
    return correct(m, toy) == 8;
  });
  CHECK(again.model.params == r.model.params);
}

TEST_CASE("reactivation continues from the phase-1 parameters") {
  auto m = build_cnn(13);
  m.dropout = 0.0;  // full-batch losses are then directly comparable
  const auto toy = toy_set(14, 4);
  const auto data = CnnDataset::from_stacks(toy.stacks, toy.labels);
  TrainSchedule s;
  s.eta0 = 5e-3;
  s.gamma = 0.9;
  s.eta_r = 2e-3;
  s.gamma_r = 0.95;
  s.batch_size = 4;
  s.epochs = 4;
  s.reactivation_epochs = 4;
  s.seed = 5;
  const auto full = train_cnn(m, data, s);
  CHECK(full.phase1_iterations == 4);
  REQUIRE(full.trace.size() == 8);
  CHECK(full.trace[3].phase == 1);
  CHECK(full.trace[4].phase == 2);
  CHECK(full.trace[4].learning_rate == 2e-3);
  CHECK(full.trace[1].learning_rate == 5e-3 * 0.9);

  auto phase1_only = s;
  phase1_only.reactivation_epochs = 0;
  const auto p1 = train_cnn(m, data, phase1_only);
  CHECK(p1.model.params == full.phase1_params);
  CHECK(full.model.params != full.phase1_params);
  CHECK(full.trace.back().loss < full.trace.front().loss);

  const auto csv = loss_trace_csv(full.trace);
  CHECK(csv.rfind("iteration,phase,learning_rate,loss\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 9);
}

TEST_CASE("divergence and schedule validation") {
  const auto toy = toy_set(15, 2);
  const auto data = CnnDataset::from_stacks(toy.stacks, toy.labels);
  TrainSchedule s;
  s.eta0 = 1e200;
  s.gamma = 1.0;
  s.batch_size = 2;
  s.epochs = 5;
  try {
    train_cnn(build_cnn(1), data, s);
    FAIL("expected divergence");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDivergence);
    CHECK(std::string(e.what()).find("iteration") != std::string::npos);
  }
  TrainSchedule bad;
  bad.momentum = 1.5;
  CHECK_THROWS_AS(train_cnn(build_cnn(1), data, bad), Error);
}

TEST_CASE("checkpoint round-trip") {
  auto m = build_cnn(21);
  m.dropout = 0.25;
  const auto bytes = serialize_cnn(m);
  const auto back = deserialize_cnn(bytes);
  CHECK(back.params == m.params);
  CHECK(back.arch == m.arch);
  CHECK(back.dropout == 0.25);
  CHECK(serialize_cnn(back) == bytes);
  auto cut = bytes;
  cut.resize(cut.size() - 8);
  CHECK_THROWS_AS(deserialize_cnn(cut), Error);
}
