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

#include "lnm/classifiers.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "lnm/binary_io.hpp"
#include "lnm/error.hpp"
#include "lnm/rng.hpp"
#include "lnm/roc.hpp"

namespace lnm {

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t cols = rows.empty() ? 0 : rows.front().size();
  Matrix m(rows.size(), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    require(rows[r].size() == cols, ErrorCode::kInvalidArgument, "ragged matrix rows");
    std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
  }
  return m;
}

Matrix Matrix::select_rows(std::span<const std::size_t> rows) const {
  Matrix m(rows.size(), cols_);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    require(rows[r] < rows_, ErrorCode::kOutOfBounds, "row index out of range");
    std::copy_n(data_.begin() + rows[r] * cols_, cols_, m.row(r).begin());
  }
  return m;
}

Matrix Matrix::select_cols(std::span<const std::size_t> cols) const {
  Matrix m(rows_, cols.size());
  for (std::size_t c : cols) require(c < cols_, ErrorCode::kOutOfBounds, "column out of range");
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols.size(); ++c) m(r, c) = (*this)(r, cols[c]);
  return m;
}

Standardization Standardization::fit(const Matrix& x) {
  require(x.rows() > 0, ErrorCode::kInvalidArgument, "standardizing an empty matrix");
  Standardization s;
  s.mean.assign(x.cols(), 0.0);
  s.scale.assign(x.cols(), 0.0);
  const double n = static_cast<double>(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) s.mean[c] += x(r, c);
  for (auto& m : s.mean) m /= n;
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) {
      const double d = x(r, c) - s.mean[c];
      s.scale[c] += d * d;
    }
  for (auto& v : s.scale) {
    v = std::sqrt(v / n);
    if (!(v > 0.0)) v = 1.0;
  }
  return s;
}

void Standardization::apply(std::span<const double> in, std::span<double> out) const {
  for (std::size_t c = 0; c < in.size(); ++c) out[c] = (in[c] - mean[c]) / scale[c];
}

Matrix Standardization::apply(const Matrix& x) const {
  Matrix out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) apply(x.row(r), out.row(r));
  return out;
}

std::size_t TrainingSet::positives() const {
  return static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
}

void TrainingSet::validate() const {
  require(x.rows() == y.size(), ErrorCode::kInvalidArgument, "feature rows and labels differ");
  require(x.cols() > 0, ErrorCode::kInvalidArgument, "training set has no features");
  require(feature_names.empty() || feature_names.size() == x.cols(),
          ErrorCode::kInvalidArgument, "feature name count does not match columns");
  for (int l : y) require(l == 0 || l == 1, ErrorCode::kInvalidArgument, "labels must be 0/1");
  for (double v : x.data())
    require(std::isfinite(v), ErrorCode::kInvalidArgument, "non-finite feature value");
  const auto p = positives();
  require(size() >= 2 && p > 0 && p < size(), ErrorCode::kDegenerateTraining,
          "training needs both classes");
}

TrainingSet TrainingSet::subset(std::span<const std::size_t> rows) const {
  TrainingSet out;
  out.x = x.select_rows(rows);
  out.feature_names = feature_names;
  for (std::size_t r : rows) out.y.push_back(y[r]);
  return out;
}

const char* model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::kRandomForest: return "RF";
    case ModelKind::kSvm: return "SVM";
    case ModelKind::kAdaBoost: return "AdaBoost";
    case ModelKind::kAnn: return "ANN";
  }
  return "?";
}

ModelKind parse_model_kind(const std::string& name) {
  for (auto k : {ModelKind::kRandomForest, ModelKind::kSvm, ModelKind::kAdaBoost, ModelKind::kAnn})
    if (name == model_kind_name(k)) return k;
  fail(ErrorCode::kParse, "unknown method: " + name);
}

HyperParams HyperParams::defaults(ModelKind kind) {
  HyperParams hp;
  hp.kind = kind;
  return hp;
}

std::string HyperParams::describe() const {
  std::ostringstream o;
  o.precision(17);
  switch (kind) {
    case ModelKind::kRandomForest:
      o << "n_trees=" << rf.n_trees << " min_leaf=" << rf.min_leaf << " mtry=" << rf.mtry;
      break;
    case ModelKind::kSvm:
      o << "sigma=" << svm.sigma << " C=" << svm.c;
      break;
    case ModelKind::kAdaBoost:
      o << "n_stumps=" << ada.n_stumps << " learn_rate=" << ada.learn_rate;
      break;
    case ModelKind::kAnn:
      o << "hidden=" << ann.hidden1 << "," << ann.hidden2 << " epochs=" << ann.epochs
        << " learn_rate=" << ann.learn_rate;
      break;
  }
  return o.str();
}

double logistic(double v) {
  if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

double rbf_kernel(std::span<const double> a, std::span<const double> b, double sigma) {
  double d2 = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) {
    const double d = a[n] - b[n];
    d2 += d * d;
  }
  return std::exp(-d2 / (2.0 * sigma * sigma));
}

double TrainedModel::decision_value(std::span<const double> x) const {
  require(x.size() == feature_count, ErrorCode::kInvalidArgument,
          "expected " + std::to_string(feature_count) + " features, got " +
              std::to_string(x.size()));
  switch (kind()) {
    case ModelKind::kRandomForest: {
      double votes = 0.0;
      for (const auto& tree : forest.trees) {
        std::size_t n = 0;
        while (tree[n].feature >= 0)
          n = x[tree[n].feature] <= tree[n].threshold ? tree[n].left : tree[n].right;
        votes += tree[n].vote;
      }
      return votes / static_cast<double>(forest.trees.size());
    }
    case ModelKind::kSvm: {
      std::vector<double> z(x.size());
      standardization.apply(x, z);
      double f = svm.bias;
      for (std::size_t s = 0; s < svm.coef.size(); ++s)
        f += svm.coef[s] * rbf_kernel(svm.support.row(s), z, hyper.svm.sigma);
      return f;
    }
    case ModelKind::kAdaBoost: {
      double margin = 0.0;
      for (const auto& s : boost.stumps) {
        const double h = (x[s.feature] > s.threshold ? 1.0 : -1.0) * s.polarity;
        margin += s.alpha * h;
      }
      return margin;
    }
    case ModelKind::kAnn: {
      std::vector<double> z(x.size());
      standardization.apply(x, z);
      return ann_forward(ann.layers, ann.params, z);
    }
  }
  fail(ErrorCode::kInternal, "unknown model kind");
}

double TrainedModel::score(std::span<const double> x) const {
  const double v = decision_value(x);
  switch (kind()) {
    case ModelKind::kRandomForest:
    case ModelKind::kAnn:
      return v;
    case ModelKind::kSvm:
    case ModelKind::kAdaBoost:
      return logistic(v);
  }
  return v;
}

std::vector<double> TrainedModel::scores(const Matrix& x) const {
  std::vector<double> out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) out[r] = score(x.row(r));
  return out;
}

TrainedModel fit_model(const TrainingSet& ts, const HyperParams& hp, std::uint64_t seed) {
  TrainedModel m;
  switch (hp.kind) {
    case ModelKind::kRandomForest: m = fit_random_forest(ts, hp.rf, seed); break;
    case ModelKind::kSvm: m = fit_svm_rbf(ts, hp.svm); break;
    case ModelKind::kAdaBoost: m = fit_adaboost(ts, hp.ada); break;
    case ModelKind::kAnn: m = fit_bp_ann(ts, hp.ann, seed); break;
  }
  // Keep the unused sections of the record at their defaults too.
  const auto kind = m.hyper.kind;
  m.hyper = hp;
  m.hyper.kind = kind;
  m.seed = seed;
  return m;
}

// ---- serialization ----

namespace {

const char kModelMagic[] = "LNMMODEL";
constexpr std::uint32_t kModelVersion = 1;

void write_hyper(ByteWriter& w, const HyperParams& hp) {
  w.u8(static_cast<std::uint8_t>(hp.kind));
  w.i32(hp.rf.n_trees);
  w.i32(hp.rf.min_leaf);
  w.i32(hp.rf.mtry);
  w.f64(hp.svm.sigma);
  w.f64(hp.svm.c);
  w.f64(hp.svm.tolerance);
  w.u64(static_cast<std::uint64_t>(hp.svm.max_iterations));
  w.i32(hp.ada.n_stumps);
  w.f64(hp.ada.learn_rate);
  w.i32(hp.ann.hidden1);
  w.i32(hp.ann.hidden2);
  w.i32(hp.ann.epochs);
  w.f64(hp.ann.learn_rate);
}

HyperParams read_hyper(ByteReader& r) {
  HyperParams hp;
  const auto kind = r.u8();
  require(kind <= 3, ErrorCode::kParse, "unknown model kind tag");
  hp.kind = static_cast<ModelKind>(kind);
  hp.rf.n_trees = r.i32();
  hp.rf.min_leaf = r.i32();
  hp.rf.mtry = r.i32();
  hp.svm.sigma = r.f64();
  hp.svm.c = r.f64();
  hp.svm.tolerance = r.f64();
  hp.svm.max_iterations = static_cast<std::int64_t>(r.u64());
  hp.ada.n_stumps = r.i32();
  hp.ada.learn_rate = r.f64();
  hp.ann.hidden1 = r.i32();
  hp.ann.hidden2 = r.i32();
  hp.ann.epochs = r.i32();
  hp.ann.learn_rate = r.f64();
  return hp;
}

void write_matrix(ByteWriter& w, const Matrix& m) {
  w.u64(m.rows());
  w.u64(m.cols());
  w.f64_array(m.data());
}

Matrix read_matrix(ByteReader& r) {
  const auto rows = r.u64();
  const auto cols = r.u64();
  const auto data = r.f64_array();
  require(data.size() == rows * cols, ErrorCode::kParse, "matrix payload size mismatch");
  Matrix m(rows, cols);
  for (std::size_t n = 0; n < rows; ++n) std::copy_n(data.begin() + n * cols, cols, m.row(n).begin());
  return m;
}

}  // namespace

std::vector<std::uint8_t> serialize_model(const TrainedModel& m) {
  ByteWriter w;
  for (const char* c = kModelMagic; *c; ++c) w.u8(static_cast<std::uint8_t>(*c));
  w.u32(kModelVersion);
  write_hyper(w, m.hyper);
  w.u64(m.seed);
  w.u64(m.feature_count);
  w.f64_array(m.standardization.mean);
  w.f64_array(m.standardization.scale);
  switch (m.kind()) {
    case ModelKind::kRandomForest:
      w.f64(m.forest.oob_accuracy);
      w.u64(m.forest.trees.size());
      for (const auto& tree : m.forest.trees) {
        w.u64(tree.size());
        for (const auto& n : tree) {
          w.i32(n.feature);
          w.f64(n.threshold);
          w.i32(n.left);
          w.i32(n.right);
          w.f64(n.vote);
        }
      }
      break;
    case ModelKind::kSvm:
      write_matrix(w, m.svm.support);
      w.f64_array(m.svm.coef);
      w.f64(m.svm.bias);
      w.u64(static_cast<std::uint64_t>(m.svm.iterations));
      break;
    case ModelKind::kAdaBoost:
      w.u64(m.boost.stumps.size());
      for (const auto& s : m.boost.stumps) {
        w.i32(s.feature);
        w.f64(s.threshold);
        w.i32(s.polarity);
        w.f64(s.alpha);
        w.f64(s.error);
      }
      w.f64_array(m.boost.exp_loss);
      break;
    case ModelKind::kAnn:
      w.u64(m.ann.layers.size());
      for (int l : m.ann.layers) w.i32(l);
      w.f64_array(m.ann.params);
      w.f64_array(m.ann.loss_trace);
      break;
  }
  return w.take();
}

TrainedModel deserialize_model(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  r.expect_magic(kModelMagic);
  require(r.u32() == kModelVersion, ErrorCode::kParse, "unsupported model version");
  TrainedModel m;
  m.hyper = read_hyper(r);
  m.seed = r.u64();
  m.feature_count = r.u64();
  m.standardization.mean = r.f64_array();
  m.standardization.scale = r.f64_array();
  switch (m.kind()) {
    case ModelKind::kRandomForest: {
      m.forest.oob_accuracy = r.f64();
      m.forest.trees.resize(r.u64());
      for (auto& tree : m.forest.trees) {
        tree.resize(r.u64());
        for (auto& n : tree) {
          n.feature = r.i32();
          n.threshold = r.f64();
          n.left = r.i32();
          n.right = r.i32();
          n.vote = r.f64();
          const auto size = static_cast<std::int32_t>(tree.size());
          require(n.feature < 0 || (n.left >= 0 && n.left < size && n.right >= 0 && n.right < size),
                  ErrorCode::kParse, "tree node child out of range");
        }
        require(!tree.empty(), ErrorCode::kParse, "empty tree");
      }
      break;
    }
    case ModelKind::kSvm:
      m.svm.support = read_matrix(r);
      m.svm.coef = r.f64_array();
      m.svm.bias = r.f64();
      m.svm.iterations = static_cast<std::int64_t>(r.u64());
      require(m.svm.coef.size() == m.svm.support.rows(), ErrorCode::kParse,
              "support vector count mismatch");
      break;
    case ModelKind::kAdaBoost:
      m.boost.stumps.resize(r.u64());
      for (auto& s : m.boost.stumps) {
        s.feature = r.i32();
        s.threshold = r.f64();
        s.polarity = r.i32();
        s.alpha = r.f64();
        s.error = r.f64();
      }
      m.boost.exp_loss = r.f64_array();
      break;
    case ModelKind::kAnn:
      m.ann.layers.resize(r.u64());
      for (auto& l : m.ann.layers) l = r.i32();
      m.ann.params = r.f64_array();
      m.ann.loss_trace = r.f64_array();
      break;
  }
  require(r.at_end(), ErrorCode::kParse, "trailing bytes after model record");
  return m;
}

// ---- tuning ----

GridResult grid_search(const TrainingSet& ts, const std::vector<HyperParams>& grid,
                       std::span<const int> fold_of, std::uint64_t seed) {
  require(!grid.empty(), ErrorCode::kInvalidArgument, "empty hyperparameter grid");
  GridResult result;
  if (grid.size() == 1) {
    result.best = grid.front();
    result.mean_auc.assign(1, std::numeric_limits<double>::quiet_NaN());
    return result;
  }
  ts.validate();
  require(fold_of.size() == ts.size(), ErrorCode::kInvalidArgument,
          "fold assignment length does not match the training set");
  const int k = *std::max_element(fold_of.begin(), fold_of.end()) + 1;

  struct Split {
    TrainingSet train;
    Matrix test_x;
    std::vector<int> test_y;
  };
  std::vector<Split> splits;
  for (int f = 0; f < k; ++f) {
    std::vector<std::size_t> tr, te;
    for (std::size_t n = 0; n < fold_of.size(); ++n) (fold_of[n] == f ? te : tr).push_back(n);
    Split s;
    s.train = ts.subset(tr);
    for (std::size_t n : te) s.test_y.push_back(ts.y[n]);
    const auto pos = std::count(s.test_y.begin(), s.test_y.end(), 1);
    const auto train_pos = s.train.positives();
    if (pos == 0 || pos == static_cast<long>(te.size()) || train_pos == 0 ||
        train_pos == s.train.size())
      continue;
    s.test_x = ts.x.select_rows(te);
    splits.push_back(std::move(s));
  }
  require(!splits.empty(), ErrorCode::kTuning, "no inner fold has both classes");

  double best = -1.0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double sum = 0.0;
    int ok = 0;
    for (std::size_t f = 0; f < splits.size(); ++f) {
      try {
        const auto model = fit_model(splits[f].train, grid[g], mix_seed(seed, f));
        sum += auc(model.scores(splits[f].test_x), splits[f].test_y);
        ++ok;
      } catch (const Error&) {
        // A point that fails on a fold is scored on the folds it survives.
      }
    }
    const double mean = ok ? sum / ok : std::numeric_limits<double>::quiet_NaN();
    result.mean_auc.push_back(mean);
    if (ok && mean > best) {
      best = mean;
      result.best_index = g;
    }
  }
  require(best >= 0.0, ErrorCode::kTuning, "every grid point failed to train");
  result.best = grid[result.best_index];
  return result;
}

std::vector<int> grouped_stratified_folds(std::span<const int> labels,
                                          std::span<const std::string> groups, int k,
                                          std::uint64_t seed) {
  require(labels.size() == groups.size(), ErrorCode::kInvalidArgument,
          "labels and groups differ in length");
  require(k >= 2, ErrorCode::kInvalidArgument, "need at least two folds");
  // Groups ordered by (majority class, shuffled), dealt to the fold that is
  // currently smallest for that class.
  std::map<std::string, std::vector<std::size_t>> members;
  for (std::size_t n = 0; n < groups.size(); ++n) members[groups[n]].push_back(n);
  require(static_cast<int>(members.size()) >= k, ErrorCode::kInfeasiblePlan,
          "fewer groups than folds");
  std::vector<std::pair<int, std::string>> order;
  for (const auto& [g, idx] : members) {
    std::size_t pos = 0;
    for (auto n : idx) pos += labels[n];
    order.emplace_back(2 * pos >= idx.size() ? 1 : 0, g);
  }
  Rng rng(seed);
  shuffle_range(order.begin(), order.end(), rng);
  std::stable_sort(order.begin(), order.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<std::array<std::size_t, 2>> load(k, {0, 0});
  std::vector<int> fold(labels.size(), 0);
  for (const auto& [cls, g] : order) {
    int target = 0;
    for (int f = 1; f < k; ++f) {
      const auto a = load[f][cls] + load[f][1 - cls], b = load[target][cls] + load[target][1 - cls];
      if (load[f][cls] < load[target][cls] || (load[f][cls] == load[target][cls] && a < b))
        target = f;
    }
    for (auto n : members[g]) {
      fold[n] = target;
      ++load[target][labels[n]];
    }
  }
  return fold;
}

}  // namespace lnm
