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

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace lnm {

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  const std::vector<double>& data() const { return data_; }

  Matrix select_rows(std::span<const std::size_t> rows) const;
  Matrix select_cols(std::span<const std::size_t> cols) const;

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Per-feature z-score from training statistics; zero spread maps to scale 1.
struct Standardization {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardization fit(const Matrix& x);
  bool empty() const { return mean.empty(); }
  void apply(std::span<const double> in, std::span<double> out) const;
  Matrix apply(const Matrix& x) const;
};

struct TrainingSet {
  Matrix x;
  std::vector<int> y;  // 0 benign, 1 malignant
  std::vector<std::string> feature_names;

  std::size_t size() const { return y.size(); }
  std::size_t features() const { return x.cols(); }
  std::size_t positives() const;
  // Checks shape, 0/1 labels, finiteness and that both classes are present.
  void validate() const;
  TrainingSet subset(std::span<const std::size_t> rows) const;
};

enum class ModelKind : std::uint8_t { kRandomForest = 0, kSvm = 1, kAdaBoost = 2, kAnn = 3 };

const char* model_kind_name(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);

struct RfParams {
  int n_trees = 100;
  int min_leaf = 1;
  int mtry = 0;  // 0 selects floor(sqrt(F))
};

struct SvmParams {
  double sigma = 2.0;
  double c = 1.0;
  double tolerance = 1e-3;
  std::int64_t max_iterations = 10'000'000;
};

struct AdaBoostParams {
  int n_stumps = 300;
  double learn_rate = 0.1;
};

struct AnnParams {
  int hidden1 = 50;
  int hidden2 = 26;
  int epochs = 1000;
  double learn_rate = 0.04;
};

struct HyperParams {
  ModelKind kind = ModelKind::kRandomForest;
  RfParams rf;
  SvmParams svm;
  AdaBoostParams ada;
  AnnParams ann;

  static HyperParams defaults(ModelKind kind);
  // Compact "key=value" rendering of the fields that matter for kind.
  std::string describe() const;
};

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;     // x[feature] <= threshold goes left
  std::int32_t left = -1;
  std::int32_t right = -1;
  double vote = 0.0;  // leaf vote: 1 malignant majority, 0 benign, 0.5 tie
};

struct ForestModel {
  std::vector<std::vector<TreeNode>> trees;
  double oob_accuracy = 0.0;
};

struct SvmModel {
  Matrix support;             // standardized support vectors
  std::vector<double> coef;   // alpha_i * y_i
  double bias = 0.0;
  std::int64_t iterations = 0;
};

struct Stump {
  std::int32_t feature = 0;
  double threshold = 0.0;
  std::int32_t polarity = 1;  // +1: x > threshold votes malignant
  double alpha = 0.0;
  double error = 0.0;         // weighted training error when chosen
};

struct BoostModel {
  std::vector<Stump> stumps;
  std::vector<double> exp_loss;  // training exponential loss after each round
};

struct AnnModel {
  std::vector<int> layers;  // F, h1, h2, 1
  std::vector<double> params;
  std::vector<double> loss_trace;  // loss before each epoch, then final
};

struct TrainedModel {
  HyperParams hyper;
  std::uint64_t seed = 0;
  std::size_t feature_count = 0;
  Standardization standardization;  // empty for tree methods
  ForestModel forest;
  SvmModel svm;
  BoostModel boost;
  AnnModel ann;

  ModelKind kind() const { return hyper.kind; }
  // Raw method output: vote fraction, SVM f(x), boosting margin, network output.
  double decision_value(std::span<const double> x) const;
  // Malignancy score in [0, 1], monotone in the decision value.
  double score(std::span<const double> x) const;
  std::vector<double> scores(const Matrix& x) const;
};

TrainedModel fit_random_forest(const TrainingSet& ts, const RfParams& hp, std::uint64_t seed);
TrainedModel fit_svm_rbf(const TrainingSet& ts, const SvmParams& hp);
TrainedModel fit_adaboost(const TrainingSet& ts, const AdaBoostParams& hp);
TrainedModel fit_bp_ann(const TrainingSet& ts, const AnnParams& hp, std::uint64_t seed);
TrainedModel fit_model(const TrainingSet& ts, const HyperParams& hp, std::uint64_t seed);

double rbf_kernel(std::span<const double> a, std::span<const double> b, double sigma);
double logistic(double v);

// Network internals, exposed for finite-difference checks.
std::vector<double> ann_initial_params(const std::vector<int>& layers, std::uint64_t seed);
double ann_forward(const std::vector<int>& layers, std::span<const double> params,
                   std::span<const double> x);
// Half the summed squared error over the rows of x (already standardized) and
// its gradient.
double ann_loss(const std::vector<int>& layers, std::span<const double> params, const Matrix& x,
                std::span<const int> y, std::vector<double>* grad);

std::vector<std::uint8_t> serialize_model(const TrainedModel& model);
TrainedModel deserialize_model(std::span<const std::uint8_t> bytes);

struct GridResult {
  HyperParams best;
  std::size_t best_index = 0;
  std::vector<double> mean_auc;  // NaN where the point failed on every fold
};

// Maximizes mean held-out AUC over the folds given by fold_of (values 0..k-1).
// Folds whose held-out part lacks a class are skipped. Ties keep the earlier point.
GridResult grid_search(const TrainingSet& ts, const std::vector<HyperParams>& grid,
                       std::span<const int> fold_of, std::uint64_t seed);

// Stratified k-fold ids that keep each group (patient) in a single fold.
std::vector<int> grouped_stratified_folds(std::span<const int> labels,
                                          std::span<const std::string> groups, int k,
                                          std::uint64_t seed);

}  // namespace lnm
