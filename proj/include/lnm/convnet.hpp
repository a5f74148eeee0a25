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

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "lnm/patch.hpp"
#include "lnm/rng.hpp"

namespace lnm {

inline constexpr int kFlattenWidth = 512;
inline constexpr int kCnnClasses = 2;

struct ConvSpec {
  int in = 0;
  int out = 0;
  int kernel = 0;

  bool operator==(const ConvSpec&) const = default;
};

// Three valid-padding convolutions, each followed by ReLU and 2x2 max pooling,
// then a hidden fully-connected layer (ReLU, dropout) and the class layer.
struct CnnArchitecture {
  int input_channels = kPatchChannels;
  int input_size = kPatchSize;
  std::array<ConvSpec, 3> conv{{{kPatchChannels, 32, 5}, {32, 64, 3}, {64, 64, 3}}};
  int hidden = kFlattenWidth;
  int classes = kCnnClasses;

  int conv_output_size(int layer) const;  // before pooling
  int pooled_size(int layer) const;       // after pooling
  int flat_inputs() const;                // channels x pooled^2 of the last block
  void validate() const;

  bool operator==(const CnnArchitecture&) const = default;
};

struct TensorSlice {
  std::string name;
  std::size_t offset = 0;
  std::size_t size = 0;
  bool bias = false;
  bool conv = false;
};

struct CnnModel {
  CnnArchitecture arch;
  double dropout = 0.5;
  double weight_decay = 5e-4;
  std::uint64_t seed = 0;
  std::vector<double> params;

  // conv1.w, conv1.b, ..., fc1.w, fc1.b, fc2.w, fc2.b in parameter order.
  std::vector<TensorSlice> tensors() const;
  std::size_t parameter_count() const;
};

// Weights uniform in +-1/sqrt(fan_in), biases zero.
CnnModel build_cnn(std::uint64_t seed);
CnnModel build_cnn(const CnnArchitecture& arch, std::uint64_t seed);

struct CnnOutput {
  std::array<double, kCnnClasses> logits{};
  std::array<double, kCnnClasses> probs{};
  std::vector<double> flatten;  // hidden-layer activations before dropout

  int predicted() const { return probs[1] > probs[0] ? 1 : 0; }
};

std::array<double, kCnnClasses> softmax(const std::array<double, kCnnClasses>& logits);

// input holds channels x size x size values, channel-major.
CnnOutput cnn_forward(const CnnModel& model, std::span<const double> input, bool train_mode = false,
                      Rng* dropout_rng = nullptr);
CnnOutput cnn_forward(const CnnModel& model, const PatchStack& stack, bool train_mode = false,
                      Rng* dropout_rng = nullptr);
std::vector<double> flatten_features(const CnnModel& model, const PatchStack& stack);
std::vector<double> stack_input(const PatchStack& stack);

struct GradientOptions {
  double data_loss_weight = 1.0;
  bool zero_conv_bias_grad = false;  // fault injection for negative controls
};

// data_loss_weight * mean cross-entropy + weight_decay/2 * sum of squared weights.
double cnn_batch_loss(const CnnModel& model, std::span<const std::vector<double>> inputs,
                      std::span<const int> labels, bool train_mode, Rng* dropout_rng,
                      std::vector<double>* grad, const GradientOptions& options = {});

struct GradientCheck {
  double max_relative_error = 0.0;
  std::size_t parameters_checked = 0;
  double loss = 0.0;
  std::string worst_tensor;
  std::size_t skipped_kinks = 0;  // samples straddling a ReLU/max-pool switch
};

// Central differences at per_tensor random entries of every parameter tensor.
// The step is relative_step times the layer's 1/sqrt(fan_in) scale.
GradientCheck gradient_check(const CnnModel& model, const PatchStack& stack, int label,
                             int per_tensor = 12, std::uint64_t seed = 0,
                             bool zero_conv_bias_grad = false, double relative_step = 1e-4);

struct TrainSchedule {
  int batch_size = 64;
  double momentum = 0.9;
  double eta0 = 1e-9;
  double gamma = 0.9;
  double eta_r = 1e-11;
  double gamma_r = 0.95;
  int epochs = 10;               // phase-1 budget
  int reactivation_epochs = 10;  // phase-2 budget; 0 disables reactivation
  std::int64_t max_iterations = 0;  // total cap over both phases; 0 = none
  int window = 50;
  double rel_tol = 1e-5;
  double data_loss_weight = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct LossRecord {
  std::int64_t iteration = 0;
  int phase = 1;
  double learning_rate = 0.0;
  double loss = 0.0;
};

struct CnnDataset {
  std::size_t size = 0;
  std::function<int(std::size_t)> label;
  std::function<void(std::size_t, std::vector<double>&)> input;

  static CnnDataset from_stacks(std::span<const PatchStack> stacks, std::span<const int> labels);
};

struct CnnTrainResult {
  CnnModel model;
  std::vector<LossRecord> trace;
  std::int64_t phase1_iterations = 0;
  std::vector<double> phase1_params;  // parameters when phase 1 ended
  bool stopped_by_observer = false;
};

// Called after every iteration with the updated model; returning true stops training.
using TrainObserver = std::function<bool(const CnnModel&, std::int64_t iteration)>;

CnnTrainResult train_cnn(const CnnModel& init, const CnnDataset& data,
                         const TrainSchedule& schedule, const TrainObserver& observer = {});

std::vector<std::uint8_t> serialize_cnn(const CnnModel& model);
CnnModel deserialize_cnn(std::span<const std::uint8_t> bytes);
void save_cnn_checkpoint(const CnnModel& model, const std::string& path);
CnnModel load_cnn_checkpoint(const std::string& path);

std::string loss_trace_csv(const std::vector<LossRecord>& trace);

}  // namespace lnm
