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

#include "lnm/convnet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lnm/binary_io.hpp"
#include "lnm/error.hpp"
#include "lnm/text.hpp"

namespace lnm {

int CnnArchitecture::conv_output_size(int layer) const {
  const int in = layer == 0 ? input_size : pooled_size(layer - 1);
  return in - conv[layer].kernel + 1;
}

int CnnArchitecture::pooled_size(int layer) const { return conv_output_size(layer) / 2; }

int CnnArchitecture::flat_inputs() const {
  const int s = pooled_size(2);
  return conv[2].out * s * s;
}

void CnnArchitecture::validate() const {
  require(input_channels >= 1 && conv[0].in == input_channels, ErrorCode::kInvalidArgument,
          "first convolution must consume every input channel");
  for (int l = 0; l < 3; ++l) {
    require(conv[l].out >= 1 && conv[l].kernel >= 1, ErrorCode::kInvalidArgument,
            "invalid convolution spec");
    if (l > 0)
      require(conv[l].in == conv[l - 1].out, ErrorCode::kInvalidArgument,
              "convolution channel counts do not chain");
    require(pooled_size(l) >= 1, ErrorCode::kInvalidArgument, "input too small for the network");
  }
  require(hidden >= 1 && classes == kCnnClasses, ErrorCode::kInvalidArgument,
          "invalid fully-connected sizes");
}

std::vector<TensorSlice> CnnModel::tensors() const {
  std::vector<TensorSlice> out;
  std::size_t off = 0;
  auto add = [&](std::string name, std::size_t size, bool bias, bool conv) {
    out.push_back({std::move(name), off, size, bias, conv});
    off += size;
  };
  for (int l = 0; l < 3; ++l) {
    const auto& c = arch.conv[l];
    const std::string n = "conv" + std::to_string(l + 1);
    add(n + ".w", static_cast<std::size_t>(c.out) * c.in * c.kernel * c.kernel, false, true);
    add(n + ".b", c.out, true, true);
  }
  add("fc1.w", static_cast<std::size_t>(arch.hidden) * arch.flat_inputs(), false, false);
  add("fc1.b", arch.hidden, true, false);
  add("fc2.w", static_cast<std::size_t>(arch.classes) * arch.hidden, false, false);
  add("fc2.b", arch.classes, true, false);
  return out;
}

std::size_t CnnModel::parameter_count() const {
  const auto t = tensors();
  return t.back().offset + t.back().size;
}

CnnModel build_cnn(std::uint64_t seed) { return build_cnn(CnnArchitecture{}, seed); }

CnnModel build_cnn(const CnnArchitecture& arch, std::uint64_t seed) {
  arch.validate();
  CnnModel m;
  m.arch = arch;
  m.seed = seed;
  m.params.assign(m.parameter_count(), 0.0);
  Rng rng(seed);
  const auto t = m.tensors();
  for (std::size_t k = 0; k < t.size(); k += 2) {
    // Weight tensor followed by its bias; fan_in = weights per output unit.
    const std::size_t outputs = t[k + 1].size;
    const double bound = 1.0 / std::sqrt(static_cast<double>(t[k].size / outputs));
    for (std::size_t n = 0; n < t[k].size; ++n)
      m.params[t[k].offset + n] = draw_uniform(rng, -bound, bound);
  }
  return m;
}

std::array<double, kCnnClasses> softmax(const std::array<double, kCnnClasses>& z) {
  const double mx = std::max(z[0], z[1]);
  const double e0 = std::exp(z[0] - mx), e1 = std::exp(z[1] - mx);
  const double s = e0 + e1;
  return {e0 / s, e1 / s};
}

namespace {

struct Block {
  int in_c, out_c, k, in_s, conv_s, pool_s;
};

// Activations of one sample, kept for the backward pass.
struct Workspace {
  std::array<std::vector<double>, 3> conv;  // post-ReLU
  std::array<std::vector<double>, 3> pool;
  std::array<std::vector<int>, 3> arg;      // index into conv of each pooled max
  std::vector<double> hidden;               // post-ReLU, pre-dropout
  std::vector<double> dropped;              // after dropout scaling
  std::vector<double> mask;
  std::array<double, kCnnClasses> logits{};
};

std::array<Block, 3> blocks(const CnnArchitecture& a) {
  std::array<Block, 3> b{};
  for (int l = 0; l < 3; ++l)
    b[l] = {a.conv[l].in, a.conv[l].out, a.conv[l].kernel,
            l == 0 ? a.input_size : a.pooled_size(l - 1), a.conv_output_size(l), a.pooled_size(l)};
  return b;
}

void check_finite(const std::vector<double>& v, const char* layer) {
  for (double x : v)
    if (!std::isfinite(x)) fail(ErrorCode::kNumericFault, std::string("non-finite activation in ") + layer);
}

void conv_forward(const Block& b, const double* in, const double* w, const double* bias,
                  std::vector<double>& out, const char* layer) {
  const int s = b.conv_s;
  out.resize(static_cast<std::size_t>(b.out_c) * s * s);
  for (int o = 0; o < b.out_c; ++o) {
    double* dst0 = out.data() + static_cast<std::size_t>(o) * s * s;
    std::fill(dst0, dst0 + s * s, bias[o]);
    for (int c = 0; c < b.in_c; ++c)
      for (int ky = 0; ky < b.k; ++ky)
        for (int kx = 0; kx < b.k; ++kx) {
          const double wv = w[((static_cast<std::size_t>(o) * b.in_c + c) * b.k + ky) * b.k + kx];
          for (int y = 0; y < s; ++y) {
            const double* src = in + (static_cast<std::size_t>(c) * b.in_s + y + ky) * b.in_s + kx;
            double* dst = dst0 + static_cast<std::size_t>(y) * s;
            for (int x = 0; x < s; ++x) dst[x] += wv * src[x];
          }
        }
  }
  // Checked before the ReLU, which would map NaN to zero.
  check_finite(out, layer);
  for (auto& v : out) v = v > 0.0 ? v : 0.0;
}

void pool_forward(const Block& b, const std::vector<double>& in, std::vector<double>& out,
                  std::vector<int>& arg) {
  const int s = b.conv_s, p = b.pool_s;
  out.resize(static_cast<std::size_t>(b.out_c) * p * p);
  arg.resize(out.size());
  for (int c = 0; c < b.out_c; ++c)
    for (int y = 0; y < p; ++y)
      for (int x = 0; x < p; ++x) {
        int best = (c * s + 2 * y) * s + 2 * x;
        for (int dy = 0; dy < 2; ++dy)
          for (int dx = 0; dx < 2; ++dx) {
            const int idx = (c * s + 2 * y + dy) * s + 2 * x + dx;
            if (in[idx] > in[best]) best = idx;
          }
        const int o = (c * p + y) * p + x;
        out[o] = in[best];
        arg[o] = best;
      }
}

void forward_into(const CnnModel& m, std::span<const double> input, bool train_mode, Rng* rng,
                  Workspace& ws) {
  const auto& a = m.arch;
  require(input.size() == static_cast<std::size_t>(a.input_channels) * a.input_size * a.input_size,
          ErrorCode::kInvalidArgument, "network input has the wrong size");
  const auto bl = blocks(a);
  const auto t = m.tensors();
  const double* P = m.params.data();
  static const char* kConvNames[] = {"conv1", "conv2", "conv3"};
  for (int l = 0; l < 3; ++l) {
    const double* in = l == 0 ? input.data() : ws.pool[l - 1].data();
    conv_forward(bl[l], in, P + t[2 * l].offset, P + t[2 * l + 1].offset, ws.conv[l],
                 kConvNames[l]);
    pool_forward(bl[l], ws.conv[l], ws.pool[l], ws.arg[l]);
  }
  const auto& flat = ws.pool[2];
  const int F = a.flat_inputs(), H = a.hidden;
  const double* W1 = P + t[6].offset;
  const double* b1 = P + t[7].offset;
  ws.hidden.resize(H);
  for (int h = 0; h < H; ++h) {
    const double* w = W1 + static_cast<std::size_t>(h) * F;
    double s = b1[h];
    for (int i = 0; i < F; ++i) s += w[i] * flat[i];
    if (!std::isfinite(s)) fail(ErrorCode::kNumericFault, "non-finite activation in fc1");
    ws.hidden[h] = s > 0.0 ? s : 0.0;
  }
  ws.mask.assign(H, 1.0);
  if (train_mode && m.dropout > 0.0) {
    require(rng != nullptr, ErrorCode::kInvalidArgument, "training mode needs a dropout RNG");
    const double keep = 1.0 - m.dropout;
    for (auto& v : ws.mask) v = draw_unit(*rng) < keep ? 1.0 / keep : 0.0;
  }
  ws.dropped.resize(H);
  for (int h = 0; h < H; ++h) ws.dropped[h] = ws.hidden[h] * ws.mask[h];
  const double* W2 = P + t[8].offset;
  const double* b2 = P + t[9].offset;
  for (int c = 0; c < kCnnClasses; ++c) {
    double s = b2[c];
    for (int h = 0; h < H; ++h) s += W2[static_cast<std::size_t>(c) * H + h] * ws.dropped[h];
    ws.logits[c] = s;
  }
  if (!std::isfinite(ws.logits[0]) || !std::isfinite(ws.logits[1]))
    fail(ErrorCode::kNumericFault, "non-finite activation in fc2");
}

// Accumulates d(weight * cross-entropy)/d(params) for one sample into g.
void backward_into(const CnnModel& m, std::span<const double> input, int label, double weight,
                   Workspace& ws, std::vector<double>& g) {
  const auto& a = m.arch;
  const auto bl = blocks(a);
  const auto t = m.tensors();
  const double* P = m.params.data();
  const int F = a.flat_inputs(), H = a.hidden;

  const auto p = softmax(ws.logits);
  std::array<double, kCnnClasses> dz{};
  for (int c = 0; c < kCnnClasses; ++c) dz[c] = weight * (p[c] - (c == label ? 1.0 : 0.0));

  const double* W2 = P + t[8].offset;
  double* gW2 = g.data() + t[8].offset;
  double* gb2 = g.data() + t[9].offset;
  std::vector<double> dh(H, 0.0);
  for (int c = 0; c < kCnnClasses; ++c) {
    gb2[c] += dz[c];
    for (int h = 0; h < H; ++h) {
      gW2[static_cast<std::size_t>(c) * H + h] += dz[c] * ws.dropped[h];
      dh[h] += W2[static_cast<std::size_t>(c) * H + h] * dz[c];
    }
  }
  for (int h = 0; h < H; ++h) dh[h] *= ws.mask[h] * (ws.hidden[h] > 0.0 ? 1.0 : 0.0);

  const double* W1 = P + t[6].offset;
  double* gW1 = g.data() + t[6].offset;
  double* gb1 = g.data() + t[7].offset;
  std::vector<double> dflat(F, 0.0);
  const auto& flat = ws.pool[2];
  for (int h = 0; h < H; ++h) {
    const double d = dh[h];
    if (d == 0.0) continue;
    gb1[h] += d;
    double* gw = gW1 + static_cast<std::size_t>(h) * F;
    const double* w = W1 + static_cast<std::size_t>(h) * F;
    for (int i = 0; i < F; ++i) {
      gw[i] += d * flat[i];
      dflat[i] += w[i] * d;
    }
  }

  std::vector<double> dpool = std::move(dflat), dconv, din;
  for (int l = 2; l >= 0; --l) {
    const Block& b = bl[l];
    const int s = b.conv_s;
    dconv.assign(static_cast<std::size_t>(b.out_c) * s * s, 0.0);
    for (std::size_t o = 0; o < dpool.size(); ++o) dconv[ws.arg[l][o]] += dpool[o];
    for (std::size_t n = 0; n < dconv.size(); ++n)
      if (ws.conv[l][n] <= 0.0) dconv[n] = 0.0;

    const double* in = l == 0 ? input.data() : ws.pool[l - 1].data();
    const double* w = P + t[2 * l].offset;
    double* gw = g.data() + t[2 * l].offset;
    double* gb = g.data() + t[2 * l + 1].offset;
    const bool need_din = l > 0;
    if (need_din) din.assign(static_cast<std::size_t>(b.in_c) * b.in_s * b.in_s, 0.0);
    for (int o = 0; o < b.out_c; ++o) {
      const double* d0 = dconv.data() + static_cast<std::size_t>(o) * s * s;
      double sb = 0.0;
      for (int n = 0; n < s * s; ++n) sb += d0[n];
      gb[o] += sb;
      for (int c = 0; c < b.in_c; ++c)
        for (int ky = 0; ky < b.k; ++ky)
          for (int kx = 0; kx < b.k; ++kx) {
            const std::size_t widx = ((static_cast<std::size_t>(o) * b.in_c + c) * b.k + ky) * b.k + kx;
            const double wv = w[widx];
            double acc = 0.0;
            for (int y = 0; y < s; ++y) {
              const std::size_t row = (static_cast<std::size_t>(c) * b.in_s + y + ky) * b.in_s + kx;
              const double* src = in + row;
              const double* d = d0 + static_cast<std::size_t>(y) * s;
              for (int x = 0; x < s; ++x) acc += d[x] * src[x];
              if (need_din) {
                double* dst = din.data() + row;
                for (int x = 0; x < s; ++x) dst[x] += wv * d[x];
              }
            }
            gw[widx] += acc;
          }
    }
    if (need_din) dpool.swap(din);
  }
}

double weight_penalty(const CnnModel& m, std::vector<double>* g) {
  if (m.weight_decay == 0.0) return 0.0;
  double ss = 0.0;
  for (const auto& t : m.tensors()) {
    if (t.bias) continue;
    for (std::size_t n = t.offset; n < t.offset + t.size; ++n) {
      ss += m.params[n] * m.params[n];
      if (g) (*g)[n] += m.weight_decay * m.params[n];
    }
  }
  return 0.5 * m.weight_decay * ss;
}

constexpr double kKinkTolerance = 5e-4;

double cross_entropy(const std::array<double, kCnnClasses>& z, int label) {
  const double mx = std::max(z[0], z[1]);
  const double lse = mx + std::log(std::exp(z[0] - mx) + std::exp(z[1] - mx));
  return lse - z[label];
}

}  // namespace

CnnOutput cnn_forward(const CnnModel& model, std::span<const double> input, bool train_mode,
                      Rng* dropout_rng) {
  Workspace ws;
  forward_into(model, input, train_mode, dropout_rng, ws);
  CnnOutput out;
  out.logits = ws.logits;
  out.probs = softmax(ws.logits);
  out.flatten = std::move(ws.hidden);
  return out;
}

std::vector<double> stack_input(const PatchStack& stack) {
  return std::vector<double>(stack.values.begin(), stack.values.end());
}

CnnOutput cnn_forward(const CnnModel& model, const PatchStack& stack, bool train_mode,
                      Rng* dropout_rng) {
  const auto in = stack_input(stack);
  return cnn_forward(model, in, train_mode, dropout_rng);
}

std::vector<double> flatten_features(const CnnModel& model, const PatchStack& stack) {
  return cnn_forward(model, stack, false, nullptr).flatten;
}

double cnn_batch_loss(const CnnModel& model, std::span<const std::vector<double>> inputs,
                      std::span<const int> labels, bool train_mode, Rng* dropout_rng,
                      std::vector<double>* grad, const GradientOptions& options) {
  require(!inputs.empty() && inputs.size() == labels.size(), ErrorCode::kInvalidArgument,
          "batch inputs and labels differ or are empty");
  require(model.params.size() == model.parameter_count(), ErrorCode::kInvalidArgument,
          "parameter vector does not match the architecture");
  if (grad) grad->assign(model.params.size(), 0.0);
  const double w = options.data_loss_weight / static_cast<double>(inputs.size());
  Workspace ws;
  double data = 0.0;
  for (std::size_t n = 0; n < inputs.size(); ++n) {
    require(labels[n] == 0 || labels[n] == 1, ErrorCode::kInvalidArgument, "labels must be 0/1");
    forward_into(model, inputs[n], train_mode, dropout_rng, ws);
    data += cross_entropy(ws.logits, labels[n]);
    if (grad && w != 0.0) backward_into(model, inputs[n], labels[n], w, ws, *grad);
  }
  const double loss = w * data + weight_penalty(model, grad);
  if (grad && options.zero_conv_bias_grad)
    for (const auto& t : model.tensors())
      if (t.conv && t.bias) std::fill_n(grad->begin() + t.offset, t.size, 0.0);
  return loss;
}

GradientCheck gradient_check(const CnnModel& model, const PatchStack& stack, int label,
                             int per_tensor, std::uint64_t seed, bool zero_conv_bias_grad,
                             double relative_step) {
  const std::vector<std::vector<double>> in{stack_input(stack)};
  const std::vector<int> y{label};
  GradientOptions opt;
  opt.zero_conv_bias_grad = zero_conv_bias_grad;
  std::vector<double> grad;
  GradientCheck r;
  r.loss = cnn_batch_loss(model, in, y, false, nullptr, &grad, opt);
  CnnModel probe = model;
  Rng rng(seed);
  const auto tensors = model.tensors();
  for (std::size_t ti = 0; ti < tensors.size(); ++ti) {
    const auto& t = tensors[ti];
    // The step is measured in units of the layer's initialization scale, so
    // every layer sees the same relative perturbation.
    const auto& w = tensors[t.bias ? ti - 1 : ti];
    const auto& b = tensors[t.bias ? ti : ti + 1];
    const double step = relative_step / std::sqrt(static_cast<double>(w.size / b.size));
    std::vector<std::size_t> idx(t.size);
    std::iota(idx.begin(), idx.end(), t.offset);
    const std::size_t want = std::min<std::size_t>(per_tensor, t.size);
    std::size_t accepted = 0;
    for (std::size_t k = 0; k < t.size && accepted < want; ++k) {
      std::swap(idx[k], idx[k + draw_index(rng, t.size - k)]);
      const std::size_t p = idx[k];
      const double keep = probe.params[p];
      probe.params[p] = keep + step;
      const double up = cnn_batch_loss(probe, in, y, false, nullptr, nullptr);
      probe.params[p] = keep - step;
      const double down = cnn_batch_loss(probe, in, y, false, nullptr, nullptr);
      probe.params[p] = keep;
      // One-sided slopes that disagree mean a ReLU or max-pool switch lies
      // inside the step; the loss is not differentiable there, so draw again.
      const double fwd = (up - r.loss) / step, bwd = (r.loss - down) / step;
      if (std::abs(fwd - bwd) > kKinkTolerance * std::max({std::abs(fwd), std::abs(bwd), 1e-7})) {
        ++r.skipped_kinks;
        continue;
      }
      const double fd = (up - down) / (2.0 * step);
      const double rel =
          std::abs(fd - grad[p]) / std::max({std::abs(fd), std::abs(grad[p]), 1e-7});
      if (rel > r.max_relative_error) {
        r.max_relative_error = rel;
        r.worst_tensor = t.name;
      }
      ++r.parameters_checked;
      ++accepted;
    }
  }
  return r;
}

void TrainSchedule::validate() const {
  require(batch_size >= 1, ErrorCode::kInvalidArgument, "batch size must be positive");
  require(momentum >= 0.0 && momentum < 1.0, ErrorCode::kInvalidArgument,
          "momentum must lie in [0, 1)");
  require(eta0 >= 0.0 && eta_r >= 0.0, ErrorCode::kInvalidArgument,
          "learning rates must be nonnegative");
  require(gamma > 0.0 && gamma <= 1.0 && gamma_r > 0.0 && gamma_r <= 1.0,
          ErrorCode::kInvalidArgument, "decay factors must lie in (0, 1]");
  require(epochs >= 1 && reactivation_epochs >= 0 && max_iterations >= 0 && window >= 1 &&
              rel_tol >= 0.0,
          ErrorCode::kInvalidArgument, "invalid schedule budget");
}

CnnDataset CnnDataset::from_stacks(std::span<const PatchStack> stacks, std::span<const int> labels) {
  require(stacks.size() == labels.size(), ErrorCode::kInvalidArgument,
          "stacks and labels differ in length");
  CnnDataset d;
  d.size = stacks.size();
  d.label = [labels](std::size_t i) { return labels[i]; };
  d.input = [stacks](std::size_t i, std::vector<double>& out) {
    out.assign(stacks[i].values.begin(), stacks[i].values.end());
  };
  return d;
}

CnnTrainResult train_cnn(const CnnModel& init, const CnnDataset& data,
                         const TrainSchedule& schedule, const TrainObserver& observer) {
  schedule.validate();
  require(data.size > 0 && data.label && data.input, ErrorCode::kInvalidArgument,
          "training needs at least one sample");
  CnnTrainResult r;
  r.model = init;
  auto& params = r.model.params;
  std::vector<double> velocity(params.size()), grad;
  std::vector<std::size_t> order(data.size);
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle_rng(schedule.seed);
  GradientOptions opt;
  opt.data_loss_weight = schedule.data_loss_weight;
  std::int64_t it = 0;
  bool stop = false;

  for (int phase = 1; phase <= 2 && !stop; ++phase) {
    const int budget = phase == 1 ? schedule.epochs : schedule.reactivation_epochs;
    if (budget == 0) break;
    double lr = phase == 1 ? schedule.eta0 : schedule.eta_r;
    const double decay = phase == 1 ? schedule.gamma : schedule.gamma_r;
    std::fill(velocity.begin(), velocity.end(), 0.0);
    std::vector<double> losses;
    bool converged = false;
    for (int epoch = 0; epoch < budget && !stop && !converged; ++epoch) {
      shuffle_range(order.begin(), order.end(), shuffle_rng);
      for (std::size_t start = 0; start < data.size && !stop && !converged;
           start += schedule.batch_size) {
        const std::size_t end = std::min(data.size, start + schedule.batch_size);
        std::vector<std::size_t> batch(order.begin() + start, order.begin() + end);
        std::sort(batch.begin(), batch.end());
        std::vector<std::vector<double>> inputs(batch.size());
        std::vector<int> labels(batch.size());
        for (std::size_t n = 0; n < batch.size(); ++n) {
          data.input(batch[n], inputs[n]);
          labels[n] = data.label(batch[n]);
        }
        Rng drop_rng(mix_seed(schedule.seed, static_cast<std::uint64_t>(it)));
        double loss;
        try {
          loss = cnn_batch_loss(r.model, inputs, labels, true, &drop_rng, &grad, opt);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kNumericFault) throw;
          fail(ErrorCode::kDivergence,
               "training diverged at iteration " + std::to_string(it) + ": " + e.what());
        }
        require(std::isfinite(loss), ErrorCode::kDivergence,
                "training loss is not finite at iteration " + std::to_string(it));
        for (std::size_t k = 0; k < params.size(); ++k) {
          velocity[k] = schedule.momentum * velocity[k] - lr * grad[k];
          params[k] += velocity[k];
        }
        r.trace.push_back({it, phase, lr, loss});
        losses.push_back(loss);
        lr *= decay;
        ++it;
        if (observer && observer(r.model, it)) {
          stop = true;
          r.stopped_by_observer = true;
        }
        if (schedule.max_iterations > 0 && it >= schedule.max_iterations) stop = true;
        const std::size_t w = static_cast<std::size_t>(schedule.window);
        if (losses.size() >= 2 * w) {
          double prev = 0.0, last = 0.0;
          for (std::size_t k = losses.size() - 2 * w; k < losses.size() - w; ++k) prev += losses[k];
          for (std::size_t k = losses.size() - w; k < losses.size(); ++k) last += losses[k];
          converged = (prev - last) < schedule.rel_tol * std::abs(prev);
        }
      }
    }
    if (phase == 1) {
      r.phase1_iterations = it;
      r.phase1_params = params;
    }
  }
  return r;
}

namespace {

const char kCnnMagic[] = "LNMCNN";
constexpr std::uint32_t kCnnVersion = 1;

}  // namespace

std::vector<std::uint8_t> serialize_cnn(const CnnModel& m) {
  ByteWriter w;
  for (const char* c = kCnnMagic; *c; ++c) w.u8(static_cast<std::uint8_t>(*c));
  w.u32(kCnnVersion);
  w.i32(m.arch.input_channels);
  w.i32(m.arch.input_size);
  for (const auto& c : m.arch.conv) {
    w.i32(c.in);
    w.i32(c.out);
    w.i32(c.kernel);
  }
  w.i32(m.arch.hidden);
  w.i32(m.arch.classes);
  w.f64(m.dropout);
  w.f64(m.weight_decay);
  w.u64(m.seed);
  w.f64_array(m.params);
  return w.take();
}

CnnModel deserialize_cnn(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  r.expect_magic(kCnnMagic);
  require(r.u32() == kCnnVersion, ErrorCode::kParse, "unsupported checkpoint version");
  CnnModel m;
  m.arch.input_channels = r.i32();
  m.arch.input_size = r.i32();
  for (auto& c : m.arch.conv) {
    c.in = r.i32();
    c.out = r.i32();
    c.kernel = r.i32();
  }
  m.arch.hidden = r.i32();
  m.arch.classes = r.i32();
  try {
    m.arch.validate();
  } catch (const Error& e) {
    fail(ErrorCode::kParse, std::string("checkpoint architecture: ") + e.what());
  }
  m.dropout = r.f64();
  m.weight_decay = r.f64();
  m.seed = r.u64();
  m.params = r.f64_array();
  require(m.params.size() == m.parameter_count(), ErrorCode::kParse,
          "checkpoint holds " + std::to_string(m.params.size()) + " parameters, architecture needs " +
              std::to_string(m.parameter_count()));
  require(r.at_end(), ErrorCode::kParse, "trailing bytes after checkpoint");
  return m;
}

void save_cnn_checkpoint(const CnnModel& model, const std::string& path) {
  write_file_bytes(path, serialize_cnn(model));
}

CnnModel load_cnn_checkpoint(const std::string& path) {
  return deserialize_cnn(read_file_bytes(path));
}

std::string loss_trace_csv(const std::vector<LossRecord>& trace) {
  std::string out = "iteration,phase,learning_rate,loss\n";
  for (const auto& r : trace)
    out += std::to_string(r.iteration) + "," + std::to_string(r.phase) + "," +
           format_double(r.learning_rate) + "," + format_double(r.loss) + "\n";
  return out;
}

}  // namespace lnm
