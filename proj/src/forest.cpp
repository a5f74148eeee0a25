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
#include "lnm/rng.hpp"

namespace lnm {

namespace {

double gini(double n, double pos) {
  if (n == 0) return 0.0;
  const double p = pos / n;
  return 2.0 * p * (1.0 - p);
}

struct Split {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const TrainingSet& ts, int mtry, int min_leaf, Rng& rng)
      : ts_(ts), mtry_(mtry), min_leaf_(min_leaf), rng_(rng) {}

  std::vector<TreeNode> build(std::vector<std::size_t> sample) {
    nodes_.clear();
    struct Job {
      std::int32_t node;
      std::vector<std::size_t> idx;
    };
    std::vector<Job> stack;
    nodes_.emplace_back();
    stack.push_back({0, std::move(sample)});
    while (!stack.empty()) {
      Job job = std::move(stack.back());
      stack.pop_back();
      const auto n = job.idx.size();
      std::size_t pos = 0;
      for (auto i : job.idx) pos += ts_.y[i];
      const Split s = (pos == 0 || pos == n || n < 2 * static_cast<std::size_t>(min_leaf_))
                          ? Split{}
                          : best_split(job.idx, pos);
      if (!s.found) {
        nodes_[job.node].vote = 2 * pos > n ? 1.0 : (2 * pos == n ? 0.5 : 0.0);
        continue;
      }
      std::vector<std::size_t> left, right;
      for (auto i : job.idx) (ts_.x(i, s.feature) <= s.threshold ? left : right).push_back(i);
      const auto l = static_cast<std::int32_t>(nodes_.size());
      nodes_.emplace_back();
      nodes_.emplace_back();
      auto& node = nodes_[job.node];
      node.feature = s.feature;
      node.threshold = s.threshold;
      node.left = l;
      node.right = l + 1;
      stack.push_back({l + 1, std::move(right)});
      stack.push_back({l, std::move(left)});
    }
    return std::move(nodes_);
  }

 private:
  // Best Gini split over mtry random features; keeps drawing features past
  // mtry when none of the drawn ones can split the node.
  Split best_split(const std::vector<std::size_t>& idx, std::size_t pos) {
    const std::size_t F = ts_.features();
    std::vector<std::size_t> features(F);
    std::iota(features.begin(), features.end(), 0);
    const double n = static_cast<double>(idx.size());
    const double parent = gini(n, static_cast<double>(pos));
    Split best;
    std::vector<std::pair<double, int>> vals(idx.size());
    for (std::size_t drawn = 0; drawn < F; ++drawn) {
      if (drawn >= static_cast<std::size_t>(mtry_) && best.found) break;
      std::swap(features[drawn], features[drawn + draw_index(rng_, F - drawn)]);
      const std::size_t f = features[drawn];
      for (std::size_t k = 0; k < idx.size(); ++k) vals[k] = {ts_.x(idx[k], f), ts_.y[idx[k]]};
      std::sort(vals.begin(), vals.end());
      double left_pos = 0.0;
      for (std::size_t k = 0; k + 1 < vals.size(); ++k) {
        left_pos += vals[k].second;
        if (vals[k].first == vals[k + 1].first) continue;
        const double nl = static_cast<double>(k + 1), nr = n - nl;
        if (nl < min_leaf_ || nr < min_leaf_) continue;
        const double gain = parent - (nl / n) * gini(nl, left_pos) -
                            (nr / n) * gini(nr, static_cast<double>(pos) - left_pos);
        if (!best.found || gain > best.gain) {
          double t = 0.5 * (vals[k].first + vals[k + 1].first);
          if (!(t < vals[k + 1].first)) t = vals[k].first;
          best = {true, static_cast<int>(f), t, gain};
        }
      }
    }
    return best;
  }

  const TrainingSet& ts_;
  int mtry_;
  int min_leaf_;
  Rng& rng_;
  std::vector<TreeNode> nodes_;
};

double tree_vote(const std::vector<TreeNode>& tree, std::span<const double> x) {
  std::size_t n = 0;
  while (tree[n].feature >= 0) n = x[tree[n].feature] <= tree[n].threshold ? tree[n].left : tree[n].right;
  return tree[n].vote;
}

}  // namespace

TrainedModel fit_random_forest(const TrainingSet& ts, const RfParams& hp, std::uint64_t seed) {
  ts.validate();
  require(hp.n_trees >= 1, ErrorCode::kInvalidArgument, "forest needs at least one tree");
  require(hp.min_leaf >= 1, ErrorCode::kInvalidArgument, "min_leaf must be at least 1");
  const std::size_t N = ts.size(), F = ts.features();
  const int mtry = hp.mtry > 0 ? std::min<int>(hp.mtry, static_cast<int>(F))
                               : std::max(1, static_cast<int>(std::floor(std::sqrt(double(F)))));

  TrainedModel m;
  m.hyper.kind = ModelKind::kRandomForest;
  m.hyper.rf = hp;
  m.seed = seed;
  m.feature_count = F;

  Rng rng(seed);
  TreeBuilder builder(ts, mtry, hp.min_leaf, rng);
  std::vector<double> oob_votes(N, 0.0);
  std::vector<int> oob_trees(N, 0);
  for (int t = 0; t < hp.n_trees; ++t) {
    std::vector<std::size_t> sample(N);
    std::vector<char> in_bag(N, 0);
    for (auto& s : sample) {
      s = draw_index(rng, N);
      in_bag[s] = 1;
    }
    m.forest.trees.push_back(builder.build(std::move(sample)));
    for (std::size_t i = 0; i < N; ++i)
      if (!in_bag[i]) {
        oob_votes[i] += tree_vote(m.forest.trees.back(), ts.x.row(i));
        ++oob_trees[i];
      }
  }
  std::size_t seen = 0, right = 0;
  for (std::size_t i = 0; i < N; ++i) {
    if (!oob_trees[i]) continue;
    ++seen;
    const int called = oob_votes[i] / oob_trees[i] > 0.5 ? 1 : 0;
    right += called == ts.y[i];
  }
  m.forest.oob_accuracy = seen ? static_cast<double>(right) / seen : 0.0;
  return m;
}

}  // namespace lnm
