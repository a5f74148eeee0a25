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
#include "lnm/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <thread>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "lnm/error.hpp"
#include "lnm/rng.hpp"
#include "lnm/text.hpp"

namespace lnm {

// ---------------------------------------------------------------------------
// Fold planning

std::vector<std::size_t> FoldPlan::test_rows(int repeat, int fold) const {
  const auto& rp = repeats.at(static_cast<std::size_t>(repeat));
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < rp.samples.size(); ++i)
    if (rp.fold[i] == fold) rows.push_back(rp.samples[i]);
  return rows;
}

std::vector<std::size_t> FoldPlan::train_rows(int repeat, int fold) const {
  const auto& rp = repeats.at(static_cast<std::size_t>(repeat));
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < rp.samples.size(); ++i)
    if (rp.fold[i] != fold) rows.push_back(rp.samples[i]);
  return rows;
}

std::vector<int> FoldPlan::inner_folds(int repeat, int fold) const {
  const auto& rp = repeats.at(static_cast<std::size_t>(repeat));
  std::vector<int> ids;
  for (int f : rp.fold)
    if (f != fold) ids.push_back(f < fold ? f : f - 1);
  return ids;
}

namespace {

// Patient blocks within one repeat, with per-fold class counts.
struct Rebalancer {
  int k;
  double target_pos, target_neg, target_total;
  std::vector<int> block_pos, block_neg, block_fold;
  std::vector<int> pos, neg;

  double fold_cost(int p, int n) const {
    const double dp = p - target_pos, dn = n - target_neg, dt = p + n - target_total;
    return dp * dp + dn * dn + dt * dt + (p + n == 0 ? 1e6 : 0.0);
  }

  double move_delta(std::size_t b, int to) const {
    const int from = block_fold[b];
    const int bp = block_pos[b], bn = block_neg[b];
    return fold_cost(pos[from] - bp, neg[from] - bn) + fold_cost(pos[to] + bp, neg[to] + bn) -
           fold_cost(pos[from], neg[from]) - fold_cost(pos[to], neg[to]);
  }

  double swap_delta(std::size_t a, std::size_t b) const {
    const int fa = block_fold[a], fb = block_fold[b];
    const int dp = block_pos[b] - block_pos[a], dn = block_neg[b] - block_neg[a];
    return fold_cost(pos[fa] + dp, neg[fa] + dn) + fold_cost(pos[fb] - dp, neg[fb] - dn) -
           fold_cost(pos[fa], neg[fa]) - fold_cost(pos[fb], neg[fb]);
  }

  void move(std::size_t b, int to) {
    const int from = block_fold[b];
    pos[from] -= block_pos[b];
    neg[from] -= block_neg[b];
    pos[to] += block_pos[b];
    neg[to] += block_neg[b];
    block_fold[b] = to;
  }

  void run() {
    constexpr double kMinGain = 1e-9;
    const std::size_t nb = block_fold.size();
    for (;;) {
      double best = -kMinGain;
      std::size_t best_a = 0, best_b = 0;
      int best_to = -1;
      for (std::size_t b = 0; b < nb; ++b)
        for (int f = 0; f < k; ++f) {
          if (f == block_fold[b]) continue;
          const double d = move_delta(b, f);
          if (d < best) {
            best = d;
            best_a = b;
            best_to = f;
          }
        }
      bool swap = false;
      for (std::size_t a = 0; a < nb; ++a)
        for (std::size_t b = a + 1; b < nb; ++b) {
          if (block_fold[a] == block_fold[b]) continue;
          const double d = swap_delta(a, b);
          if (d < best) {
            best = d;
            best_a = a;
            best_b = b;
            swap = true;
          }
        }
      if (best >= -kMinGain) return;
      if (swap) {
        const int fa = block_fold[best_a], fb = block_fold[best_b];
        move(best_a, fb);
        move(best_b, fa);
      } else {
        move(best_a, best_to);
      }
    }
  }
};

}  // namespace

FoldPlan build_fold_plan(std::span<const std::string> patient_ids, std::span<const int> labels,
                         int k, int repeats, int per_class, std::uint64_t seed) {
  require(patient_ids.size() == labels.size(), ErrorCode::kInvalidArgument,
          "patient id and label counts differ");
  require(k >= 2, ErrorCode::kInvalidArgument, "fold count must be at least 2");
  require(repeats >= 1, ErrorCode::kInvalidArgument, "repeat count must be at least 1");
  require(per_class >= 1, ErrorCode::kInvalidArgument, "per-class sample size must be positive");

  std::vector<std::size_t> all_pos, all_neg;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    require(labels[i] == 0 || labels[i] == 1, ErrorCode::kInvalidArgument,
            "labels must be 0 or 1");
    (labels[i] ? all_pos : all_neg).push_back(i);
  }
  const std::size_t n = std::min({static_cast<std::size_t>(per_class), all_pos.size(),
                                  all_neg.size()});
  require(n > 0, ErrorCode::kInfeasiblePlan, "cohort lacks one of the classes");

  FoldPlan plan;
  plan.k = k;
  plan.per_class = per_class;
  plan.seed = seed;
  for (int r = 0; r < repeats; ++r) {
    RepeatPlan rp;
    rp.seed = mix_seed(seed, static_cast<std::uint64_t>(r));
    Rng rng(rp.seed);

    auto pos = all_pos, neg = all_neg;
    shuffle_range(pos.begin(), pos.end(), rng);
    shuffle_range(neg.begin(), neg.end(), rng);
    pos.resize(n);
    neg.resize(n);

    // Stratified round-robin; negatives continue where positives stopped so
    // fold totals differ by at most one.
    std::map<std::size_t, int> fold_of;
    for (std::size_t i = 0; i < n; ++i) fold_of[pos[i]] = static_cast<int>(i % k);
    for (std::size_t i = 0; i < n; ++i) fold_of[neg[i]] = static_cast<int>((n + i) % k);

    // Patient blocks in first-appearance order of the sorted sample.
    std::map<std::string, std::size_t> block_index;
    std::vector<std::vector<std::size_t>> blocks;
    for (const auto& [row, f] : fold_of) {
      auto [it, inserted] = block_index.try_emplace(patient_ids[row], blocks.size());
      if (inserted) blocks.emplace_back();
      blocks[it->second].push_back(row);
    }
    require(blocks.size() >= static_cast<std::size_t>(k), ErrorCode::kInfeasiblePlan,
            "repeat " + std::to_string(r) + " samples " + std::to_string(blocks.size()) +
                " patients, fewer than " + std::to_string(k) + " folds");

    Rebalancer rb;
    rb.k = k;
    rb.target_pos = rb.target_neg = static_cast<double>(n) / k;
    rb.target_total = 2.0 * static_cast<double>(n) / k;
    rb.pos.assign(k, 0);
    rb.neg.assign(k, 0);
    for (const auto& block : blocks) {
      // Majority fold of the patient's samples, lowest index on ties.
      std::vector<int> votes(k, 0);
      int bp = 0, bn = 0;
      for (std::size_t row : block) {
        ++votes[fold_of[row]];
        (labels[row] ? bp : bn) += 1;
      }
      const int f = static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
      rb.block_pos.push_back(bp);
      rb.block_neg.push_back(bn);
      rb.block_fold.push_back(f);
      rb.pos[f] += bp;
      rb.neg[f] += bn;
    }
    rb.run();
    for (int f = 0; f < k; ++f)
      require(rb.pos[f] + rb.neg[f] > 0, ErrorCode::kInfeasiblePlan,
              "repeat " + std::to_string(r) + " leaves fold " + std::to_string(f) +
                  " empty after patient repair");

    for (std::size_t b = 0; b < blocks.size(); ++b)
      for (std::size_t row : blocks[b]) fold_of[row] = rb.block_fold[b];
    for (const auto& [row, f] : fold_of) {
      rp.samples.push_back(row);
      rp.fold.push_back(f);
    }
    plan.repeats.push_back(std::move(rp));
  }
  return plan;
}

void check_fold_plan(const FoldPlan& plan, std::span<const std::string> patient_ids,
                     std::span<const int> labels) {
  auto violated = [](const std::string& what) { fail(ErrorCode::kPrecondition, what); };
  std::size_t avail_pos = 0;
  for (int y : labels) avail_pos += y == 1;
  const std::size_t avail_neg = labels.size() - avail_pos;
  const std::size_t n =
      std::min({static_cast<std::size_t>(plan.per_class), avail_pos, avail_neg});
  for (std::size_t r = 0; r < plan.repeats.size(); ++r) {
    const auto& rp = plan.repeats[r];
    const std::string at = "repeat " + std::to_string(r) + ": ";
    if (rp.samples.size() != rp.fold.size()) violated(at + "sample and fold lengths differ");
    if (!std::is_sorted(rp.samples.begin(), rp.samples.end()) ||
        std::adjacent_find(rp.samples.begin(), rp.samples.end()) != rp.samples.end())
      violated(at + "samples not strictly ascending");
    std::size_t npos = 0;
    std::map<std::string, int> patient_fold;
    std::vector<std::size_t> fold_size(plan.k, 0);
    for (std::size_t i = 0; i < rp.samples.size(); ++i) {
      const std::size_t row = rp.samples[i];
      if (row >= labels.size()) violated(at + "sample index out of range");
      const int f = rp.fold[i];
      if (f < 0 || f >= plan.k) violated(at + "fold id out of range");
      ++fold_size[f];
      npos += labels[row] == 1;
      auto [it, inserted] = patient_fold.try_emplace(patient_ids[row], f);
      if (!inserted && it->second != f)
        violated(at + "patient " + patient_ids[row] + " spans folds");
    }
    if (npos != n || rp.samples.size() - npos != n)
      violated(at + "class counts are not " + std::to_string(n) + " each");
    for (int f = 0; f < plan.k; ++f)
      if (fold_size[f] == 0) violated(at + "fold " + std::to_string(f) + " is empty");
  }
}

// ---------------------------------------------------------------------------
// Nested cross-validation

std::size_t feature_set_width(const std::string& tag) {
  const std::string t = to_lower(tag);
  if (t == "d13") return 13;
  if (t == "t82") return 82;
  if (t == "a95") return 95;
  if (t == "s6") return 6;
  if (t == "flat512") return 512;
  return 0;
}

std::vector<HyperParams> default_grid(ModelKind kind) {
  std::vector<HyperParams> grid;
  if (kind == ModelKind::kSvm) {
    for (double sigma : {2.0, 4.0, 8.0, 16.0})
      for (double c : {1.0, 10.0}) {
        auto hp = HyperParams::defaults(kind);
        hp.svm.sigma = sigma;
        hp.svm.c = c;
        grid.push_back(hp);
      }
  } else {
    grid.push_back(HyperParams::defaults(kind));
  }
  return grid;
}

CvRun run_cv_cells(const FoldPlan& plan, std::span<const int> labels, const std::string& method,
                   const std::string& feature_set, const CellScorer& scorer, int threads) {
  std::vector<CellTask> tasks;
  CvRun run;
  for (std::size_t r = 0; r < plan.repeats.size(); ++r)
    for (int f = 0; f < plan.k; ++f) {
      CellTask t;
      t.repeat = static_cast<int>(r);
      t.fold = f;
      t.seed = mix_seed(plan.repeats[r].seed, 1 + static_cast<std::uint64_t>(f));
      t.train = plan.train_rows(t.repeat, f);
      t.inner_fold = plan.inner_folds(t.repeat, f);
      t.test = plan.test_rows(t.repeat, f);
      for (std::size_t row : t.train)
        require(row < labels.size(), ErrorCode::kInvalidArgument, "plan row out of range");
      for (std::size_t row : t.test)
        require(row < labels.size(), ErrorCode::kInvalidArgument, "plan row out of range");
      auto single_class = [&](const std::vector<std::size_t>& rows) {
        std::size_t p = 0;
        for (std::size_t row : rows) p += labels[row] == 1;
        return p == 0 || p == rows.size();
      };
      const std::string cell = method + "/" + feature_set + " repeat " + std::to_string(r) +
                               " fold " + std::to_string(f);
      if (single_class(t.test)) {
        run.notes.push_back(cell + ": single-class test fold, excluded");
        continue;
      }
      if (single_class(t.train)) {
        run.notes.push_back(cell + ": single-class training folds, excluded");
        continue;
      }
      tasks.push_back(std::move(t));
    }

  std::vector<CvOutcome> results(tasks.size());
  std::vector<std::exception_ptr> errors(tasks.size());
  auto work = [&](std::size_t i) {
    const CellTask& t = tasks[i];
    try {
      CellScores cs = scorer(t);
      require(cs.scores.size() == t.test.size(), ErrorCode::kInternal,
              "scorer returned the wrong number of scores");
      std::vector<int> y;
      for (std::size_t row : t.test) y.push_back(labels[row]);
      CvOutcome o;
      o.repeat = t.repeat;
      o.fold = t.fold;
      o.method = method;
      o.feature_set = feature_set;
      o.seed = t.seed;
      o.chosen = std::move(cs.chosen);
      o.roc = roc_curve(cs.scores, y);
      o.auc = auc(o.roc);
      const CutPoint cut = optimal_cut_point(o.roc);
      o.threshold = cut.threshold;
      o.sen = cut.sen;
      o.spc = cut.spc;
      o.acc = confusion_at(cs.scores, y, cut.threshold).acc();
      results[i] = std::move(o);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };

  unsigned workers = threads > 0 ? static_cast<unsigned>(threads)
                                 : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(1, tasks.size())));
  if (workers <= 1) {
    for (std::size_t i = 0; i < tasks.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i; (i = next.fetch_add(1)) < tasks.size();) work(i);
      });
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  run.outcomes = std::move(results);
  return run;
}

CvRun run_nested_cv(const Matrix& features, std::span<const int> labels, const FoldPlan& plan,
                    const MethodSpec& method, const std::string& feature_set, int threads) {
  require(features.rows() == labels.size(), ErrorCode::kInvalidArgument,
          "feature rows and labels differ in length");
  const std::size_t width = feature_set_width(feature_set);
  require(width == 0 || features.cols() == width, ErrorCode::kInvalidArgument,
          "feature set " + feature_set + " expects " + std::to_string(width) + " columns, got " +
              std::to_string(features.cols()));
  require(!method.grid.empty(), ErrorCode::kInvalidArgument,
          "method " + method.name + " has an empty grid");
  auto scorer = [&](const CellTask& t) {
    TrainingSet ts;
    ts.x = features.select_rows(t.train);
    for (std::size_t row : t.train) ts.y.push_back(labels[row]);
    const GridResult g = grid_search(ts, method.grid, t.inner_fold, t.seed);
    const TrainedModel model = fit_model(ts, g.best, t.seed);
    return CellScores{model.scores(features.select_rows(t.test)), g.best.describe()};
  };
  return run_cv_cells(plan, labels, method.name, feature_set, scorer, threads);
}

// ---------------------------------------------------------------------------
// Statistics

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

double poly(std::initializer_list<double> c, double x) {
  double result = 0.0, power = 1.0;
  for (double v : c) {
    result += v * power;
    power *= x;
  }
  return result;
}

std::vector<double> differences(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), ErrorCode::kInvalidArgument, "paired samples differ in length");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return d;
}

}  // namespace

ShapiroWilk shapiro_wilk(std::span<const double> sample) {
  const std::size_t n = sample.size();
  require(n >= 3 && n <= 5000, ErrorCode::kInvalidArgument,
          "Shapiro-Wilk needs between 3 and 5000 values");
  std::vector<double> x(sample.begin(), sample.end());
  std::sort(x.begin(), x.end());
  if (x.back() - x.front() <= 0.0) return {1.0, 0.0};

  // Royston's coefficient approximation.
  const std::size_t half = n / 2;
  const double an = static_cast<double>(n);
  std::vector<double> a(half);
  if (n == 3) {
    a[0] = std::sqrt(0.5);
  } else {
    std::vector<double> m(half);
    double summ2 = 0.0;
    for (std::size_t i = 0; i < half; ++i) {
      m[i] = normal_quantile((static_cast<double>(i + 1) - 0.375) / (an + 0.25));
      summ2 += m[i] * m[i];
    }
    summ2 *= 2.0;
    const double ssumm2 = std::sqrt(summ2);
    const double rsn = 1.0 / std::sqrt(an);
    const double a1 =
        poly({0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056}, rsn) - m[0] / ssumm2;
    std::size_t first;
    double fac;
    if (n > 5) {
      first = 2;
      const double a2 =
          -m[1] / ssumm2 + poly({0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633}, rsn);
      fac = std::sqrt((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) /
                      (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
      a[1] = a2;
    } else {
      first = 1;
      fac = std::sqrt((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1));
    }
    a[0] = a1;
    for (std::size_t i = first; i < half; ++i) a[i] = -m[i] / fac;
  }

  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / an;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  double num = 0.0;
  for (std::size_t i = 0; i < half; ++i) num += a[i] * (x[n - 1 - i] - x[i]);
  const double w = std::min(1.0, num * num / ss);

  ShapiroWilk out;
  out.w = w;
  if (n == 3) {
    constexpr double kPi6 = 1.90985931710274;   // 6 / pi
    constexpr double kStqr = 1.04719755119660;  // pi / 3
    out.p = std::max(0.0, kPi6 * (std::asin(std::sqrt(w)) - kStqr));
    return out;
  }
  double w1 = std::log(1.0 - w);
  double mu, sigma;
  if (n <= 11) {
    const double gamma = poly({-2.273, 0.459}, an);
    if (w1 >= gamma) {
      out.p = 1e-99;
      return out;
    }
    w1 = -std::log(gamma - w1);
    mu = poly({0.5440, -0.39978, 0.025054, -6.714e-4}, an);
    sigma = std::exp(poly({1.3822, -0.77857, 0.062767, -0.0020322}, an));
  } else {
    const double ln = std::log(an);
    mu = poly({-1.5861, -0.31082, -0.083751, 0.0038915}, ln);
    sigma = std::exp(poly({-0.4803, -0.082676, 0.0030302}, ln));
  }
  out.p = 1.0 - normal_cdf((w1 - mu) / sigma);
  return out;
}

TTest paired_t_test(std::span<const double> a, std::span<const double> b) {
  const auto d = differences(a, b);
  require(d.size() >= 2, ErrorCode::kInvalidArgument, "paired t test needs two pairs");
  const double n = static_cast<double>(d.size());
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : d) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  TTest out;
  out.df = n - 1.0;
  if (sd == 0.0) {
    out.t = mean == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), mean);
    out.p = mean == 0.0 ? 1.0 : 0.0;
    return out;
  }
  out.t = mean / (sd / std::sqrt(n));
  const boost::math::students_t_distribution<double> dist(out.df);
  out.p = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(out.t))));
  return out;
}

Wilcoxon wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) {
  std::vector<double> d;
  for (double v : differences(a, b))
    if (v != 0.0) d.push_back(v);
  Wilcoxon out;
  out.n = d.size();
  if (d.empty()) return out;

  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return std::fabs(d[i]) < std::fabs(d[j]); });
  std::vector<double> rank(d.size());
  double tie_term = 0.0;
  bool ties = false;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && std::fabs(d[order[j + 1]]) == std::fabs(d[order[i]])) ++j;
    const double t = static_cast<double>(j - i + 1);
    if (t > 1) ties = true;
    tie_term += t * t * t - t;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t m = i; m <= j; ++m) rank[order[m]] = avg;
    i = j + 1;
  }
  for (std::size_t i = 0; i < d.size(); ++i)
    if (d[i] > 0) out.w_plus += rank[i];

  const std::size_t n = d.size();
  if (n <= 25 && !ties) {
    out.exact = true;
    const std::size_t max_sum = n * (n + 1) / 2;
    std::vector<double> count(max_sum + 1, 0.0);
    count[0] = 1.0;
    for (std::size_t r = 1; r <= n; ++r)
      for (std::size_t s = max_sum; s >= r; --s) count[s] += count[s - r];
    const double total = std::ldexp(1.0, static_cast<int>(n));
    const auto w = static_cast<std::size_t>(std::llround(out.w_plus));
    double lower = 0.0, upper = 0.0;
    for (std::size_t s = 0; s <= max_sum; ++s) {
      if (s <= w) lower += count[s];
      if (s >= w) upper += count[s];
    }
    out.p = std::min(1.0, 2.0 * std::min(lower, upper) / total);
    return out;
  }
  const double nn = static_cast<double>(n);
  const double mean = nn * (nn + 1.0) / 4.0;
  const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
  if (var <= 0.0) return out;
  const double z = std::max(std::fabs(out.w_plus - mean) - 0.5, 0.0) / std::sqrt(var);
  out.p = std::min(1.0, 2.0 * normal_cdf(-z));
  return out;
}

const char* paired_test_name(PairedTestKind kind) {
  switch (kind) {
    case PairedTestKind::kPairedT: return "t";
    case PairedTestKind::kWilcoxon: return "wilcoxon";
    case PairedTestKind::kNone: break;
  }
  return "none";
}

PairedResult paired_compare(std::span<const double> a, std::span<const double> b,
                            double normality_alpha) {
  const auto d = differences(a, b);
  require(d.size() >= 6, ErrorCode::kInvalidArgument,
          "paired comparison needs at least 6 pairs, got " + std::to_string(d.size()));
  for (double v : d)
    require(std::isfinite(v), ErrorCode::kInvalidArgument, "paired samples must be finite");
  PairedResult out;
  if (std::all_of(d.begin(), d.end(), [](double v) { return v == 0.0; })) return out;
  const ShapiroWilk sw = shapiro_wilk(d);
  out.normality_p = sw.p;
  if (sw.p >= normality_alpha) {
    const TTest t = paired_t_test(a, b);
    out.test = PairedTestKind::kPairedT;
    out.statistic = t.t;
    out.p = t.p;
  } else {
    const Wilcoxon w = wilcoxon_signed_rank(a, b);
    out.test = PairedTestKind::kWilcoxon;
    out.statistic = w.w_plus;
    out.p = w.p;
  }
  return out;
}

std::vector<double> bonferroni_adjust(std::span<const double> p) {
  std::vector<double> adj;
  for (double v : p) adj.push_back(std::min(1.0, v * static_cast<double>(p.size())));
  return adj;
}

std::vector<bool> correct_multiple(std::span<const double> p, Correction method, double level) {
  for (double v : p)
    require(v >= 0.0 && v <= 1.0, ErrorCode::kInvalidArgument, "p-values must lie in [0, 1]");
  const double m = static_cast<double>(p.size());
  std::vector<bool> reject(p.size(), false);
  if (method == Correction::kBonferroni) {
    for (std::size_t i = 0; i < p.size(); ++i) reject[i] = p[i] * m < level;
    return reject;
  }
  std::vector<std::size_t> order(p.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return p[i] < p[j]; });
  std::size_t last = 0;
  for (std::size_t r = 1; r <= order.size(); ++r)
    if (p[order[r - 1]] <= static_cast<double>(r) * level / m) last = r;
  for (std::size_t r = 0; r < last; ++r) reject[order[r]] = true;
  return reject;
}

namespace {

struct RowKey {
  std::string method, feature_set;
  bool operator==(const RowKey&) const = default;
  std::string label() const { return method + "/" + feature_set; }
};

std::vector<RowKey> row_keys(std::span<const CvOutcome> outcomes) {
  std::vector<RowKey> keys;
  for (const auto& o : outcomes) {
    RowKey k{o.method, o.feature_set};
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
  }
  return keys;
}

}  // namespace

std::vector<StatRow> compare_rows(std::span<const CvOutcome> outcomes, double alpha, double q) {
  const auto keys = row_keys(outcomes);
  // (repeat, fold) -> outcome, per row.
  std::vector<std::map<std::pair<int, int>, const CvOutcome*>> cells(keys.size());
  for (const auto& o : outcomes) {
    const auto idx = static_cast<std::size_t>(
        std::find(keys.begin(), keys.end(), RowKey{o.method, o.feature_set}) - keys.begin());
    cells[idx][{o.repeat, o.fold}] = &o;
  }
  std::vector<StatRow> all;
  for (const char* metric : {"auc", "acc"}) {
    const bool use_auc = std::string(metric) == "auc";
    std::vector<StatRow> family;
    for (std::size_t i = 0; i < keys.size(); ++i)
      for (std::size_t j = i + 1; j < keys.size(); ++j) {
        std::vector<double> a, b;
        for (const auto& [cell, oa] : cells[i]) {
          const auto it = cells[j].find(cell);
          if (it == cells[j].end()) continue;
          a.push_back(use_auc ? oa->auc : oa->acc);
          b.push_back(use_auc ? it->second->auc : it->second->acc);
        }
        if (a.size() < 6) continue;
        StatRow row;
        row.pair = keys[i].label() + " vs " + keys[j].label() + " " + metric;
        row.result = paired_compare(a, b);
        family.push_back(std::move(row));
      }
    std::vector<double> p;
    for (const auto& row : family) p.push_back(row.result.p);
    const auto bonf = correct_multiple(p, Correction::kBonferroni, alpha);
    const auto fdr = correct_multiple(p, Correction::kFdrBh, q);
    for (std::size_t i = 0; i < family.size(); ++i) {
      family[i].reject_bonferroni = bonf[i];
      family[i].reject_fdr = fdr[i];
      all.push_back(std::move(family[i]));
    }
  }
  return all;
}

// ---------------------------------------------------------------------------
// Feature selection

std::vector<std::size_t> sequential_forward_selection(const Matrix& x, std::span<const int> labels,
                                                      std::span<const int> fold_of,
                                                      std::size_t target) {
  require(x.rows() == labels.size() && fold_of.size() == labels.size(),
          ErrorCode::kInvalidArgument, "selection inputs differ in length");
  require(target <= x.cols(), ErrorCode::kInvalidArgument,
          "selection target " + std::to_string(target) + " exceeds the " +
              std::to_string(x.cols()) + " available features");
  const int k = fold_of.empty() ? 0 : *std::max_element(fold_of.begin(), fold_of.end()) + 1;

  struct Split {
    std::vector<std::size_t> train, test;
    std::vector<int> train_y, test_y;
  };
  std::vector<Split> splits;
  for (int f = 0; f < k; ++f) {
    Split s;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      (fold_of[i] == f ? s.test : s.train).push_back(i);
      (fold_of[i] == f ? s.test_y : s.train_y).push_back(labels[i]);
    }
    auto both = [](const std::vector<int>& y) {
      const auto p = std::count(y.begin(), y.end(), 1);
      return p > 0 && p < static_cast<long>(y.size());
    };
    if (both(s.train_y) && both(s.test_y)) splits.push_back(std::move(s));
  }
  require(!splits.empty(), ErrorCode::kDegenerateLabels,
          "no selection fold has both classes in training and test rows");

  const SvmParams svm = HyperParams::defaults(ModelKind::kSvm).svm;
  auto score = [&](const std::vector<std::size_t>& cols) {
    const Matrix xs = x.select_cols(cols);
    double sum = 0.0;
    for (const auto& s : splits) {
      TrainingSet ts;
      ts.x = xs.select_rows(s.train);
      ts.y = s.train_y;
      const TrainedModel model = fit_svm_rbf(ts, svm);
      sum += auc(model.scores(xs.select_rows(s.test)), s.test_y);
    }
    return sum / static_cast<double>(splits.size());
  };

  std::vector<std::size_t> chosen;
  std::vector<bool> used(x.cols(), false);
  while (chosen.size() < target) {
    double best = -std::numeric_limits<double>::infinity();
    std::size_t best_col = 0;
    for (std::size_t c = 0; c < x.cols(); ++c) {
      if (used[c]) continue;
      auto cols = chosen;
      cols.push_back(c);
      const double s = score(cols);
      if (s > best) {
        best = s;
        best_col = c;
      }
    }
    used[best_col] = true;
    chosen.push_back(best_col);
  }
  return chosen;
}

// ---------------------------------------------------------------------------
// Reporting

namespace {

void mean_std(const std::vector<double>& v, double& mean, double& sd) {
  const double n = static_cast<double>(v.size());
  mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  sd = v.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
}

}  // namespace

std::vector<SummaryRow> summarize(std::span<const CvOutcome> outcomes) {
  std::vector<SummaryRow> rows;
  for (const auto& key : row_keys(outcomes)) {
    std::vector<double> sen, spc, acc, au;
    for (const auto& o : outcomes)
      if (o.method == key.method && o.feature_set == key.feature_set) {
        sen.push_back(o.sen);
        spc.push_back(o.spc);
        acc.push_back(o.acc);
        au.push_back(o.auc);
      }
    SummaryRow r;
    r.method = key.method;
    r.feature_set = key.feature_set;
    r.cells = sen.size();
    mean_std(sen, r.sen_mean, r.sen_std);
    mean_std(spc, r.spc_mean, r.spc_std);
    mean_std(acc, r.acc_mean, r.acc_std);
    mean_std(au, r.auc_mean, r.auc_std);
    rows.push_back(r);
  }
  return rows;
}

double tpr_at(const RocCurve& curve, double fpr) {
  const auto& pts = curve.points;
  require(!pts.empty(), ErrorCode::kInvalidArgument, "empty ROC curve");
  std::size_t last = 0;
  bool found = false;
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (pts[i].fpr <= fpr) {
      last = i;
      found = true;
    }
  if (!found) return 0.0;
  if (pts[last].fpr == fpr || last + 1 == pts.size()) return pts[last].tpr;
  const auto& a = pts[last];
  const auto& b = pts[last + 1];
  return a.tpr + (b.tpr - a.tpr) * (fpr - a.fpr) / (b.fpr - a.fpr);
}

std::vector<double> mean_roc(std::span<const RocCurve> curves, int grid_points) {
  require(grid_points >= 2, ErrorCode::kInvalidArgument, "ROC grid needs two points");
  require(!curves.empty(), ErrorCode::kInvalidArgument, "no ROC curves to average");
  std::vector<double> mean(static_cast<std::size_t>(grid_points), 0.0);
  for (int g = 0; g < grid_points; ++g) {
    const double fpr = static_cast<double>(g) / (grid_points - 1);
    for (const auto& c : curves) mean[g] += tpr_at(c, fpr);
    mean[g] /= static_cast<double>(curves.size());
  }
  return mean;
}

std::string outcomes_csv(std::span<const CvOutcome> outcomes) {
  CsvTable t;
  t.header = {"repeat", "fold", "method", "feature_set", "sen", "spc",
              "acc",    "auc",  "threshold", "seed"};
  for (const auto& o : outcomes)
    t.rows.push_back({std::to_string(o.repeat), std::to_string(o.fold), o.method, o.feature_set,
                      format_double(o.sen), format_double(o.spc), format_double(o.acc),
                      format_double(o.auc), format_double(o.threshold), std::to_string(o.seed)});
  return t.render();
}

std::string stats_csv(std::span<const StatRow> rows) {
  CsvTable t;
  t.header = {"pair", "test", "p_raw", "reject_bonferroni", "reject_fdr"};
  for (const auto& r : rows)
    t.rows.push_back({r.pair, paired_test_name(r.result.test), format_double(r.result.p),
                      r.reject_bonferroni ? "1" : "0", r.reject_fdr ? "1" : "0"});
  return t.render();
}

std::string roc_csv(std::span<const CvOutcome> outcomes, int grid_points) {
  CsvTable t;
  t.header = {"method", "feature_set", "fpr", "tpr"};
  for (const auto& key : row_keys(outcomes)) {
    std::vector<RocCurve> curves;
    for (const auto& o : outcomes)
      if (o.method == key.method && o.feature_set == key.feature_set) curves.push_back(o.roc);
    const auto mean = mean_roc(curves, grid_points);
    for (int g = 0; g < grid_points; ++g)
      t.rows.push_back({key.method, key.feature_set,
                        format_double(static_cast<double>(g) / (grid_points - 1)),
                        format_double(mean[g])});
  }
  return t.render();
}

std::string summary_table(std::span<const SummaryRow> rows) {
  auto cell = [](double mean, double sd, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f +- %.*f", digits, mean, digits, sd);
    return std::string(buf);
  };
  auto pad = [](std::string s, std::size_t w) {
    if (s.size() < w) s.append(w - s.size(), ' ');
    return s;
  };
  std::string out = pad("method", 10) + pad("features", 10) + pad("SEN/%", 18) +
                    pad("SPC/%", 18) + pad("ACC/%", 18) + "AUC\n";
  for (const auto& r : rows)
    out += pad(r.method, 10) + pad(r.feature_set, 10) + pad(cell(r.sen_mean, r.sen_std, 2), 18) +
           pad(cell(r.spc_mean, r.spc_std, 2), 18) + pad(cell(r.acc_mean, r.acc_std, 2), 18) +
           cell(r.auc_mean, r.auc_std, 4) + "\n";
  auto fixed = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };
  out += pad("Doctors", 10) + pad("-", 10) + pad(fixed(kDoctorSen), 18) +
         pad(fixed(kDoctorSpc), 18) + pad(fixed(kDoctorAcc), 18) + "-\n";
  out += "(Doctors row: published reference constants, not computed here.)\n";
  return out;
}

}  // namespace lnm
