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
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "lnm/classifiers.hpp"
#include "lnm/roc.hpp"

namespace lnm {

// ---------------------------------------------------------------------------
// Fold planning

struct RepeatPlan {
  std::uint64_t seed = 0;
  std::vector<std::size_t> samples;  // cohort row indices, ascending
  std::vector<int> fold;             // fold of samples[i]
};

struct FoldPlan {
  int k = 10;
  int per_class = 120;
  std::uint64_t seed = 0;
  std::vector<RepeatPlan> repeats;

  std::size_t cell_count() const { return repeats.size() * static_cast<std::size_t>(k); }
  std::vector<std::size_t> test_rows(int repeat, int fold) const;
  std::vector<std::size_t> train_rows(int repeat, int fold) const;
  // Inner fold ids (0..k-2) aligned with train_rows(repeat, fold).
  std::vector<int> inner_folds(int repeat, int fold) const;
};

// Balanced per-repeat samples with whole patients kept inside one fold.
FoldPlan build_fold_plan(std::span<const std::string> patient_ids, std::span<const int> labels,
                         int k = 10, int repeats = 10, int per_class = 120,
                         std::uint64_t seed = 0);

// Throws kPrecondition naming the first violated plan invariant.
void check_fold_plan(const FoldPlan& plan, std::span<const std::string> patient_ids,
                     std::span<const int> labels);

// ---------------------------------------------------------------------------
// Nested cross-validation

// Column count implied by a feature-set tag (D13, T82, A95, S6, FLAT512);
// 0 for tags with no fixed width.
std::size_t feature_set_width(const std::string& tag);

struct CvOutcome {
  int repeat = 0;
  int fold = 0;
  std::string method;
  std::string feature_set;
  double sen = 0.0;  // percent
  double spc = 0.0;
  double acc = 0.0;
  double auc = 0.0;
  double threshold = 0.0;
  std::uint64_t seed = 0;
  std::string chosen;  // winning hyperparameters
  RocCurve roc;
};

struct CvRun {
  std::vector<CvOutcome> outcomes;  // sorted by (repeat, fold)
  std::vector<std::string> notes;   // one line per excluded cell
};

struct MethodSpec {
  std::string name;
  std::vector<HyperParams> grid;
};

std::vector<HyperParams> default_grid(ModelKind kind);

struct CellTask {
  int repeat = 0;
  int fold = 0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> train;
  std::vector<int> inner_fold;
  std::vector<std::size_t> test;
};

struct CellScores {
  std::vector<double> scores;  // aligned with CellTask::test
  std::string chosen;
};

using CellScorer = std::function<CellScores(const CellTask&)>;

// Runs every (repeat, fold) cell through scorer, threads = 0 picks the
// hardware concurrency. Results do not depend on the thread count.
CvRun run_cv_cells(const FoldPlan& plan, std::span<const int> labels, const std::string& method,
                   const std::string& feature_set, const CellScorer& scorer, int threads = 0);

CvRun run_nested_cv(const Matrix& features, std::span<const int> labels, const FoldPlan& plan,
                    const MethodSpec& method, const std::string& feature_set, int threads = 0);

// ---------------------------------------------------------------------------
// Statistics

struct ShapiroWilk {
  double w = 1.0;
  double p = 1.0;
};

// Royston's approximation, 3 <= n <= 5000. A constant sample yields w = 1, p = 0.
ShapiroWilk shapiro_wilk(std::span<const double> x);

struct TTest {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
};

TTest paired_t_test(std::span<const double> a, std::span<const double> b);

struct Wilcoxon {
  double w_plus = 0.0;
  std::size_t n = 0;  // non-zero differences
  bool exact = false;
  double p = 1.0;
};

// Zero differences dropped, average ranks for ties. Exact null distribution for
// n <= 25 without ties, otherwise the normal approximation with tie and
// continuity corrections.
Wilcoxon wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b);

enum class PairedTestKind : std::uint8_t { kNone = 0, kPairedT = 1, kWilcoxon = 2 };

const char* paired_test_name(PairedTestKind kind);

struct PairedResult {
  double p = 1.0;
  PairedTestKind test = PairedTestKind::kNone;
  double statistic = 0.0;
  double normality_p = 1.0;
};

// Paired t when the differences pass Shapiro-Wilk at normality_alpha, else
// Wilcoxon. All-zero differences give p = 1 with test kNone.
PairedResult paired_compare(std::span<const double> a, std::span<const double> b,
                            double normality_alpha = 0.05);

enum class Correction : std::uint8_t { kBonferroni, kFdrBh };

std::vector<double> bonferroni_adjust(std::span<const double> p);
std::vector<bool> correct_multiple(std::span<const double> p, Correction method,
                                   double level = 0.05);

struct StatRow {
  std::string pair;  // "RF/D13 vs SVM/D13 auc"
  PairedResult result;
  bool reject_bonferroni = false;
  bool reject_fdr = false;
};

// Pairwise comparisons of every two (method, feature set) rows on AUC and on
// ACC, each metric forming its own correction family.
std::vector<StatRow> compare_rows(std::span<const CvOutcome> outcomes, double alpha = 0.05,
                                  double q = 0.05);

// ---------------------------------------------------------------------------
// Feature selection

// Greedy forward selection maximizing the mean held-out AUC of an RBF-SVM with
// default hyperparameters over the folds in fold_of. Returns column indices in
// selection order.
std::vector<std::size_t> sequential_forward_selection(const Matrix& x, std::span<const int> labels,
                                                      std::span<const int> fold_of,
                                                      std::size_t target);

// ---------------------------------------------------------------------------
// Reporting

struct SummaryRow {
  std::string method;
  std::string feature_set;
  std::size_t cells = 0;
  double sen_mean = 0.0, sen_std = 0.0;
  double spc_mean = 0.0, spc_std = 0.0;
  double acc_mean = 0.0, acc_std = 0.0;
  double auc_mean = 0.0, auc_std = 0.0;
};

// Literature reference values for the reading physicians; printed, never computed.
inline constexpr double kDoctorSen = 72.93;
inline constexpr double kDoctorSpc = 90.35;
inline constexpr double kDoctorAcc = 81.61;

// Rows in first-appearance order of (method, feature_set); std is the sample
// standard deviation.
std::vector<SummaryRow> summarize(std::span<const CvOutcome> outcomes);

// Vertical average of the curves at fpr = 0, 0.01, ..., 1.
std::vector<double> mean_roc(std::span<const RocCurve> curves, int grid_points = 101);
double tpr_at(const RocCurve& curve, double fpr);

std::string outcomes_csv(std::span<const CvOutcome> outcomes);
std::string stats_csv(std::span<const StatRow> rows);
std::string roc_csv(std::span<const CvOutcome> outcomes, int grid_points = 101);
std::string summary_table(std::span<const SummaryRow> rows);

}  // namespace lnm
