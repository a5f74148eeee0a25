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
#include <map>
#include <string>
#include <vector>

#include "lnm/classifiers.hpp"
#include "lnm/cohort.hpp"
#include "lnm/convnet.hpp"
#include "lnm/evaluation.hpp"
#include "lnm/text.hpp"

namespace lnm {

// Bumped whenever a feature definition changes; part of the cache key.
inline constexpr const char* kFeatureVersion = "lnm-features-1";
inline constexpr std::size_t kFlatCount = 512;

std::vector<std::string> diagnostic_column_names();
std::vector<std::string> flat_column_names();  // flat.000 .. flat.511

// One row per node: ids, label, named feature columns and the degenerate-ROI flag.
struct FeatureTable {
  std::vector<std::string> patient_id;
  std::vector<std::string> node_id;
  std::vector<int> label;
  std::vector<std::string> columns;
  Matrix values;
  std::vector<int> degenerate;

  std::size_t rows() const { return node_id.size(); }
  std::size_t column(const std::string& name) const;
  Matrix select(const std::vector<std::string>& names) const;
  FeatureTable with_columns(const std::vector<std::string>& names) const;
  CsvTable to_csv() const;
  static FeatureTable from_csv(const CsvTable& table);
};

struct ExtractReport {
  std::size_t computed = 0;
  std::size_t reused = 0;
  std::size_t degenerate = 0;
  std::vector<std::string> s6;
};

// Every node's 95 features (plus 512 flatten features with a checkpoint).
// With a non-empty cache_path, rows already cached for the same cohort,
// feature version and checkpoint are reused and progress is saved as it goes.
FeatureTable compute_feature_table(const Cohort& cohort, const std::string& cache_path,
                                   const std::string& cnn_checkpoint, int threads,
                                   ExtractReport* report = nullptr);

// Six of the 95 columns chosen by forward selection over stratified node folds.
std::vector<std::string> select_s6(const FeatureTable& table, std::span<const int> labels,
                                   int folds, std::uint64_t seed);

// Column names of a feature set: D13, T82, A95, S6 or FLAT512.
std::vector<std::string> set_columns(const std::string& tag,
                                     const std::vector<std::string>& s6 = {});

struct ExtractOptions {
  std::vector<std::string> sets{"a95"};
  std::string cnn_checkpoint;
  int threads = 0;
  int selection_folds = 10;
  std::uint64_t selection_seed = 1;
};

// Writes out_csv with the columns of the requested sets (in set order,
// duplicates dropped); the full table is cached beside it.
ExtractReport extract_features_cmd(const std::string& cohort_dir, const std::string& out_csv,
                                   const ExtractOptions& options);

struct CnnOptions {
  TrainSchedule schedule;
  AugmentationConfig augmentation;
};

struct ExperimentConfig {
  std::string cohort_dir;
  std::string output_dir;
  std::vector<std::string> methods{"RF", "SVM", "AdaBoost", "ANN"};
  std::vector<std::string> feature_sets{"D13", "T82", "A95", "S6"};
  int k = 10;
  int repeats = 10;
  int per_class = 120;
  std::uint64_t seed = 1;
  double alpha = 0.05;
  double q = 0.05;
  int threads = 0;
  bool shuffle_labels = false;  // null run: labels re-permuted independently per repeat
  std::map<std::string, std::vector<HyperParams>> grids;  // by method name
  std::string cnn_checkpoint;  // source of FLAT512 features
  CnnOptions cnn;

  // Relative paths resolve against base_dir.
  static ExperimentConfig from_json(const std::string& text, const std::string& base_dir = ".");
  static ExperimentConfig from_file(const std::string& path);
  void validate() const;
  std::vector<HyperParams> grid_for(ModelKind kind) const;
};

struct ExperimentResult {
  std::vector<CvOutcome> outcomes;
  std::vector<StatRow> stats;
  std::vector<SummaryRow> summary;
  std::vector<std::string> notes;
  std::vector<std::string> s6;
};

// Writes features.csv, outcomes.csv, stats.csv, roc.csv, summary.csv,
// summary.txt and notes.txt into the output directory.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

// Scores test nodes of one cell with a network trained on the augmented
// training nodes.
CellScores cnn_cell_scores(const Cohort& cohort, std::span<const int> labels, const CellTask& task,
                           const CnnOptions& options);

// Trains one network on every node of the configured cohort (all poses) and
// saves it as a checkpoint usable for FLAT512 features. With shuffle_labels
// the labels are the permutation run_experiment uses for its first repeat.
CnnTrainResult train_cnn_cmd(const ExperimentConfig& cfg, const std::string& checkpoint_path);

std::string summary_csv(std::span<const SummaryRow> rows);
std::vector<CvOutcome> parse_outcomes_csv(const std::string& text);
// Summary table recomputed from outcomes, followed by the stats rows.
std::string report_text(const std::string& outcomes_csv_text, const std::string& stats_csv_text);

}  // namespace lnm
