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
#include "lnm/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <map>
#include <set>
#include <thread>

#include <json.hpp>

#include "lnm/binary_io.hpp"
#include "lnm/diagnostic.hpp"
#include "lnm/error.hpp"
#include "lnm/rng.hpp"
#include "lnm/texture.hpp"

namespace lnm {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Runs fn(0..n-1) on up to `threads` workers (0 = hardware concurrency) and
// rethrows the first failure by index.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
  auto run = [&](std::size_t i) {
    try {
      fn(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  unsigned workers = threads > 0 ? static_cast<unsigned>(threads)
                                 : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(n, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) run(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) run(i);
      });
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::string fnv_hex(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string labels_hash(std::span<const int> labels) {
  std::vector<std::uint8_t> bytes(labels.begin(), labels.end());
  return fnv_hex(bytes);
}

// Writes through a temporary so an interrupted run never leaves a torn file.
void write_atomic(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  write_text_file(tmp, text);
  std::error_code ec;
  fs::rename(tmp, path, ec);
  require(!ec, ErrorCode::kIo, "cannot replace " + path + ": " + ec.message());
}

json read_json_file(const std::string& path) {
  try {
    return json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, path + ": " + e.what());
  }
}

std::vector<std::string> full_columns(bool with_flat) {
  auto cols = diagnostic_column_names();
  const auto tex = texture_column_names();
  cols.insert(cols.end(), tex.begin(), tex.end());
  if (with_flat) {
    const auto flat = flat_column_names();
    cols.insert(cols.end(), flat.begin(), flat.end());
  }
  return cols;
}

std::string checkpoint_fingerprint(const std::string& path) {
  return path.empty() ? std::string() : fnv_hex(read_file_bytes(path));
}

json cache_key(const Cohort& cohort, const std::string& cnn_fp, std::size_t columns) {
  return {{"cohort", cohort.fingerprint()},
          {"version", kFeatureVersion},
          {"cnn", cnn_fp},
          {"columns", columns}};
}

// S6 names cached in the sidecar of cache_path under a key of fold count,
// seed and labels.
std::vector<std::string> cached_s6(const std::string& cache_path, const FeatureTable& table,
                                   std::span<const int> labels, int folds, std::uint64_t seed) {
  const std::string meta_path = cache_path + ".json";
  const std::string key = std::to_string(folds) + ":" + std::to_string(seed) + ":" +
                          labels_hash(labels);
  json meta = fs::exists(meta_path) ? read_json_file(meta_path) : json::object();
  if (meta.contains("selection") && meta["selection"].contains(key))
    return meta["selection"][key].get<std::vector<std::string>>();
  auto names = select_s6(table, labels, folds, seed);
  meta["selection"][key] = names;
  write_atomic(meta_path, meta.dump(1) + "\n");
  return names;
}

}  // namespace

std::vector<std::string> diagnostic_column_names() {
  const auto& n = DiagnosticFeatures::names();
  return {n.begin(), n.end()};
}

std::vector<std::string> flat_column_names() {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < kFlatCount; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "flat.%03zu", i);
    names.push_back(buf);
  }
  return names;
}

// ---------------------------------------------------------------------------
// Feature table

std::size_t FeatureTable::column(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  require(it != columns.end(), ErrorCode::kInvalidArgument, "no feature column " + name);
  return static_cast<std::size_t>(it - columns.begin());
}

Matrix FeatureTable::select(const std::vector<std::string>& names) const {
  std::vector<std::size_t> idx;
  for (const auto& n : names) idx.push_back(column(n));
  return values.select_cols(idx);
}

FeatureTable FeatureTable::with_columns(const std::vector<std::string>& names) const {
  FeatureTable t = *this;
  t.columns = names;
  t.values = select(names);
  return t;
}

CsvTable FeatureTable::to_csv() const {
  CsvTable t;
  t.header = {"patient_id", "node_id", "label"};
  t.header.insert(t.header.end(), columns.begin(), columns.end());
  t.header.push_back("degenerate_roi");
  for (std::size_t r = 0; r < rows(); ++r) {
    std::vector<std::string> row{patient_id[r], node_id[r], std::to_string(label[r])};
    for (std::size_t c = 0; c < columns.size(); ++c) row.push_back(format_double(values(r, c)));
    row.push_back(std::to_string(degenerate[r]));
    t.rows.push_back(std::move(row));
  }
  return t;
}

FeatureTable FeatureTable::from_csv(const CsvTable& t) {
  require(t.header.size() >= 4 && t.header[0] == "patient_id" && t.header[1] == "node_id" &&
              t.header[2] == "label" && t.header.back() == "degenerate_roi",
          ErrorCode::kParse, "feature CSV lacks the id, label or flag columns");
  FeatureTable f;
  f.columns.assign(t.header.begin() + 3, t.header.end() - 1);
  f.values = Matrix(t.rows.size(), f.columns.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    require(row.size() == t.header.size(), ErrorCode::kParse,
            "feature CSV row " + std::to_string(r + 1) + " has " + std::to_string(row.size()) +
                " fields, expected " + std::to_string(t.header.size()));
    f.patient_id.push_back(row[0]);
    f.node_id.push_back(row[1]);
    f.label.push_back(static_cast<int>(parse_int(row[2])));
    for (std::size_t c = 0; c < f.columns.size(); ++c) f.values(r, c) = parse_double(row[3 + c]);
    f.degenerate.push_back(static_cast<int>(parse_int(row.back())));
  }
  return f;
}

FeatureTable compute_feature_table(const Cohort& cohort, const std::string& cache_path,
                                   const std::string& cnn_checkpoint, int threads,
                                   ExtractReport* report) {
  const bool with_flat = !cnn_checkpoint.empty();
  const auto columns = full_columns(with_flat);
  const std::size_t width = columns.size();

  // Cached rows by node id, valid only for the same key.
  std::map<std::string, std::pair<std::vector<double>, int>> cached;
  json key;
  if (!cache_path.empty()) {
    key = cache_key(cohort, checkpoint_fingerprint(cnn_checkpoint), width);
    const std::string meta_path = cache_path + ".json";
    bool usable = fs::exists(cache_path) && fs::exists(meta_path);
    if (usable) {
      const json meta = read_json_file(meta_path);
      usable = meta.contains("key") && meta["key"] == key;
    }
    if (usable) {
      const auto prior = FeatureTable::from_csv(read_csv(cache_path));
      if (prior.columns == columns)
        for (std::size_t r = 0; r < prior.rows(); ++r) {
          const auto row = prior.values.row(r);
          cached[prior.node_id[r]] = {std::vector<double>(row.begin(), row.end()),
                                      prior.degenerate[r]};
        }
    } else {
      write_atomic(meta_path, json{{"key", key}}.dump(1) + "\n");
    }
  }

  CnnModel model;
  if (with_flat) model = load_cnn_checkpoint(cnn_checkpoint);

  const std::size_t n = cohort.nodes.size();
  FeatureTable table;
  table.columns = columns;
  table.values = Matrix(n, width);
  table.degenerate.assign(n, 0);
  for (const auto& node : cohort.nodes) {
    table.patient_id.push_back(node.patient_id);
    table.node_id.push_back(node.node_id);
    table.label.push_back(node.label == Label::kMalignant ? 1 : 0);
  }
  std::vector<bool> done(n, false);
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < n; ++i) {
    const auto it = cached.find(cohort.nodes[i].node_id);
    if (it != cached.end()) {
      std::copy(it->second.first.begin(), it->second.first.end(), table.values.row(i).begin());
      table.degenerate[i] = it->second.second;
      done[i] = true;
    } else {
      todo.push_back(i);
    }
  }

  auto compute = [&](std::size_t i) {
    const NodeRecord& node = cohort.nodes[i];
    const PatientRecord& p = cohort.patient(node.patient_id);
    auto row = table.values.row(i);
    try {
      const auto d = diagnostic_feature_set(p.ct, p.pet, node).values();
      std::copy(d.begin(), d.end(), row.begin());
      const auto t = texture_feature_set_lenient(p.ct, p.pet, node);
      std::copy(t.values.begin(), t.values.end(), row.begin() + kDiagnosticCount);
      table.degenerate[i] = t.degenerate ? 1 : 0;
      if (with_flat) {
        const auto f = flatten_features(model, extract_patch_stack(p.ct, p.pet, node.center_mm,
                                                                   Pose{}, node.node_id));
        std::copy(f.begin(), f.end(), row.begin() + kDiagnosticCount + kTextureCount);
      }
    } catch (const Error& e) {
      const std::string what = e.what();
      if (what.find(node.node_id) != std::string::npos) throw;
      throw Error(e.code(), "node " + node.node_id + ": " + what);
    }
  };

  constexpr std::size_t kChunk = 64;
  for (std::size_t start = 0; start < todo.size(); start += kChunk) {
    const std::size_t end = std::min(todo.size(), start + kChunk);
    parallel_for(end - start, threads, [&](std::size_t j) { compute(todo[start + j]); });
    for (std::size_t j = start; j < end; ++j) done[todo[j]] = true;
    if (!cache_path.empty()) {
      // Checkpoint the rows finished so far.
      std::vector<std::size_t> ready;
      for (std::size_t i = 0; i < n; ++i)
        if (done[i]) ready.push_back(i);
      FeatureTable partial;
      partial.columns = columns;
      partial.values = table.values.select_rows(ready);
      for (std::size_t i : ready) {
        partial.patient_id.push_back(table.patient_id[i]);
        partial.node_id.push_back(table.node_id[i]);
        partial.label.push_back(table.label[i]);
        partial.degenerate.push_back(table.degenerate[i]);
      }
      write_atomic(cache_path, partial.to_csv().render());
    }
  }
  if (!cache_path.empty() && todo.empty() && !fs::exists(cache_path))
    write_atomic(cache_path, table.to_csv().render());

  if (report) {
    report->computed = todo.size();
    report->reused = n - todo.size();
    report->degenerate = static_cast<std::size_t>(
        std::count(table.degenerate.begin(), table.degenerate.end(), 1));
  }
  return table;
}

std::vector<std::string> select_s6(const FeatureTable& table, std::span<const int> labels,
                                   int folds, std::uint64_t seed) {
  require(labels.size() == table.rows(), ErrorCode::kInvalidArgument,
          "label count differs from the feature table");
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] ? pos : neg).push_back(i);
  const int k = static_cast<int>(std::min<std::size_t>({static_cast<std::size_t>(folds),
                                                        pos.size(), neg.size()}));
  require(k >= 2, ErrorCode::kDegenerateLabels,
          "feature selection needs at least two nodes of each class");
  Rng rng(seed);
  shuffle_range(pos.begin(), pos.end(), rng);
  shuffle_range(neg.begin(), neg.end(), rng);
  std::vector<int> fold(labels.size());
  for (std::size_t i = 0; i < pos.size(); ++i) fold[pos[i]] = static_cast<int>(i % k);
  for (std::size_t i = 0; i < neg.size(); ++i) fold[neg[i]] = static_cast<int>(i % k);

  const auto base = set_columns("A95");
  const auto picked = sequential_forward_selection(table.select(base), labels, fold, 6);
  std::vector<std::string> names;
  for (std::size_t c : picked) names.push_back(base[c]);
  return names;
}

std::vector<std::string> set_columns(const std::string& tag, const std::vector<std::string>& s6) {
  const std::string t = to_lower(tag);
  if (t == "d13") return diagnostic_column_names();
  if (t == "t82") return texture_column_names();
  if (t == "a95") return full_columns(false);
  if (t == "flat512") return flat_column_names();
  if (t == "s6") {
    require(s6.size() == 6, ErrorCode::kInvalidArgument, "S6 requires six selected features");
    return s6;
  }
  fail(ErrorCode::kInvalidArgument, "unknown feature set " + tag);
}

ExtractReport extract_features_cmd(const std::string& cohort_dir, const std::string& out_csv,
                                   const ExtractOptions& options) {
  require(!options.sets.empty(), ErrorCode::kInvalidArgument, "no feature sets requested");
  bool want_flat = false, want_s6 = false;
  for (const auto& s : options.sets) {
    const std::string t = to_lower(s);
    require(t == "d13" || t == "t82" || t == "a95" || t == "s6" || t == "flat512",
            ErrorCode::kInvalidArgument, "unknown feature set " + s);
    want_flat |= t == "flat512";
    want_s6 |= t == "s6";
  }
  require(!want_flat || !options.cnn_checkpoint.empty(), ErrorCode::kInvalidArgument,
          "FLAT512 needs a CNN checkpoint");

  const Cohort cohort = load_cohort(cohort_dir);
  const std::string cache = out_csv + ".cache.csv";
  ExtractReport report;
  const FeatureTable table =
      compute_feature_table(cohort, cache, options.cnn_checkpoint, options.threads, &report);
  if (want_s6)
    report.s6 = cached_s6(cache, table, table.label, options.selection_folds,
                          options.selection_seed);

  std::vector<std::string> cols;
  for (const auto& s : options.sets)
    for (const auto& c : set_columns(s, report.s6))
      if (std::find(cols.begin(), cols.end(), c) == cols.end()) cols.push_back(c);
  write_atomic(out_csv, table.with_columns(cols).to_csv().render());
  return report;
}

// ---------------------------------------------------------------------------
// Experiment configuration

namespace {

HyperParams params_of(ModelKind kind, const json& j) {
  HyperParams hp = HyperParams::defaults(kind);
  require(j.is_object(), ErrorCode::kParse, "grid points must be objects");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    const json& v = it.value();
    bool known = true;
    switch (kind) {
      case ModelKind::kRandomForest:
        if (k == "n_trees") hp.rf.n_trees = v.get<int>();
        else if (k == "min_leaf") hp.rf.min_leaf = v.get<int>();
        else if (k == "mtry") hp.rf.mtry = v.get<int>();
        else known = false;
        break;
      case ModelKind::kSvm:
        if (k == "sigma") hp.svm.sigma = v.get<double>();
        else if (k == "c") hp.svm.c = v.get<double>();
        else if (k == "tolerance") hp.svm.tolerance = v.get<double>();
        else if (k == "max_iterations") hp.svm.max_iterations = v.get<std::int64_t>();
        else known = false;
        break;
      case ModelKind::kAdaBoost:
        if (k == "n_stumps") hp.ada.n_stumps = v.get<int>();
        else if (k == "learn_rate") hp.ada.learn_rate = v.get<double>();
        else known = false;
        break;
      case ModelKind::kAnn:
        if (k == "hidden1") hp.ann.hidden1 = v.get<int>();
        else if (k == "hidden2") hp.ann.hidden2 = v.get<int>();
        else if (k == "epochs") hp.ann.epochs = v.get<int>();
        else if (k == "learn_rate") hp.ann.learn_rate = v.get<double>();
        else known = false;
        break;
    }
    require(known, ErrorCode::kParse,
            std::string("unknown ") + model_kind_name(kind) + " hyperparameter \"" + k + "\"");
  }
  return hp;
}

void read_schedule(const json& j, TrainSchedule& s) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    const json& v = it.value();
    if (k == "batch_size") s.batch_size = v.get<int>();
    else if (k == "momentum") s.momentum = v.get<double>();
    else if (k == "eta0") s.eta0 = v.get<double>();
    else if (k == "gamma") s.gamma = v.get<double>();
    else if (k == "eta_r") s.eta_r = v.get<double>();
    else if (k == "gamma_r") s.gamma_r = v.get<double>();
    else if (k == "epochs") s.epochs = v.get<int>();
    else if (k == "reactivation_epochs") s.reactivation_epochs = v.get<int>();
    else if (k == "max_iterations") s.max_iterations = v.get<std::int64_t>();
    else if (k == "window") s.window = v.get<int>();
    else if (k == "rel_tol") s.rel_tol = v.get<double>();
    else if (k == "data_loss_weight") s.data_loss_weight = v.get<double>();
    else fail(ErrorCode::kParse, "unknown CNN schedule key \"" + k + "\"");
  }
}

std::string resolve(const std::string& base, const std::string& path) {
  if (path.empty() || fs::path(path).is_absolute()) return path;
  return (fs::path(base) / path).lexically_normal().string();
}

bool is_cnn(const std::string& method) { return to_lower(method) == "cnn"; }

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const std::string& text, const std::string& base_dir) {
  ExperimentConfig c;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, std::string("experiment config: ") + e.what());
  }
  try {
    require(j.is_object(), ErrorCode::kParse, "experiment config must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& k = it.key();
      const json& v = it.value();
      if (k == "cohort") c.cohort_dir = resolve(base_dir, v.get<std::string>());
      else if (k == "output_dir") c.output_dir = resolve(base_dir, v.get<std::string>());
      else if (k == "methods") c.methods = v.get<std::vector<std::string>>();
      else if (k == "feature_sets") c.feature_sets = v.get<std::vector<std::string>>();
      else if (k == "alpha") c.alpha = v.get<double>();
      else if (k == "q") c.q = v.get<double>();
      else if (k == "threads") c.threads = v.get<int>();
      else if (k == "shuffle_labels") c.shuffle_labels = v.get<bool>();
      else if (k == "cv") {
        for (auto cv = v.begin(); cv != v.end(); ++cv) {
          if (cv.key() == "k") c.k = cv.value().get<int>();
          else if (cv.key() == "repeats") c.repeats = cv.value().get<int>();
          else if (cv.key() == "per_class") c.per_class = cv.value().get<int>();
          else if (cv.key() == "seed") c.seed = cv.value().get<std::uint64_t>();
          else fail(ErrorCode::kParse, "unknown cv key \"" + cv.key() + "\"");
        }
      } else if (k == "grids") {
        for (auto g = v.begin(); g != v.end(); ++g) {
          const ModelKind kind = parse_model_kind(g.key());
          std::vector<HyperParams> grid;
          for (const auto& point : g.value()) grid.push_back(params_of(kind, point));
          c.grids[model_kind_name(kind)] = grid;
        }
      } else if (k == "cnn") {
        for (auto cn = v.begin(); cn != v.end(); ++cn) {
          if (cn.key() == "checkpoint")
            c.cnn_checkpoint = resolve(base_dir, cn.value().get<std::string>());
          else if (cn.key() == "schedule") read_schedule(cn.value(), c.cnn.schedule);
          else if (cn.key() == "translation_steps_px")
            c.cnn.augmentation.translation_steps_px = cn.value().get<std::vector<int>>();
          else if (cn.key() == "rotation_angles_deg")
            c.cnn.augmentation.rotation_angles_deg = cn.value().get<std::vector<double>>();
          else fail(ErrorCode::kParse, "unknown cnn key \"" + cn.key() + "\"");
        }
      } else {
        fail(ErrorCode::kParse, "experiment config: unknown key \"" + k + "\"");
      }
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, std::string("experiment config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  return from_json(read_text_file(path), fs::path(path).parent_path().string());
}

void ExperimentConfig::validate() const {
  require(!cohort_dir.empty(), ErrorCode::kInvalidArgument, "experiment config lacks a cohort");
  require(!output_dir.empty(), ErrorCode::kInvalidArgument,
          "experiment config lacks an output directory");
  require(!methods.empty(), ErrorCode::kInvalidArgument, "experiment config lists no methods");
  bool classical = false;
  for (const auto& m : methods)
    if (!is_cnn(m)) {
      parse_model_kind(m);
      classical = true;
    }
  require(!classical || !feature_sets.empty(), ErrorCode::kInvalidArgument,
          "experiment config lists no feature sets");
  for (const auto& s : feature_sets) {
    const std::string t = to_lower(s);
    require(t == "d13" || t == "t82" || t == "a95" || t == "s6" || t == "flat512",
            ErrorCode::kInvalidArgument, "unknown feature set " + s);
    require(t != "flat512" || !cnn_checkpoint.empty(), ErrorCode::kInvalidArgument,
            "FLAT512 needs cnn.checkpoint");
  }
  require(k >= 2 && repeats >= 1 && per_class >= 1, ErrorCode::kInvalidArgument,
          "invalid cross-validation parameters");
  require(alpha > 0.0 && alpha < 1.0 && q > 0.0 && q < 1.0, ErrorCode::kInvalidArgument,
          "alpha and q must lie in (0, 1)");
  for (const auto& [name, grid] : grids)
    require(!grid.empty(), ErrorCode::kInvalidArgument, "empty grid for " + name);
  cnn.schedule.validate();
  cnn.augmentation.validate();
}

std::vector<HyperParams> ExperimentConfig::grid_for(ModelKind kind) const {
  const auto it = grids.find(model_kind_name(kind));
  return it != grids.end() ? it->second : default_grid(kind);
}

// ---------------------------------------------------------------------------
// Running

CellScores cnn_cell_scores(const Cohort& cohort, std::span<const int> labels, const CellTask& task,
                           const CnnOptions& options) {
  const auto& aug = options.augmentation;
  const std::size_t poses = aug.pose_count();
  CnnDataset data;
  data.size = task.train.size() * poses;
  data.label = [&](std::size_t i) { return labels[task.train[i / poses]]; };
  data.input = [&](std::size_t i, std::vector<double>& out) {
    const NodeRecord& node = cohort.nodes[task.train[i / poses]];
    const PatientRecord& p = cohort.patient(node.patient_id);
    out = stack_input(extract_patch_stack(p.ct, p.pet, node.center_mm, aug.pose_at(i % poses)));
  };
  TrainSchedule schedule = options.schedule;
  schedule.seed = task.seed;
  const CnnTrainResult trained = train_cnn(build_cnn(task.seed), data, schedule);

  CellScores out;
  for (std::size_t row : task.test) {
    const NodeRecord& node = cohort.nodes[row];
    const PatientRecord& p = cohort.patient(node.patient_id);
    const auto stack = extract_patch_stack(p.ct, p.pet, node.center_mm, Pose{}, node.node_id);
    out.scores.push_back(cnn_forward(trained.model, stack).probs[1]);
  }
  out.chosen = "iterations=" + std::to_string(trained.trace.empty() ? 0 : trained.trace.back().iteration);
  return out;
}

namespace {

// Null-experiment labels for one repeat: an independent permutation per repeat.
std::vector<int> permuted_labels(std::vector<int> labels, std::uint64_t seed, int repeat) {
  Rng rng(mix_seed(mix_seed(seed, 0x5ca1eULL), static_cast<std::uint64_t>(repeat)));
  shuffle_range(labels.begin(), labels.end(), rng);
  return labels;
}

void append_run(ExperimentResult& result, CvRun run, int repeat_offset) {
  for (auto& o : run.outcomes) o.repeat += repeat_offset;
  if (repeat_offset != 0) {
    for (auto& n : run.notes) {
      const auto at = n.find(" repeat 0 fold ");
      if (at != std::string::npos)
        n.replace(at, 15, " repeat " + std::to_string(repeat_offset) + " fold ");
    }
  }
  result.outcomes.insert(result.outcomes.end(), run.outcomes.begin(), run.outcomes.end());
  result.notes.insert(result.notes.end(), run.notes.begin(), run.notes.end());
}

}  // namespace

CnnTrainResult train_cnn_cmd(const ExperimentConfig& cfg, const std::string& checkpoint_path) {
  cfg.cnn.augmentation.validate();
  const Cohort cohort = load_cohort(cfg.cohort_dir);
  std::vector<int> labels;
  for (const auto& n : cohort.nodes) labels.push_back(n.label == Label::kMalignant ? 1 : 0);
  if (cfg.shuffle_labels) labels = permuted_labels(std::move(labels), cfg.seed, 0);
  const auto& aug = cfg.cnn.augmentation;
  const std::size_t poses = aug.pose_count();
  CnnDataset data;
  data.size = cohort.nodes.size() * poses;
  data.label = [&](std::size_t i) { return labels[i / poses]; };
  data.input = [&](std::size_t i, std::vector<double>& out) {
    const NodeRecord& node = cohort.nodes[i / poses];
    const PatientRecord& p = cohort.patient(node.patient_id);
    out = stack_input(extract_patch_stack(p.ct, p.pet, node.center_mm, aug.pose_at(i % poses)));
  };
  TrainSchedule schedule = cfg.cnn.schedule;
  schedule.seed = mix_seed(cfg.seed, 0xc99ULL);
  CnnTrainResult trained = train_cnn(build_cnn(schedule.seed), data, schedule);
  save_cnn_checkpoint(trained.model, checkpoint_path);
  return trained;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  require(fs::is_directory(cfg.output_dir), ErrorCode::kIo,
          "cannot create output directory " + cfg.output_dir);
  const fs::path out(cfg.output_dir);

  const Cohort cohort = load_cohort(cfg.cohort_dir);
  std::vector<int> labels;
  std::vector<std::string> patients;
  for (const auto& n : cohort.nodes) {
    labels.push_back(n.label == Label::kMalignant ? 1 : 0);
    patients.push_back(n.patient_id);
  }

  ExperimentResult result;
  const bool classical = std::any_of(cfg.methods.begin(), cfg.methods.end(),
                                     [](const std::string& m) { return !is_cnn(m); });
  FeatureTable table;
  const std::string cache = (out / "features.csv").string();
  if (classical) table = compute_feature_table(cohort, cache, cfg.cnn_checkpoint, cfg.threads);

  // A shuffled run draws a fresh permutation for every repeat, so the mean over
  // cells estimates the null expectation instead of one permutation's chance
  // association. Each repeat then needs its own plan.
  struct Block {
    std::vector<int> labels;
    FoldPlan plan;
    int repeat_offset = 0;
  };
  std::vector<Block> blocks;
  if (cfg.shuffle_labels) {
    for (int r = 0; r < cfg.repeats; ++r) {
      Block b;
      b.labels = permuted_labels(labels, cfg.seed, r);
      b.plan = build_fold_plan(patients, b.labels, cfg.k, 1, cfg.per_class, mix_seed(cfg.seed, r));
      b.repeat_offset = r;
      blocks.push_back(std::move(b));
    }
  } else {
    Block b;
    b.labels = labels;
    b.plan = build_fold_plan(patients, labels, cfg.k, cfg.repeats, cfg.per_class, cfg.seed);
    blocks.push_back(std::move(b));
  }
  for (const auto& b : blocks) check_fold_plan(b.plan, patients, b.labels);

  if (classical) {
    const bool want_s6 = std::any_of(cfg.feature_sets.begin(), cfg.feature_sets.end(),
                                     [](const std::string& s) { return to_lower(s) == "s6"; });
    if (want_s6) {
      // Shuffled runs select on the first repeat's permutation.
      result.s6 = cached_s6(cache, table, blocks.front().labels, cfg.k, cfg.seed);
      write_atomic((out / "s6.txt").string(), join(result.s6, '\n') + "\n");
    }
  }

  for (const auto& method : cfg.methods) {
    if (is_cnn(method)) {
      for (const auto& b : blocks) {
        const CellScorer scorer = [&](const CellTask& t) {
          return cnn_cell_scores(cohort, b.labels, t, cfg.cnn);
        };
        append_run(result, run_cv_cells(b.plan, b.labels, "CNN", "patch", scorer, cfg.threads),
                   b.repeat_offset);
      }
      continue;
    }
    const ModelKind kind = parse_model_kind(method);
    const MethodSpec spec{model_kind_name(kind), cfg.grid_for(kind)};
    for (const auto& set : cfg.feature_sets) {
      const Matrix x = table.select(set_columns(set, result.s6));
      std::string tag = set;
      std::transform(tag.begin(), tag.end(), tag.begin(), ::toupper);
      for (const auto& b : blocks)
        append_run(result, run_nested_cv(x, b.labels, b.plan, spec, tag, cfg.threads),
                   b.repeat_offset);
    }
  }

  result.stats = compare_rows(result.outcomes, cfg.alpha, cfg.q);
  result.summary = summarize(result.outcomes);
  write_atomic((out / "outcomes.csv").string(), outcomes_csv(result.outcomes));
  write_atomic((out / "stats.csv").string(), stats_csv(result.stats));
  write_atomic((out / "roc.csv").string(), roc_csv(result.outcomes));
  write_atomic((out / "summary.csv").string(), summary_csv(result.summary));
  write_atomic((out / "summary.txt").string(), summary_table(result.summary));
  std::string notes;
  for (const auto& n : result.notes) notes += n + "\n";
  write_atomic((out / "notes.txt").string(), notes);
  return result;
}

// ---------------------------------------------------------------------------
// Reports

std::string summary_csv(std::span<const SummaryRow> rows) {
  CsvTable t;
  t.header = {"method",   "feature_set", "cells",   "sen_mean", "sen_std", "spc_mean",
              "spc_std",  "acc_mean",    "acc_std", "auc_mean", "auc_std"};
  for (const auto& r : rows)
    t.rows.push_back({r.method, r.feature_set, std::to_string(r.cells), format_double(r.sen_mean),
                      format_double(r.sen_std), format_double(r.spc_mean),
                      format_double(r.spc_std), format_double(r.acc_mean),
                      format_double(r.acc_std), format_double(r.auc_mean),
                      format_double(r.auc_std)});
  return t.render();
}

std::vector<CvOutcome> parse_outcomes_csv(const std::string& text) {
  const CsvTable t = CsvTable::parse(text);
  const std::size_t c_repeat = t.column("repeat"), c_fold = t.column("fold"),
                    c_method = t.column("method"), c_set = t.column("feature_set"),
                    c_sen = t.column("sen"), c_spc = t.column("spc"), c_acc = t.column("acc"),
                    c_auc = t.column("auc"), c_thr = t.column("threshold"),
                    c_seed = t.column("seed");
  std::vector<CvOutcome> out;
  for (const auto& row : t.rows) {
    require(row.size() == t.header.size(), ErrorCode::kParse, "outcomes row has the wrong width");
    CvOutcome o;
    o.repeat = static_cast<int>(parse_int(row[c_repeat]));
    o.fold = static_cast<int>(parse_int(row[c_fold]));
    o.method = row[c_method];
    o.feature_set = row[c_set];
    o.sen = parse_double(row[c_sen]);
    o.spc = parse_double(row[c_spc]);
    o.acc = parse_double(row[c_acc]);
    o.auc = parse_double(row[c_auc]);
    o.threshold = parse_double(row[c_thr]);
    o.seed = std::stoull(row[c_seed]);
    out.push_back(std::move(o));
  }
  return out;
}

std::string report_text(const std::string& outcomes_csv_text, const std::string& stats_csv_text) {
  const auto outcomes = parse_outcomes_csv(outcomes_csv_text);
  std::string text = summary_table(summarize(outcomes));
  if (stats_csv_text.empty()) return text;
  const CsvTable stats = CsvTable::parse(stats_csv_text);
  const std::size_t c_pair = stats.column("pair"), c_test = stats.column("test"),
                    c_p = stats.column("p_raw"), c_b = stats.column("reject_bonferroni"),
                    c_f = stats.column("reject_fdr");
  text += "\npaired comparisons (** Bonferroni and FDR, * FDR only)\n";
  for (const auto& row : stats.rows) {
    const bool b = row[c_b] == "1", f = row[c_f] == "1";
    text += row[c_pair] + "  " + row[c_test] + "  p=" + row[c_p] + (b ? "  **" : f ? "  *" : "") +
            "\n";
  }
  return text;
}

}  // namespace lnm
