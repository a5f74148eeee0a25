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
// Acceptance suite: one pass/fail line per criterion.
//   acceptance            run every criterion
//   acceptance 3 7        run the listed criteria
// Exit status is nonzero if any selected criterion fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "lnm/binary_io.hpp"
#include "lnm/error.hpp"
#include "lnm/experiment.hpp"
#include "lnm/text.hpp"
#include "oracles.hpp"

using namespace lnm;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

// Collects failed checks for one criterion.
class Verdict {
 public:
  void expect(bool ok, const std::string& what) {
    ++checks_;
    if (!ok && failures_.size() < 8) failures_.push_back(what);
    if (!ok) ++failed_;
  }
  void note(const std::string& s) { notes_ += (notes_.empty() ? "" : "; ") + s; }
  bool ok() const { return failed_ == 0; }
  std::string detail() const {
    std::string out = notes_;
    if (failed_ > 0) {
      out += (out.empty() ? "" : "; ") + std::to_string(failed_) + "/" + std::to_string(checks_) +
             " checks failed:";
      for (const auto& f : failures_) out += " [" + f + "]";
    }
    return out;
  }

 private:
  std::size_t checks_ = 0, failed_ = 0;
  std::vector<std::string> failures_;
  std::string notes_;
};

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

struct Scratch {
  fs::path root;
  explicit Scratch(const std::string& tag) {
    root = fs::temp_directory_path() / ("lnm_accept_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~Scratch() { fs::remove_all(root); }
  std::string operator/(const std::string& sub) const { return (root / sub).string(); }
};

std::map<std::string, std::vector<std::uint8_t>> dir_bytes(const fs::path& root) {
  std::map<std::string, std::vector<std::uint8_t>> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file())
      files[fs::relative(e.path(), root).string()] = read_file_bytes(e.path().string());
  return files;
}

std::size_t csv_columns(const std::string& path) { return read_csv(path).header.size(); }

// Mean AUC per (method, feature set) over all outcome rows.
std::map<std::string, double> mean_auc(const std::vector<CvOutcome>& outcomes) {
  std::map<std::string, std::pair<double, int>> acc;
  for (const auto& o : outcomes) {
    auto& a = acc[o.method + "/" + o.feature_set];
    a.first += o.auc;
    a.second += 1;
  }
  std::map<std::string, double> out;
  for (const auto& [k, v] : acc) out[k] = v.first / v.second;
  return out;
}

std::map<std::string, int> cell_counts(const std::vector<CvOutcome>& outcomes) {
  std::map<std::string, int> out;
  for (const auto& o : outcomes) ++out[o.method + "/" + o.feature_set];
  return out;
}

// ---------------------------------------------------------------------------

void criterion_1(Verdict& v) {
  Scratch dir("c1");
  PhantomConfig pc;
  pc.benign = 5;
  pc.malignant = 5;
  pc.nodes_per_patient = 2;
  pc.seed = 11;
  save_cohort(generate_phantom(pc), dir / "cohort");

  const struct {
    const char* set;
    std::size_t width;
  } sets[] = {{"d13", 13}, {"t82", 82}, {"a95", 95}, {"s6", 6}};
  const auto start = Clock::now();
  ExtractOptions opt;
  opt.threads = 1;
  opt.sets = {"a95"};
  const auto report = extract_features_cmd(dir / "cohort", dir / "a95.csv", opt);
  const double extract_s = seconds_since(start);
  v.expect(report.computed == 10, "10 nodes computed");
  v.expect(read_csv(dir / "a95.csv").rows.size() == 10, "10 rows");
  v.expect(extract_s < 1.0, "10-node extraction took " + fmt(extract_s, 3) + " s");
  v.note("10-node extraction " + fmt(extract_s, 3) + " s");

  for (const auto& s : sets) {
    opt.sets = {s.set};
    const std::string out = dir / (std::string(s.set) + ".csv");
    extract_features_cmd(dir / "cohort", out, opt);
    // patient_id, node_id, label + features + degenerate_roi flag
    const std::size_t width = csv_columns(out) - 4;
    v.expect(width == s.width, std::string(s.set) + " has " + std::to_string(width) + " columns");
  }
  v.expect(set_columns("D13").size() == 13, "D13 column list");
  v.expect(set_columns("T82").size() == 82, "T82 column list");
  v.expect(set_columns("A95").size() == 95, "A95 column list");

  const auto names = texture_column_names();
  const auto ct = std::count_if(names.begin(), names.end(),
                                [](const std::string& n) { return n.rfind("ct.", 0) == 0; });
  const auto pet = std::count_if(names.begin(), names.end(),
                                 [](const std::string& n) { return n.rfind("pet.", 0) == 0; });
  v.expect(ct == 41 && pet == 41, "41 texture features per modality");
  v.expect(texture_feature_names().size() == 41, "per-modality name list");
  v.note("widths 13/82/95/6, 41 per modality");
}

void criterion_2(Verdict& v) {
  Rng rng(2026);
  std::size_t compared = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int bins = 2 + static_cast<int>(draw_index(rng, 15));
    const auto roi = oracle::random_roi(rng, 6, bins, 0.4 + 0.6 * draw_unit(rng));
    const auto got = modality_texture(roi);
    std::vector<double> want = oracle::oracle_first_order(roi);
    for (double x : oracle::oracle_glcm_features(oracle::oracle_glcm(roi), bins))
      want.push_back(x);
    for (double x : oracle::oracle_ngtdm_features(oracle::oracle_ngtdm(roi))) want.push_back(x);
    const auto zones = oracle::oracle_zones(roi);
    for (double x : oracle::oracle_glzsm_features(zones)) want.push_back(x);
    v.expect(got.size() == want.size(), "feature count");
    for (std::size_t n = 0; n < std::min(got.size(), want.size()); ++n) {
      const double rel = std::fabs(got[n] - want[n]) / std::max(1.0, std::fabs(want[n]));
      worst = std::max(worst, rel);
      ++compared;
      v.expect(rel <= 1e-10, "roi " + std::to_string(trial) + " feature " +
                                 texture_feature_names()[n] + " rel " + std::to_string(rel));
    }

    const auto g = build_glcm(roi);
    double sum = 0.0;
    bool symmetric = true;
    for (double p : g.p) sum += p;
    for (int i = 1; i <= g.bins; ++i)
      for (int j = 1; j <= g.bins; ++j) symmetric &= g.at(i, j) == g.at(j, i);
    v.expect(std::fabs(sum - 1.0) <= 1e-12, "GLCM sum " + std::to_string(sum));
    v.expect(symmetric, "GLCM symmetry");

    const auto z = build_glzsm(roi);
    std::size_t weighted = 0;
    for (int i = 1; i <= z.bins; ++i)
      for (int s = 1; s <= z.max_size; ++s) weighted += static_cast<std::size_t>(s) * z.at(i, s);
    v.expect(weighted == roi.voxel_count(), "zone-size weighted count");
  }
  v.note(std::to_string(compared) + " values, worst relative error " + sci(worst));
}

void criterion_3(Verdict& v) {
  Rng rng(7);
  std::vector<double> s;
  std::vector<int> y;
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    oracle::random_scores(rng, s, y);
    const auto curve = roc_curve(s, y);
    const double diff = std::fabs(auc(curve) - oracle::mann_whitney(s, y));
    worst = std::max(worst, diff);
    v.expect(diff <= 1e-12, "AUC differs by " + std::to_string(diff));
    const auto vs = oracle::brute_vertices(s, y);
    const long long np = std::count(y.begin(), y.end(), 1);
    const auto ref = oracle::brute_cut(vs, np, static_cast<long long>(y.size()) - np);
    const auto cut = optimal_cut_point(curve);
    v.expect(cut.threshold == ref.threshold && cut.sen == 100.0 * ref.tpr &&
                 cut.spc == 100.0 * (1.0 - ref.fpr),
             "cut point of set " + std::to_string(trial));
  }
  v.note("1000 sets, worst AUC gap " + sci(worst));
}

void criterion_4(Verdict& v) {
  const AugmentationConfig aug;
  v.expect(aug.pose_count() == 729, "default pose count");
  std::set<std::tuple<int, int, int, double, double, double>> distinct;
  for (std::size_t i = 0; i < aug.pose_count(); ++i) {
    const Pose p = aug.pose_at(i);
    distinct.insert({p.tx, p.ty, p.tz, p.rx_deg, p.ry_deg, p.rz_deg});
  }
  v.expect(distinct.size() == 729, "distinct poses: " + std::to_string(distinct.size()));

  // 1397 single-voxel nodes over small grids; only the bookkeeping is exercised.
  Cohort c;
  const Dims grid{12, 12, 12};
  const Vec3 sp{1.0, 1.0, 1.0};
  for (int node = 0, p = 0; node < 1397; ++p) {
    PatientRecord pr;
    pr.id = "P" + std::to_string(p);
    pr.ct = ImageVolume::filled(grid, sp, Modality::kCtHu, 0.0f);
    pr.pet = ImageVolume::filled(grid, sp, Modality::kPetSuv, 1.0f);
    for (int i = 0; i < 10 && node < 1397; ++i, ++node) {
      NodeRecord n;
      n.patient_id = pr.id;
      n.node_id = "N" + std::to_string(node);
      n.label = node < 127 ? Label::kMalignant : Label::kBenign;
      const Index3 vox{1 + i, 1 + i, 2};
      n.center_mm = {double(vox.x), double(vox.y), double(vox.z)};
      n.mask = VoxelMask::from_voxels(grid, sp, std::vector<Index3>{vox});
      c.nodes.push_back(std::move(n));
    }
    c.patients.push_back(std::move(pr));
  }
  Scratch dir("c4");
  save_cohort(c, dir / "cohort");
  const Cohort back = load_cohort(dir / "cohort");
  v.expect(back.benign_count() == 1270 && back.malignant_count() == 127,
           "loader counts " + std::to_string(back.benign_count()) + "/" +
               std::to_string(back.malignant_count()));
  const auto total = augmented_stack_count(back, aug);
  v.expect(total == 1018413, "stack count " + std::to_string(total));

  // Enumerate every augmented stack of one phantom node: 729 distinct inputs.
  PhantomConfig pc;
  pc.benign = 1;
  pc.malignant = 1;
  pc.nodes_per_patient = 2;
  pc.seed = 4;
  const Cohort ph = generate_phantom(pc);
  const auto& node = ph.nodes[0];
  const auto& patient = ph.patient(node.patient_id);
  std::set<std::vector<float>> stacks;
  for (std::size_t i = 0; i < aug.pose_count(); ++i)
    stacks.insert(extract_patch_stack(patient.ct, patient.pet, node.center_mm, aug.pose_at(i)).values);
  v.expect(stacks.size() == 729, "distinct stacks for one node: " + std::to_string(stacks.size()));
  v.note("729 poses, " + std::to_string(total) + " stacks for 1270/127 nodes");
}

void criterion_5(Verdict& v) {
  Rng rng(5);
  std::size_t cells = 0;
  for (int trial = 0; trial < 200; ++trial) {
    // Same layout as the phantom generator: labels shuffled over all nodes,
    // then consecutive chunks of nodes_per_patient form a patient.
    const int benign = 20 + static_cast<int>(draw_index(rng, 181));
    const int malignant = 20 + static_cast<int>(draw_index(rng, 181));
    const int total = benign + malignant;
    const int npp = 1 + static_cast<int>(draw_index(rng, std::min(12, total / 15)));
    std::vector<int> labels(benign, 0);
    labels.resize(total, 1);
    shuffle_range(labels.begin(), labels.end(), rng);
    std::vector<std::string> ids;
    for (int n = 0; n < total; ++n) ids.push_back("P" + std::to_string(n / npp));

    FoldPlan plan;
    try {
      plan = build_fold_plan(ids, labels, 10, 10, 120, 1000 + trial);
    } catch (const Error& e) {
      v.expect(false, "cohort " + std::to_string(trial) + ": " + e.what());
      continue;
    }
    v.expect(plan.cell_count() == 100, "cell count");
    const std::size_t want = std::min<std::size_t>({120, std::size_t(benign), std::size_t(malignant)});
    for (std::size_t r = 0; r < plan.repeats.size(); ++r) {
      const auto& rp = plan.repeats[r];
      std::size_t pos = 0;
      std::map<std::string, std::set<int>> folds_of;
      for (std::size_t i = 0; i < rp.samples.size(); ++i) {
        pos += labels[rp.samples[i]] == 1;
        folds_of[ids[rp.samples[i]]].insert(rp.fold[i]);
      }
      v.expect(pos == want && rp.samples.size() - pos == want,
               "repeat balance " + std::to_string(pos) + "/" +
                   std::to_string(rp.samples.size() - pos) + " want " + std::to_string(want));
      for (const auto& [pid, f] : folds_of)
        v.expect(f.size() == 1, "patient " + pid + " spans folds");
      for (int f = 0; f < plan.k; ++f) {
        const auto test = plan.test_rows(static_cast<int>(r), f);
        const auto train = plan.train_rows(static_cast<int>(r), f);
        ++cells;
        v.expect(!test.empty(), "empty test fold");
        v.expect(test.size() + train.size() == rp.samples.size(), "cell partition");
        std::set<std::string> test_patients;
        for (auto row : test) test_patients.insert(ids[row]);
        for (auto row : train) v.expect(!test_patients.count(ids[row]), "train/test patient leak");
      }
    }
  }
  v.note("200 cohorts, " + std::to_string(cells) + " cells checked");
}

void criterion_6(Verdict& v) {
  Rng rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = 1 + draw_index(rng, 30);
    std::vector<double> p;
    for (std::size_t i = 0; i < m; ++i) {
      const double u = draw_unit(rng);
      p.push_back(draw_unit(rng) < 0.4 ? u * 0.01 : u);
    }
    v.expect(correct_multiple(p, Correction::kFdrBh, 0.05) == oracle::bh_oracle(p, 0.05),
             "BH decisions, vector " + std::to_string(trial));
    v.expect(correct_multiple(p, Correction::kBonferroni, 0.05) ==
                 oracle::bonferroni_oracle(p, 0.05),
             "Bonferroni decisions, vector " + std::to_string(trial));
  }

  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 3 + draw_index(rng, 60);
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = draw_normal(rng, 0.8, 0.1);
      b[i] = draw_normal(rng, 0.78, 0.1);
    }
    // t = mean(d) / (sd(d) / sqrt(n)), sd with n - 1.
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += (a[i] - b[i]) / n;
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) ss += (a[i] - b[i] - mean) * (a[i] - b[i] - mean);
    const double hand = mean / (std::sqrt(ss / (n - 1)) / std::sqrt(double(n)));
    const double got = paired_t_test(a, b).t;
    const double rel = std::fabs(got - hand) / std::max(1.0, std::fabs(hand));
    worst = std::max(worst, rel);
    v.expect(rel <= 1e-10, "t statistic rel " + std::to_string(rel));
  }

  std::vector<double> same(20);
  for (auto& x : same) x = draw_unit(rng);
  const auto r = paired_compare(same, same);
  v.expect(r.p == 1.0, "identical samples p = " + std::to_string(r.p));
  v.expect(wilcoxon_signed_rank(same, same).p == 1.0, "identical samples, signed rank");
  v.note("200 correction vectors, worst t rel " + sci(worst));
}

void criterion_7(Verdict& v) {
  Rng rng(1);
  auto random_stack = [&](Rng& r) {
    PatchStack s;
    s.values.resize(kPatchValues);
    for (auto& x : s.values) x = static_cast<float>(draw_uniform(r, -1.0, 1.0));
    return s;
  };
  const auto model = build_cnn(3);
  const auto stack = random_stack(rng);
  const auto ok = gradient_check(model, stack, 1, 12, 3);
  v.expect(ok.parameters_checked >= 100, "parameters checked " + std::to_string(ok.parameters_checked));
  v.expect(ok.max_relative_error < 1e-3, "gradient error " + std::to_string(ok.max_relative_error));
  const auto bad = gradient_check(model, stack, 1, 12, 3, true);
  v.expect(bad.max_relative_error > 1e-1,
           "fault-injected error " + std::to_string(bad.max_relative_error));

  double worst_sum = 0.0;
  for (int i = 0; i < 20; ++i) {
    const auto out = cnn_forward(model, random_stack(rng));
    worst_sum = std::max(worst_sum, std::fabs(out.probs[0] + out.probs[1] - 1.0));
    v.expect(out.flatten.size() == 512, "flatten width " + std::to_string(out.flatten.size()));
  }
  v.expect(worst_sum <= 1e-9, "softmax row sum off by " + std::to_string(worst_sum));
  v.expect(flatten_features(model, stack).size() == 512, "flatten_features width");

  std::vector<PatchStack> stacks;
  std::vector<int> labels;
  Rng toy_rng(11);
  for (int i = 0; i < 8; ++i) {
    stacks.push_back(random_stack(toy_rng));
    labels.push_back(i % 2);
  }
  auto correct = [&](const CnnModel& m) {
    int c = 0;
    for (int i = 0; i < 8; ++i) c += cnn_forward(m, stacks[i]).predicted() == labels[i];
    return c;
  };
  TrainSchedule s;
  s.eta0 = 1e-2;
  s.gamma = 0.995;
  s.eta_r = 1e-2;
  s.gamma_r = 0.995;
  s.batch_size = 8;
  s.epochs = 500;
  s.max_iterations = 500;
  s.seed = 3;
  const auto trained = train_cnn(build_cnn(12), CnnDataset::from_stacks(stacks, labels), s,
                                 [&](const CnnModel& m, std::int64_t) { return correct(m) == 8; });
  v.expect(correct(trained.model) == 8, "toy accuracy " + std::to_string(correct(trained.model)) + "/8");
  v.note(std::to_string(ok.parameters_checked) + " params, max rel err " +
         sci(ok.max_relative_error) + " (faulted " +
         sci(bad.max_relative_error) + "), toy fit in " +
         std::to_string(trained.trace.size()) + " iterations");
}

ExperimentConfig benchmark_config(const std::string& cohort, const std::string& out) {
  ExperimentConfig cfg;
  cfg.cohort_dir = cohort;
  cfg.output_dir = out;
  cfg.k = 10;
  cfg.repeats = 10;
  cfg.per_class = 120;
  cfg.seed = 1;
  return cfg;
}

// 240 nodes: 120 per class, 8 nodes per patient.
PhantomConfig benchmark_phantom(std::uint64_t seed) {
  PhantomConfig pc;
  pc.benign = 120;
  pc.malignant = 120;
  pc.seed = seed;
  pc.malignant_class = pc.benign_class;
  return pc;
}

void criterion_8(Verdict& v) {
  Scratch dir("c8");
  PhantomConfig pc = benchmark_phantom(8);
  auto& m = pc.malignant_class;
  m.radius_mean_mm += 3.0 * pc.benign_class.radius_sd_mm;
  m.suv_mean += 3.0 * pc.benign_class.suv_sd;
  save_cohort(generate_phantom(pc), dir / "cohort");

  for (bool shuffled : {false, true}) {
    auto cfg = benchmark_config(dir / "cohort", dir / (shuffled ? "null" : "signal"));
    cfg.methods = {"RF", "SVM", "AdaBoost"};
    cfg.feature_sets = {"D13"};
    cfg.shuffle_labels = shuffled;
    const auto result = run_experiment(cfg);
    const auto cells = cell_counts(result.outcomes);
    for (const auto& [key, auc_mean] : mean_auc(result.outcomes)) {
      v.expect(cells.at(key) == 100, key + " cells " + std::to_string(cells.at(key)));
      if (shuffled)
        v.expect(auc_mean >= 0.45 && auc_mean <= 0.55, "shuffled " + key + " AUC " + fmt(auc_mean));
      else
        v.expect(auc_mean >= 0.95, key + " AUC " + fmt(auc_mean));
      v.note(std::string(shuffled ? "shuffled " : "") + key + " " + fmt(auc_mean));
    }
    v.expect(result.summary.size() == 3, "three summary rows");
  }
}

void criterion_9(Verdict& v) {
  Scratch dir("c9");
  // Both classes share every texture-relevant parameter; malignant nodes only
  // lose boundary contrast (a brighter halo outside the mask).
  PhantomConfig pc = benchmark_phantom(9);
  pc.malignant_class.halo_mean_hu = -25.0;
  save_cohort(generate_phantom(pc), dir / "cohort");
  auto cfg = benchmark_config(dir / "cohort", dir / "out");
  cfg.methods = {"RF"};
  cfg.feature_sets = {"D13", "T82"};
  const auto aucs = mean_auc(run_experiment(cfg).outcomes);
  const double d13 = aucs.at("RF/D13"), t82 = aucs.at("RF/T82");
  v.expect(d13 - t82 >= 0.1, "AUC gap " + fmt(d13 - t82));
  v.note("RF/D13 " + fmt(d13) + ", RF/T82 " + fmt(t82) + ", gap " + fmt(d13 - t82));
}

void criterion_10(Verdict& v) {
  Scratch dir("c10");
  PhantomConfig pc;
  pc.benign = 20;
  pc.malignant = 20;
  pc.nodes_per_patient = 2;
  pc.seed = 10;
  const Cohort cohort = generate_phantom(pc);
  save_cohort(cohort, dir / "a");
  save_cohort(generate_phantom(pc), dir / "b");
  v.expect(dir_bytes(dir.root / "a") == dir_bytes(dir.root / "b"), "same seed, same cohort files");
  const Cohort back = load_cohort(dir / "a");
  save_cohort(back, dir / "c");
  v.expect(dir_bytes(dir.root / "a") == dir_bytes(dir.root / "c"), "cohort round trip");
  v.expect(back.fingerprint() == cohort.fingerprint(), "cohort fingerprint");

  ExperimentConfig cfg;
  cfg.cohort_dir = dir / "a";
  cfg.output_dir = dir / "run1";
  cfg.methods = {"RF", "SVM", "AdaBoost", "ANN"};
  cfg.feature_sets = {"D13", "S6"};
  cfg.k = 5;
  cfg.repeats = 2;
  cfg.grids["ANN"] = {HyperParams::defaults(ModelKind::kAnn)};
  cfg.grids["ANN"][0].ann.epochs = 50;
  run_experiment(cfg);
  cfg.output_dir = dir / "run2";
  run_experiment(cfg);
  cfg.threads = 1;
  cfg.output_dir = dir / "run3";
  run_experiment(cfg);
  const auto r1 = dir_bytes(dir.root / "run1");
  v.expect(r1 == dir_bytes(dir.root / "run2"), "rerun byte-identical");
  v.expect(r1 == dir_bytes(dir.root / "run3"), "single-threaded rerun byte-identical");
  v.note(std::to_string(r1.size()) + " report files compared");

  // Every model family and the network survive serialization bit for bit.
  Rng rng(3);
  TrainingSet ts;
  ts.x = Matrix(60, 5);
  for (std::size_t i = 0; i < 60; ++i) {
    ts.y.push_back(static_cast<int>(i % 2));
    for (std::size_t j = 0; j < 5; ++j) ts.x(i, j) = draw_normal(rng, (i % 2) * 1.5, 1.0);
  }
  for (ModelKind kind : {ModelKind::kRandomForest, ModelKind::kSvm, ModelKind::kAdaBoost,
                         ModelKind::kAnn}) {
    auto hp = HyperParams::defaults(kind);
    if (kind == ModelKind::kAnn) hp.ann.epochs = 50;
    const auto model = fit_model(ts, hp, 5);
    const auto bytes = serialize_model(model);
    const auto restored = deserialize_model(bytes);
    v.expect(serialize_model(restored) == bytes, std::string(model_kind_name(kind)) + " bytes");
    v.expect(restored.scores(ts.x) == model.scores(ts.x), std::string(model_kind_name(kind)) + " scores");
  }
  const auto net = build_cnn(4);
  const auto net_bytes = serialize_cnn(net);
  v.expect(serialize_cnn(deserialize_cnn(net_bytes)) == net_bytes, "CNN checkpoint bytes");
}

void criterion_11(Verdict& v) {
  Scratch dir("c11");
  PhantomConfig pc;
  pc.benign = 120;
  pc.malignant = 120;
  pc.seed = 11;
  save_cohort(generate_phantom(pc), dir / "cohort");
  const FeatureTable table = compute_feature_table(load_cohort(dir / "cohort"), "", "", 0);
  TrainingSet ts;
  ts.x = table.select(set_columns("A95"));
  ts.y = table.label;
  v.expect(ts.x.rows() == 240 && ts.x.cols() == 95, "240 x 95 design");
  const auto fit_start = Clock::now();
  const auto svm = fit_svm_rbf(ts, HyperParams::defaults(ModelKind::kSvm).svm);
  const double fit_s = seconds_since(fit_start);
  (void)svm;
  v.expect(fit_s < 10.0, "SVM fit took " + fmt(fit_s, 2) + " s");

  auto cfg = benchmark_config(dir / "cohort", dir / "out");
  const auto run_start = Clock::now();
  const auto result = run_experiment(cfg);
  const double run_s = seconds_since(run_start);
  v.expect(run_s < 1800.0, "full experiment took " + fmt(run_s, 1) + " s");
  v.expect(result.summary.size() == 16, "summary rows " + std::to_string(result.summary.size()));
  v.note("SVM fit " + fmt(fit_s, 3) + " s; 4x4 experiment " + fmt(run_s, 1) + " s");
}

struct Criterion {
  const char* title;
  double budget_s;
  std::function<void(Verdict&)> run;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all{
      {"feature-count contract", 60.0, criterion_1},
      {"texture oracle equivalence", 10.0, criterion_2},
      {"AUC identity and cut point", 5.0, criterion_3},
      {"augmentation count", 30.0, criterion_4},
      {"fold-plan constraints", 10.0, criterion_5},
      {"statistics correctness", 5.0, criterion_6},
      {"CNN correctness", 120.0, criterion_7},
      {"phantom benchmark, separable and shuffled", 600.0, criterion_8},
      {"phantom benchmark, D13 over T82", 600.0, criterion_9},
      {"determinism and round trips", 120.0, criterion_10},
      {"desk-scale runtime", 1800.0 + 60.0, criterion_11},
  };
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
  if (selected.empty())
    for (std::size_t i = 1; i <= criteria().size(); ++i) selected.push_back(static_cast<int>(i));

  int failures = 0;
  for (int id : selected) {
    if (id < 1 || id > static_cast<int>(criteria().size())) {
      std::printf("[FAIL] criterion %d: no such criterion\n", id);
      ++failures;
      continue;
    }
    const auto& c = criteria()[id - 1];
    Verdict v;
    const auto start = Clock::now();
    try {
      c.run(v);
    } catch (const std::exception& e) {
      v.expect(false, std::string("exception: ") + e.what());
    }
    const double took = seconds_since(start);
    v.expect(took < c.budget_s, "over the " + fmt(c.budget_s, 0) + " s budget");
    std::printf("[%s] criterion %d %s (%.2f s): %s\n", v.ok() ? "PASS" : "FAIL", id, c.title, took,
                v.detail().c_str());
    std::fflush(stdout);
    failures += !v.ok();
  }
  return failures == 0 ? 0 : 1;
}
