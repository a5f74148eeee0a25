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
#include "lnm/lnm.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <sstream>

#include "lnm/binary_io.hpp"
#include "lnm/error.hpp"
#include "lnm/experiment.hpp"

struct lnm_cohort {
  lnm::Cohort cohort;
};

struct lnm_experiment {
  lnm::ExperimentConfig config;
};

namespace {

thread_local std::string g_last_error;
thread_local lnm_status g_last_status = LNM_OK;

lnm_status record(lnm_status status, const std::string& message) {
  g_last_status = status;
  g_last_error = message;
  return status;
}

template <typename Fn>
lnm_status guarded(Fn&& fn) {
  try {
    fn();
    return record(LNM_OK, "");
  } catch (const lnm::Error& e) {
    return record(static_cast<lnm_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return record(LNM_EINTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return record(LNM_EINTERNAL, e.what());
  }
}

void need(const void* p, const char* what) {
  lnm::require(p != nullptr, lnm::ErrorCode::kInvalidArgument, std::string(what) + " is null");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::vector<std::string> split_sets(const std::string& list) {
  std::vector<std::string> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

}  // namespace

extern "C" {

const char* lnm_version(void) { return "0.1.0"; }

const char* lnm_status_name(lnm_status status) {
  if (status == LNM_OK) return "ok";
  return lnm::error_code_name(static_cast<lnm::ErrorCode>(status));
}

const char* lnm_last_error(void) { return g_last_error.c_str(); }

lnm_status lnm_last_status(void) { return g_last_status; }

void lnm_string_free(char* s) { std::free(s); }

lnm_status lnm_phantom_generate(const char* config_json, lnm_cohort** out) {
  return guarded([&] {
    need(out, "out");
    *out = nullptr;
    const std::string text = config_json ? config_json : "";
    const lnm::PhantomConfig cfg =
        text.empty() ? lnm::PhantomConfig{} : lnm::PhantomConfig::from_json(text);
    auto handle = std::make_unique<lnm_cohort>();
    handle->cohort = lnm::generate_phantom(cfg);
    *out = handle.release();
  });
}

lnm_status lnm_cohort_load(const char* dir, lnm_cohort** out) {
  return guarded([&] {
    need(dir, "dir");
    need(out, "out");
    *out = nullptr;
    auto handle = std::make_unique<lnm_cohort>();
    handle->cohort = lnm::load_cohort(dir);
    *out = handle.release();
  });
}

lnm_status lnm_cohort_save(const lnm_cohort* cohort, const char* dir) {
  return guarded([&] {
    need(cohort, "cohort");
    need(dir, "dir");
    lnm::save_cohort(cohort->cohort, dir);
  });
}

lnm_status lnm_cohort_counts_get(const lnm_cohort* cohort, lnm_cohort_counts* out) {
  return guarded([&] {
    need(cohort, "cohort");
    need(out, "out");
    out->patients = cohort->cohort.patients.size();
    out->nodes = cohort->cohort.nodes.size();
    out->benign = cohort->cohort.benign_count();
    out->malignant = cohort->cohort.malignant_count();
  });
}

lnm_status lnm_cohort_fingerprint(const lnm_cohort* cohort, char** out) {
  return guarded([&] {
    need(cohort, "cohort");
    need(out, "out");
    *out = dup_string(cohort->cohort.fingerprint());
  });
}

lnm_status lnm_cohort_augmented_count(const lnm_cohort* cohort, uint64_t* out) {
  return guarded([&] {
    need(cohort, "cohort");
    need(out, "out");
    *out = lnm::augmented_stack_count(cohort->cohort, lnm::AugmentationConfig{});
  });
}

void lnm_cohort_free(lnm_cohort* cohort) { delete cohort; }

lnm_status lnm_extract_features(const char* cohort_dir, const char* sets,
                                const char* cnn_checkpoint, int threads, const char* out_csv,
                                lnm_extract_stats* stats) {
  return guarded([&] {
    need(cohort_dir, "cohort_dir");
    need(out_csv, "out_csv");
    lnm::ExtractOptions opt;
    if (sets) opt.sets = split_sets(sets);
    lnm::require(!opt.sets.empty(), lnm::ErrorCode::kInvalidArgument, "no feature sets given");
    if (cnn_checkpoint) opt.cnn_checkpoint = cnn_checkpoint;
    opt.threads = threads;
    const auto report = lnm::extract_features_cmd(cohort_dir, out_csv, opt);
    if (stats) {
      stats->computed = report.computed;
      stats->reused = report.reused;
      stats->degenerate = report.degenerate;
    }
  });
}

lnm_status lnm_experiment_load(const char* config_path, lnm_experiment** out) {
  return guarded([&] {
    need(config_path, "config_path");
    need(out, "out");
    *out = nullptr;
    auto handle = std::make_unique<lnm_experiment>();
    handle->config = lnm::ExperimentConfig::from_file(config_path);
    *out = handle.release();
  });
}

lnm_status lnm_experiment_run(lnm_experiment* experiment, char** summary_text) {
  return guarded([&] {
    need(experiment, "experiment");
    if (summary_text) *summary_text = nullptr;
    lnm::run_experiment(experiment->config);
    if (summary_text) {
      const std::string path = experiment->config.output_dir + "/summary.txt";
      *summary_text = dup_string(lnm::read_text_file(path));
    }
  });
}

lnm_status lnm_experiment_train_cnn(lnm_experiment* experiment, const char* checkpoint_path) {
  return guarded([&] {
    need(experiment, "experiment");
    need(checkpoint_path, "checkpoint_path");
    lnm::train_cnn_cmd(experiment->config, checkpoint_path);
  });
}

void lnm_experiment_free(lnm_experiment* experiment) { delete experiment; }

lnm_status lnm_report(const char* outcomes_csv, const char* stats_csv, char** out) {
  return guarded([&] {
    need(outcomes_csv, "outcomes_csv");
    need(stats_csv, "stats_csv");
    need(out, "out");
    *out = dup_string(
        lnm::report_text(lnm::read_text_file(outcomes_csv), lnm::read_text_file(stats_csv)));
  });
}

}  // extern "C"
