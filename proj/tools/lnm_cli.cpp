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
// Command-line front end. Talks to the library only through lnm/lnm.h.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "lnm/lnm.h"

namespace {

struct Failure {
  lnm_status status;
  std::string message;
};

void check(lnm_status status) {
  if (status != LNM_OK) throw Failure{status, lnm_last_error()};
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{LNM_EIO, "cannot read " + path};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Owns a string returned by the library.
struct LibString {
  char* p = nullptr;
  ~LibString() { lnm_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

int report_failure(const std::string& command, const Failure& f, const std::string& log_path) {
  nlohmann::json j;
  j["command"] = command;
  j["status"] = static_cast<int>(f.status);
  j["error"] = lnm_status_name(f.status);
  j["message"] = f.message;
  const std::string text = j.dump(2);
  std::cerr << text << "\n";
  if (!log_path.empty()) {
    std::ofstream out(log_path, std::ios::binary);
    out << text << "\n";
  }
  const int code = static_cast<int>(f.status);
  return code > 0 && code < 126 ? code : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lymph-node malignancy classification pipeline"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(lnm_version()));
  std::string error_log;
  app.add_option("--error-log", error_log, "write a JSON error record here on failure");

  std::string phantom_config, phantom_out;
  auto* gen = app.add_subcommand("gen-phantom", "generate a synthetic cohort");
  gen->add_option("--config", phantom_config, "phantom config (JSON); defaults when omitted")
      ->check(CLI::ExistingFile);
  gen->add_option("--out", phantom_out, "cohort directory")->required();

  std::string ex_cohort, ex_sets = "a95", ex_out, ex_ckpt;
  int ex_threads = 0;
  auto* extract = app.add_subcommand("extract-features", "write a per-node feature CSV");
  extract->add_option("--cohort", ex_cohort, "cohort directory")->required();
  extract->add_option("--sets", ex_sets, "comma list of d13,t82,a95,s6,flat512")->capture_default_str();
  extract->add_option("--out", ex_out, "output CSV")->required();
  extract->add_option("--cnn-checkpoint", ex_ckpt, "network checkpoint for flat512");
  extract->add_option("--threads", ex_threads, "worker threads (0 = all cores)")->capture_default_str();

  std::string cv_config;
  auto* run_cv = app.add_subcommand("run-cv", "run the configured cross-validated experiment");
  run_cv->add_option("--config", cv_config, "experiment config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);

  std::string rep_outcomes, rep_stats;
  auto* report = app.add_subcommand("report", "print the summary of a finished experiment");
  report->add_option("--outcomes", rep_outcomes, "outcomes CSV")->required();
  report->add_option("--stats", rep_stats, "stats CSV")->required();

  std::string tc_config, tc_out;
  auto* train = app.add_subcommand("train-cnn", "train a network on the whole cohort");
  train->add_option("--config", tc_config, "experiment config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  train->add_option("--out", tc_out, "checkpoint path")->required();

  CLI11_PARSE(app, argc, argv);

  std::string command = app.get_subcommands().front()->get_name();
  try {
    if (*gen) {
      const std::string text = phantom_config.empty() ? "" : read_file(phantom_config);
      lnm_cohort* cohort = nullptr;
      check(lnm_phantom_generate(text.c_str(), &cohort));
      const lnm_status saved = lnm_cohort_save(cohort, phantom_out.c_str());
      lnm_cohort_counts counts{};
      lnm_cohort_counts_get(cohort, &counts);
      lnm_cohort_free(cohort);
      check(saved);
      std::cout << "wrote " << counts.nodes << " nodes (" << counts.benign << " benign, "
                << counts.malignant << " malignant) for " << counts.patients << " patients to "
                << phantom_out << "\n";
    } else if (*extract) {
      lnm_extract_stats stats{};
      check(lnm_extract_features(ex_cohort.c_str(), ex_sets.c_str(),
                                 ex_ckpt.empty() ? nullptr : ex_ckpt.c_str(), ex_threads,
                                 ex_out.c_str(), &stats));
      std::cout << "computed " << stats.computed << ", reused " << stats.reused << ", degenerate "
                << stats.degenerate << " -> " << ex_out << "\n";
    } else if (*run_cv) {
      lnm_experiment* exp = nullptr;
      check(lnm_experiment_load(cv_config.c_str(), &exp));
      LibString summary;
      const lnm_status status = lnm_experiment_run(exp, &summary.p);
      lnm_experiment_free(exp);
      check(status);
      std::cout << summary.str();
    } else if (*report) {
      LibString text;
      check(lnm_report(rep_outcomes.c_str(), rep_stats.c_str(), &text.p));
      std::cout << text.str();
    } else if (*train) {
      lnm_experiment* exp = nullptr;
      check(lnm_experiment_load(tc_config.c_str(), &exp));
      const lnm_status status = lnm_experiment_train_cnn(exp, tc_out.c_str());
      lnm_experiment_free(exp);
      check(status);
      std::cout << "wrote " << tc_out << "\n";
    }
  } catch (const Failure& f) {
    return report_failure(command, f, error_log);
  }
  return 0;
}
