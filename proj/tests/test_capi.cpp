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
// Exercises the library strictly through the C interface.
#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>

#include "lnm/lnm.h"

namespace fs = std::filesystem;

namespace {

const char* kPhantom =
    R"({"benign": 3, "malignant": 3, "nodes_per_patient": 2, "dims": [48, 48, 40], "seed": 7})";

std::string take(char* s) {
  std::string out = s ? s : "";
  lnm_string_free(s);
  return out;
}

}  // namespace

TEST_CASE("C API: cohort handles round trip through disk") {
  const fs::path dir = fs::temp_directory_path() / ("lnm_capi_" + std::to_string(::getpid()));
  fs::remove_all(dir);

  lnm_cohort* cohort = nullptr;
  REQUIRE(lnm_phantom_generate(kPhantom, &cohort) == LNM_OK);
  REQUIRE(cohort != nullptr);
  lnm_cohort_counts counts{};
  REQUIRE(lnm_cohort_counts_get(cohort, &counts) == LNM_OK);
  CHECK(counts.nodes == 6);
  CHECK(counts.benign == 3);
  CHECK(counts.malignant == 3);
  CHECK(counts.patients == 3);
  uint64_t stacks = 0;
  REQUIRE(lnm_cohort_augmented_count(cohort, &stacks) == LNM_OK);
  CHECK(stacks == 6u * 729u);

  char* fp = nullptr;
  REQUIRE(lnm_cohort_fingerprint(cohort, &fp) == LNM_OK);
  const std::string original = take(fp);
  CHECK(!original.empty());

  REQUIRE(lnm_cohort_save(cohort, (dir / "cohort").c_str()) == LNM_OK);
  lnm_cohort_free(cohort);

  lnm_cohort* loaded = nullptr;
  REQUIRE(lnm_cohort_load((dir / "cohort").c_str(), &loaded) == LNM_OK);
  REQUIRE(lnm_cohort_fingerprint(loaded, &fp) == LNM_OK);
  CHECK(take(fp) == original);
  lnm_cohort_free(loaded);

  lnm_extract_stats stats{};
  REQUIRE(lnm_extract_features((dir / "cohort").c_str(), "D13, t82", nullptr, 1,
                               (dir / "f.csv").c_str(), &stats) == LNM_OK);
  CHECK(stats.computed == 6);
  std::ifstream in(dir / "f.csv");
  std::string header;
  std::getline(in, header);
  CHECK(std::count(header.begin(), header.end(), ',') + 1 == 3 + 13 + 82 + 1);

  fs::remove_all(dir);
}

TEST_CASE("C API: errors carry codes and messages") {
  lnm_cohort* cohort = reinterpret_cast<lnm_cohort*>(0x1);
  CHECK(lnm_phantom_generate("{\"benign\": 3, \"bogus\": 1}", &cohort) == LNM_EPARSE);
  CHECK(cohort == nullptr);
  CHECK(lnm_last_status() == LNM_EPARSE);
  CHECK(std::string(lnm_last_error()).find("bogus") != std::string::npos);
  CHECK(std::string(lnm_status_name(LNM_EPARSE)) == "parse");

  CHECK(lnm_cohort_load(nullptr, &cohort) == LNM_EINVALID_ARGUMENT);
  CHECK(lnm_cohort_load("/nonexistent/lnm/cohort", &cohort) != LNM_OK);
  CHECK(lnm_cohort_counts_get(nullptr, nullptr) == LNM_EINVALID_ARGUMENT);

  lnm_experiment* exp = nullptr;
  CHECK(lnm_experiment_load("/nonexistent/lnm/exp.json", &exp) != LNM_OK);
  CHECK(exp == nullptr);
  CHECK(lnm_experiment_run(nullptr, nullptr) == LNM_EINVALID_ARGUMENT);

  // A successful call clears the recorded error.
  REQUIRE(lnm_phantom_generate(kPhantom, &cohort) == LNM_OK);
  CHECK(lnm_last_status() == LNM_OK);
  CHECK(std::string(lnm_last_error()).empty());
  lnm_cohort_free(cohort);
  lnm_cohort_free(nullptr);
  lnm_experiment_free(nullptr);
  lnm_string_free(nullptr);
}
