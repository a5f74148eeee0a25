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
#include <string>
#include <vector>

#include "lnm/image.hpp"
#include "lnm/patch.hpp"

namespace lnm {

struct PatientRecord {
  std::string id;
  double weight_kg = 0.0;  // 0 when unknown
  double dose_mbq = 0.0;   // 0 when unknown
  ImageVolume ct;          // HU
  ImageVolume pet;         // SUV, same grid as ct
};

struct Cohort {
  std::vector<PatientRecord> patients;
  std::vector<NodeRecord> nodes;
  // Free-form structured text; the phantom generator stores its
  // configuration and per-node ground truth here.
  std::string provenance_json = "{}";

  std::size_t benign_count() const;
  std::size_t malignant_count() const;
  const PatientRecord& patient(const std::string& id) const;
  // Unique ids, resolvable patients, shared CT/PET grids, masks on that grid.
  void validate() const;
  // 64-bit FNV-1a over metadata and payloads, as 16 hex digits.
  std::string fingerprint() const;
};

// Directory layout: cohort.json plus volumes/<patient>.{ct,pet}.f32 and
// masks/<node>.u8, all little-endian raw payloads.
void save_cohort(const Cohort& cohort, const std::string& dir);
Cohort load_cohort(const std::string& dir);

// Total augmented stacks the cohort yields under cfg, without extracting any.
std::uint64_t augmented_stack_count(const Cohort& cohort, const AugmentationConfig& cfg);

// ---------------------------------------------------------------------------
// Synthetic phantom

// Per-class draw of one node's appearance. Radii in mm, CT in HU, SUV unitless.
struct PhantomClass {
  double radius_mean_mm = 4.0;
  double radius_sd_mm = 0.7;
  double suv_mean = 3.0;
  double suv_sd = 0.6;
  double ct_mean_hu = 40.0;
  double ct_sd_hu = 8.0;
  // HU of the 2 mm halo around the node. A halo close to the node HU means a
  // low boundary contrast.
  double halo_mean_hu = -60.0;
  double halo_sd_hu = 10.0;
  double texture_amp = 0.15;      // relative PET modulation; CT gets 200x in HU
  double texture_freq = 0.15;     // cycles per mm
};

struct PhantomConfig {
  int benign = 20;
  int malignant = 20;
  int nodes_per_patient = 8;
  PhantomClass benign_class;
  // Larger, hotter and less sharply bounded than benign nodes by default.
  PhantomClass malignant_class{5.0, 0.7, 4.8, 0.6, 40.0, 8.0, -25.0, 10.0, 0.15, 0.15};
  Dims dims{72, 72, 56};
  double spacing_mm = 1.0;
  double ct_background_hu = -90.0;
  double pet_background_suv = 0.8;
  double ct_noise_hu = 8.0;
  double pet_noise_suv = 0.08;
  int placement_retries = 200;
  bool shuffle_labels = false;  // permute labels after generation (null case)
  std::uint64_t seed = 1;

  static PhantomConfig from_json(const std::string& text);
  std::string to_json() const;
  void validate() const;
};

// Malignant draws come from malignant_class; with identical classes the
// labels carry no signal.
Cohort generate_phantom(const PhantomConfig& cfg);

}  // namespace lnm
