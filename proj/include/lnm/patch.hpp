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

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "lnm/image.hpp"

namespace lnm {

inline constexpr int kPatchSize = 51;
inline constexpr int kPatchChannels = 6;
inline constexpr std::size_t kPatchPlane = kPatchSize * kPatchSize;
inline constexpr std::size_t kPatchValues = kPatchChannels * kPatchPlane;
// Axial offsets of the three planes per modality, in mm.
inline constexpr std::array<double, 3> kPlaneOffsetsMm{-4.0, 0.0, 4.0};

struct IntensityWindow {
  double lo;
  double hi;
};

inline constexpr IntensityWindow kCtWindow{-300.0, 1000.0};
inline constexpr IntensityWindow kPetWindow{0.0, 20.0};

// Affine map of [lo, hi] onto [-1, 1], clamped outside the window.
double normalize_intensity(double value, IntensityWindow window);

struct Pose {
  int tx = 0;
  int ty = 0;
  int tz = 0;
  double rx_deg = 0.0;
  double ry_deg = 0.0;
  double rz_deg = 0.0;

  bool is_identity() const {
    return tx == 0 && ty == 0 && tz == 0 && rx_deg == 0.0 && ry_deg == 0.0 && rz_deg == 0.0;
  }
  friend bool operator==(const Pose&, const Pose&) = default;
};

// Channel order: CT z-4, CT z, CT z+4, PET z-4, PET z, PET z+4. Within a
// plane, row r holds y offset r-25 and column c holds x offset c-25.
struct PatchStack {
  std::string source_node;
  Pose pose;
  std::vector<float> values = std::vector<float>(kPatchValues, 0.0f);

  float at(int channel, int row, int col) const {
    return values[channel * kPatchPlane + row * kPatchSize + col];
  }
};

struct AugmentationConfig {
  std::vector<int> translation_steps_px{-2, 0, 2};
  std::vector<double> rotation_angles_deg{-20.0, 0.0, 20.0};

  // Both lists must be nonempty and contain 0 so the identity pose exists.
  void validate() const;
  std::size_t pose_count() const;
  // Poses enumerate tx, ty, tz, rx, ry, rz with rz varying fastest.
  Pose pose_at(std::size_t index) const;
};

// Samples the six planes about center_mm under the pose: the grid is rotated
// about the center (x, then y, then z), shifted by whole pixels, then sampled
// trilinearly and windowed to [-1, 1].
PatchStack extract_patch_stack(const ImageVolume& ct, const ImageVolume& pet, const Vec3& center_mm,
                               const Pose& pose, const std::string& node_id = {});

std::vector<PatchStack> augment_node(const ImageVolume& ct, const ImageVolume& pet,
                                     const NodeRecord& node, const AugmentationConfig& cfg);

// Debug dump: count, then per record node_id, pose, 6x51x51 LE float32.
void write_patch_dump(const std::string& path, const std::vector<PatchStack>& stacks);
std::vector<PatchStack> read_patch_dump(const std::string& path);

}  // namespace lnm
