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
#include <string>
#include <vector>

#include "lnm/image.hpp"

namespace lnm {

enum class RoiMode { kCenterSlice, kVolume };

inline constexpr double kShellThicknessMm = 2.0;
inline constexpr std::size_t kDiagnosticCount = 13;

// Axial index nearest to z_mm; exact midpoints resolve to the lower index.
int center_slice_index(const Vec3& spacing, double z_mm);
SliceMask center_slice(const VoxelMask& mask, const Vec3& center_mm);

// Minimum caliper width of the convex hull of pixel centers, plus one pixel
// pitch so that a single pixel measures one pitch.
double short_diameter(const SliceMask& slice);

struct AreaVolume {
  double area_mm2 = 0.0;
  double volume_mm3 = 0.0;
};
AreaVolume area_volume(const VoxelMask& mask, const Vec3& center_mm);

struct RoiStats {
  double mean = 0.0;
  double max = 0.0;
  double std = 0.0;  // population (divisor N)
};
RoiStats roi_stats(const ImageVolume& vol, const VoxelMask& mask, RoiMode mode,
                   const Vec3& center_mm);

// Mean inside the mask minus mean of the 2 mm surrounding shell.
double ct_contrast(const ImageVolume& ct, const VoxelMask& mask, RoiMode mode,
                   const Vec3& center_mm);

struct DiagnosticFeatures {
  double d_short_mm = 0.0;
  double area_mm2 = 0.0;
  double volume_mm3 = 0.0;
  double ct_mean_2d = 0.0;
  double ct_mean_3d = 0.0;
  double ct_contrast_2d = 0.0;
  double ct_contrast_3d = 0.0;
  double suv_mean_2d = 0.0;
  double suv_mean_3d = 0.0;
  double suv_max_2d = 0.0;
  double suv_max_3d = 0.0;
  double suv_std_2d = 0.0;
  double suv_std_3d = 0.0;

  std::array<double, kDiagnosticCount> values() const;
  static const std::array<std::string, kDiagnosticCount>& names();
};

// Volumes and mask must share one grid (resample first).
DiagnosticFeatures diagnostic_feature_set(const ImageVolume& ct, const ImageVolume& pet,
                                          const NodeRecord& node);

}  // namespace lnm
