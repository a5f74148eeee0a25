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
#include "lnm/patch.hpp"

namespace lnm {

inline constexpr int kDefaultBins = 64;
// Replaces zero denominators and zero log arguments; also caps coarseness.
inline constexpr double kTextureEpsilon = 1e-8;

inline constexpr std::size_t kFirstOrderCount = 6;
inline constexpr std::size_t kGlcmCount = 19;
inline constexpr std::size_t kNgtdmCount = 5;
inline constexpr std::size_t kGlzsmCount = 11;
inline constexpr std::size_t kTexturePerModality = 41;
inline constexpr std::size_t kTextureCount = 2 * kTexturePerModality;

// Gray levels over a box; 0 marks voxels outside the ROI, ROI voxels hold 1..bins.
struct QuantizedRoi {
  int bins = kDefaultBins;
  IntensityWindow clamp{0.0, 1.0};
  Dims box;
  Index3 offset;
  std::vector<int> levels;

  static QuantizedRoi from_levels(Dims box, std::vector<int> levels, int bins);

  int level(std::int64_t i, std::int64_t j, std::int64_t k) const {
    return box.contains(i, j, k) ? levels[box.linear(i, j, k)] : 0;
  }
  std::size_t voxel_count() const;
};

int quantize_value(double v, int bins, IntensityWindow clamp);
QuantizedRoi quantize(const ImageVolume& vol, const VoxelMask& mask, int bins,
                      IntensityWindow clamp);

// The 13 unique directions of the 26-neighborhood.
const std::array<Index3, 13>& glcm_directions();

// Direction-averaged, symmetric, normalized co-occurrence matrix.
struct Glcm {
  int bins = 0;
  std::vector<double> p;  // p[(i-1)*bins + (j-1)]

  double at(int i, int j) const { return p[(i - 1) * bins + (j - 1)]; }
};

// Directions with no intra-ROI pair are left out of the average.
Glcm build_glcm(const QuantizedRoi& roi, int distance_px = 1);
std::array<double, kGlcmCount> glcm_features(const Glcm& glcm);

struct Ngtdm {
  int bins = 0;
  std::vector<double> s;           // s[i-1] = sum |i - neighborhood mean|
  std::vector<std::size_t> count;  // valid voxels per level
  std::size_t valid_voxels = 0;    // voxels with at least one in-ROI neighbor
};

Ngtdm build_ngtdm(const QuantizedRoi& roi);
std::array<double, kNgtdmCount> ngtdm_features(const Ngtdm& ngtdm);
std::array<double, kNgtdmCount> ngtdm_features(const QuantizedRoi& roi);

struct Glzsm {
  int bins = 0;
  int max_size = 0;
  std::vector<std::size_t> counts;  // counts[(level-1)*max_size + (size-1)]

  std::size_t at(int level, int size) const { return counts[(level - 1) * max_size + (size - 1)]; }
};

// Zones are 26-connected components of equal level inside the ROI.
Glzsm build_glzsm(const QuantizedRoi& roi);
std::array<double, kGlzsmCount> glzsm_features(const Glzsm& glzsm);
std::array<double, kGlzsmCount> glzsm_features(const QuantizedRoi& roi);

std::array<double, kFirstOrderCount> first_order_features(const QuantizedRoi& roi);

// first-order, GLCM, NGTDM, GLZSM in that order.
std::array<double, kTexturePerModality> modality_texture(const QuantizedRoi& roi);

const std::array<std::string, kTexturePerModality>& texture_feature_names();
// Stable column names such as "ct.glcm.contrast"; CT block first.
std::vector<std::string> texture_column_names();

struct TextureFeatureSet {
  std::array<double, kTextureCount> values{};
  // Set when an ROI had no intra-ROI pair or neighbor and the epsilon
  // fallback (self-pairs, zero differences) was used instead.
  bool degenerate = false;
};

// 41 CT features then 41 PET features with the fixed windows and 64 bins.
// Throws degenerate-ROI errors naming the node.
std::array<double, kTextureCount> texture_feature_set(const ImageVolume& ct,
                                                      const ImageVolume& pet,
                                                      const NodeRecord& node);
// Same, but degenerate ROIs fall back to the epsilon policy and are flagged.
TextureFeatureSet texture_feature_set_lenient(const ImageVolume& ct, const ImageVolume& pet,
                                              const NodeRecord& node);

}  // namespace lnm
