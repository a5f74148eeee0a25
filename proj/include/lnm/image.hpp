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
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "lnm/types.hpp"

namespace lnm {

enum class Modality : std::uint8_t { kCtHu = 0, kPetSuv = 1 };

const char* modality_name(Modality m);
Modality parse_modality(const std::string& name);

// Scalar 3D grid. World coordinates put the center of voxel (0,0,0) at the
// origin with axes aligned to the array, so voxel (i,j,k) sits at
// (i*sx, j*sy, k*sz) mm.
class ImageVolume {
 public:
  ImageVolume() = default;
  // PET values are clamped at zero; non-finite values are rejected.
  ImageVolume(Dims dims, Vec3 spacing, Modality modality, std::vector<float> data);

  static ImageVolume filled(Dims dims, Vec3 spacing, Modality modality, float value);
  static ImageVolume from_function(Dims dims, Vec3 spacing, Modality modality,
                                   const std::function<float(int, int, int)>& fn);

  const Dims& dims() const { return dims_; }
  const Vec3& spacing() const { return spacing_; }
  Modality modality() const { return modality_; }
  std::span<const float> data() const { return data_; }
  bool empty() const { return data_.empty(); }

  float at(std::int64_t i, std::int64_t j, std::int64_t k) const {
    return data_[dims_.linear(i, j, k)];
  }

  // Trilinear sample at a world position; coordinates outside the grid clamp
  // to the nearest border voxel.
  double sample(const Vec3& world_mm) const;

  bool is_isotropic(double mm, double tol = 1e-9) const;
  // True when the world point lies inside the voxel-edge extent of the grid.
  bool contains_world(const Vec3& world_mm) const;

 private:
  Dims dims_;
  Vec3 spacing_{1.0, 1.0, 1.0};
  Modality modality_ = Modality::kCtHu;
  std::vector<float> data_;
};

// Binary mask stored as a tight-ish bounding box (offset + box dims) inside a
// parent grid. grid() matches the paired volume's dims.
class VoxelMask {
 public:
  VoxelMask() = default;
  VoxelMask(Dims grid, Vec3 spacing, Index3 offset, Dims box, std::vector<std::uint8_t> bits);

  static VoxelMask from_voxels(Dims grid, Vec3 spacing, std::span<const Index3> voxels);
  static VoxelMask from_predicate(Dims grid, Vec3 spacing,
                                  const std::function<bool(int, int, int)>& inside);
  // Voxels whose centers lie within radius_mm of center_mm.
  static VoxelMask sphere(Dims grid, Vec3 spacing, Vec3 center_mm, double radius_mm);

  const Dims& grid() const { return grid_; }
  const Vec3& spacing() const { return spacing_; }
  const Index3& offset() const { return offset_; }
  const Dims& box() const { return box_; }
  std::span<const std::uint8_t> bits() const { return bits_; }

  bool test(std::int64_t i, std::int64_t j, std::int64_t k) const;
  std::size_t count() const { return count_; }
  bool empty() const { return count_ == 0; }
  // Set voxels in global grid indices, z-major then y then x.
  std::vector<Index3> voxels() const;
  double voxel_volume() const { return spacing_.x * spacing_.y * spacing_.z; }

 private:
  Dims grid_;
  Vec3 spacing_{1.0, 1.0, 1.0};
  Index3 offset_;
  Dims box_;
  std::vector<std::uint8_t> bits_;
  std::size_t count_ = 0;
};

// One axial plane of a mask at a fixed z index, global x/y indices.
struct SliceMask {
  Dims grid;  // z unused
  Vec3 spacing;
  int z = 0;
  std::vector<std::pair<int, int>> pixels;  // (x, y), sorted
};

ImageVolume resample_isotropic(const ImageVolume& vol, double target_mm);
VoxelMask resample_mask(const VoxelMask& mask, double target_mm);
ImageVolume compute_suv(const ImageVolume& activity_bq_per_ml, double injected_dose_bq,
                        double body_weight_g);
// Voxels outside the mask whose center distance to the nearest mask voxel
// center is <= thickness_mm, clipped to the grid.
VoxelMask shell_mask(const VoxelMask& mask, double thickness_mm);

enum class Label : std::uint8_t { kBenign = 0, kMalignant = 1 };

const char* label_name(Label l);
Label parse_label(const std::string& name);

// One lymph node: the per-node sample unit with its gold-standard label.
struct NodeRecord {
  std::string patient_id;
  std::string node_id;
  std::string station;
  Label label = Label::kBenign;
  Vec3 center_mm;
  VoxelMask mask;

  // Throws when patient_id is empty, the mask is empty, or the center falls
  // outside the mask bounding box.
  void validate() const;
};

// Grid dims produced when resampling n voxels of spacing s to target t.
int resampled_extent(int n, double s, double t);

}  // namespace lnm
