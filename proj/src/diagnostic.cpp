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

#include "lnm/diagnostic.hpp"

#include <algorithm>
#include <cmath>

#include "lnm/error.hpp"

namespace lnm {

namespace {

void check_pairing(const ImageVolume& vol, const VoxelMask& mask) {
  const auto& a = vol.spacing();
  const auto& b = mask.spacing();
  require(vol.dims() == mask.grid() && std::abs(a.x - b.x) < 1e-9 && std::abs(a.y - b.y) < 1e-9 &&
              std::abs(a.z - b.z) < 1e-9,
          ErrorCode::kPrecondition, "mask grid does not match the volume grid");
}

std::vector<Index3> support(const VoxelMask& mask, RoiMode mode, const Vec3& center_mm) {
  auto vox = mask.voxels();
  if (mode == RoiMode::kCenterSlice) {
    const int z = center_slice_index(mask.spacing(), center_mm.z);
    std::erase_if(vox, [z](const Index3& v) { return v.z != z; });
  }
  return vox;
}

double cross(std::pair<double, double> o, std::pair<double, double> a,
             std::pair<double, double> b) {
  return (a.first - o.first) * (b.second - o.second) - (a.second - o.second) * (b.first - o.first);
}

double mean_over(const ImageVolume& vol, const std::vector<Index3>& vox) {
  double sum = 0.0;
  for (const auto& v : vox) sum += vol.at(v.x, v.y, v.z);
  return sum / static_cast<double>(vox.size());
}

}  // namespace

int center_slice_index(const Vec3& spacing, double z_mm) {
  return static_cast<int>(std::ceil(z_mm / spacing.z - 0.5));
}

SliceMask center_slice(const VoxelMask& mask, const Vec3& center_mm) {
  require(!mask.empty(), ErrorCode::kEmptyMask, "center slice of an empty mask");
  SliceMask slice;
  slice.grid = mask.grid();
  slice.spacing = mask.spacing();
  slice.z = center_slice_index(mask.spacing(), center_mm.z);
  for (const auto& v : mask.voxels()) {
    if (v.z == slice.z) slice.pixels.emplace_back(static_cast<int>(v.x), static_cast<int>(v.y));
  }
  require(!slice.pixels.empty(), ErrorCode::kEmptySlice,
          "mask has no pixels on axial slice " + std::to_string(slice.z));
  std::sort(slice.pixels.begin(), slice.pixels.end());
  return slice;
}

double short_diameter(const SliceMask& slice) {
  require(!slice.pixels.empty(), ErrorCode::kEmptySlice, "short diameter of an empty slice");
  const double pitch = std::min(slice.spacing.x, slice.spacing.y);
  using P = std::pair<double, double>;
  std::vector<P> pts;
  pts.reserve(slice.pixels.size());
  for (const auto& [x, y] : slice.pixels) pts.emplace_back(x * slice.spacing.x, y * slice.spacing.y);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pitch;

  // Andrew's monotone chain.
  std::vector<P> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  if (hull.size() < 3) return pitch;  // collinear

  double best = INFINITY;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const P& a = hull[i];
    const P& b = hull[(i + 1) % hull.size()];
    const double len = std::hypot(b.first - a.first, b.second - a.second);
    double far = 0.0;
    for (const auto& p : hull) far = std::max(far, std::abs(cross(a, b, p)) / len);
    best = std::min(best, far);
  }
  return best + pitch;
}

AreaVolume area_volume(const VoxelMask& mask, const Vec3& center_mm) {
  require(!mask.empty(), ErrorCode::kEmptyMask, "area/volume of an empty mask");
  const auto slice = center_slice(mask, center_mm);
  const auto& s = mask.spacing();
  return {static_cast<double>(slice.pixels.size()) * s.x * s.y,
          static_cast<double>(mask.count()) * mask.voxel_volume()};
}

RoiStats roi_stats(const ImageVolume& vol, const VoxelMask& mask, RoiMode mode,
                   const Vec3& center_mm) {
  check_pairing(vol, mask);
  const auto vox = support(mask, mode, center_mm);
  require(!vox.empty(), ErrorCode::kEmptyMask, "ROI statistics over an empty support");
  RoiStats st;
  st.mean = mean_over(vol, vox);
  st.max = -INFINITY;
  double ss = 0.0;
  for (const auto& v : vox) {
    const double x = vol.at(v.x, v.y, v.z);
    st.max = std::max(st.max, x);
    ss += (x - st.mean) * (x - st.mean);
  }
  st.std = std::sqrt(ss / static_cast<double>(vox.size()));
  return st;
}

double ct_contrast(const ImageVolume& ct, const VoxelMask& mask, RoiMode mode,
                   const Vec3& center_mm) {
  check_pairing(ct, mask);
  const auto inner = support(mask, mode, center_mm);
  require(!inner.empty(), ErrorCode::kEmptyMask, "CT contrast over an empty support");
  const auto shell = shell_mask(mask, kShellThicknessMm);
  const auto outer = support(shell, mode, center_mm);
  require(!outer.empty(), ErrorCode::kEmptyShell, "surrounding shell is empty");
  return mean_over(ct, inner) - mean_over(ct, outer);
}

std::array<double, kDiagnosticCount> DiagnosticFeatures::values() const {
  return {d_short_mm, area_mm2,    volume_mm3,  ct_mean_2d, ct_mean_3d,
          ct_contrast_2d, ct_contrast_3d, suv_mean_2d, suv_mean_3d, suv_max_2d,
          suv_max_3d, suv_std_2d,  suv_std_3d};
}

const std::array<std::string, kDiagnosticCount>& DiagnosticFeatures::names() {
  static const std::array<std::string, kDiagnosticCount> kNames{
      "d_short_mm",  "area_mm2",    "volume_mm3", "ct_mean_2d", "ct_mean_3d",
      "ct_contrast_2d", "ct_contrast_3d", "suv_mean_2d", "suv_mean_3d", "suv_max_2d",
      "suv_max_3d",  "suv_std_2d",  "suv_std_3d"};
  return kNames;
}

DiagnosticFeatures diagnostic_feature_set(const ImageVolume& ct, const ImageVolume& pet,
                                          const NodeRecord& node) {
  node.validate();
  const auto& m = node.mask;
  const auto& c = node.center_mm;
  DiagnosticFeatures f;
  f.d_short_mm = short_diameter(center_slice(m, c));
  const auto av = area_volume(m, c);
  f.area_mm2 = av.area_mm2;
  f.volume_mm3 = av.volume_mm3;
  f.ct_mean_2d = roi_stats(ct, m, RoiMode::kCenterSlice, c).mean;
  f.ct_mean_3d = roi_stats(ct, m, RoiMode::kVolume, c).mean;
  f.ct_contrast_2d = ct_contrast(ct, m, RoiMode::kCenterSlice, c);
  f.ct_contrast_3d = ct_contrast(ct, m, RoiMode::kVolume, c);
  const auto pet2 = roi_stats(pet, m, RoiMode::kCenterSlice, c);
  const auto pet3 = roi_stats(pet, m, RoiMode::kVolume, c);
  f.suv_mean_2d = pet2.mean;
  f.suv_mean_3d = pet3.mean;
  f.suv_max_2d = pet2.max;
  f.suv_max_3d = pet3.max;
  f.suv_std_2d = pet2.std;
  f.suv_std_3d = pet3.std;
  return f;
}

}  // namespace lnm
