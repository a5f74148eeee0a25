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

#include "lnm/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lnm/error.hpp"

namespace lnm {

const char* modality_name(Modality m) {
  return m == Modality::kCtHu ? "CT_HU" : "PET_SUV";
}

Modality parse_modality(const std::string& name) {
  if (name == "CT_HU") return Modality::kCtHu;
  if (name == "PET_SUV") return Modality::kPetSuv;
  fail(ErrorCode::kParse, "unknown modality '" + name + "'");
}

const char* label_name(Label l) { return l == Label::kMalignant ? "malignant" : "benign"; }

Label parse_label(const std::string& name) {
  if (name == "benign" || name == "0") return Label::kBenign;
  if (name == "malignant" || name == "1") return Label::kMalignant;
  fail(ErrorCode::kParse, "unknown label '" + name + "'");
}

namespace {

void check_grid(const Dims& dims, const Vec3& spacing) {
  require(dims.x > 0 && dims.y > 0 && dims.z > 0, ErrorCode::kInvalidVolume,
          "volume dims must be positive");
  require(spacing.x > 0 && spacing.y > 0 && spacing.z > 0 && std::isfinite(spacing.x) &&
              std::isfinite(spacing.y) && std::isfinite(spacing.z),
          ErrorCode::kInvalidVolume, "volume spacing must be positive");
}

// Fractional index, clamped to the valid range, split into base and weight.
inline void split_coord(double f, int n, int& i0, int& i1, double& w) {
  if (f <= 0.0 || n == 1) {
    i0 = i1 = 0;
    w = 0.0;
    return;
  }
  if (f >= n - 1) {
    i0 = i1 = n - 1;
    w = 0.0;
    return;
  }
  i0 = static_cast<int>(std::floor(f));
  i1 = i0 + 1;
  w = f - i0;
}

inline std::int64_t round_half_up(double v) {
  return static_cast<std::int64_t>(std::floor(v + 0.5));
}

}  // namespace

ImageVolume::ImageVolume(Dims dims, Vec3 spacing, Modality modality, std::vector<float> data)
    : dims_(dims), spacing_(spacing), modality_(modality), data_(std::move(data)) {
  check_grid(dims_, spacing_);
  require(data_.size() == dims_.count(), ErrorCode::kInvalidVolume,
          "volume payload has " + std::to_string(data_.size()) + " values, expected " +
              std::to_string(dims_.count()));
  for (auto& v : data_) {
    require(std::isfinite(v), ErrorCode::kInvalidVolume, "non-finite voxel value");
    if (modality_ == Modality::kPetSuv && v < 0.0f) v = 0.0f;
  }
}

ImageVolume ImageVolume::filled(Dims dims, Vec3 spacing, Modality modality, float value) {
  return ImageVolume(dims, spacing, modality, std::vector<float>(dims.count(), value));
}

ImageVolume ImageVolume::from_function(Dims dims, Vec3 spacing, Modality modality,
                                       const std::function<float(int, int, int)>& fn) {
  check_grid(dims, spacing);
  std::vector<float> data(dims.count());
  std::size_t n = 0;
  for (int k = 0; k < dims.z; ++k)
    for (int j = 0; j < dims.y; ++j)
      for (int i = 0; i < dims.x; ++i) data[n++] = fn(i, j, k);
  return ImageVolume(dims, spacing, modality, std::move(data));
}

double ImageVolume::sample(const Vec3& p) const {
  int x0, x1, y0, y1, z0, z1;
  double wx, wy, wz;
  split_coord(p.x / spacing_.x, dims_.x, x0, x1, wx);
  split_coord(p.y / spacing_.y, dims_.y, y0, y1, wy);
  split_coord(p.z / spacing_.z, dims_.z, z0, z1, wz);
  const double c000 = at(x0, y0, z0), c100 = at(x1, y0, z0);
  const double c010 = at(x0, y1, z0), c110 = at(x1, y1, z0);
  const double c001 = at(x0, y0, z1), c101 = at(x1, y0, z1);
  const double c011 = at(x0, y1, z1), c111 = at(x1, y1, z1);
  const double c00 = c000 * (1.0 - wx) + c100 * wx;
  const double c10 = c010 * (1.0 - wx) + c110 * wx;
  const double c01 = c001 * (1.0 - wx) + c101 * wx;
  const double c11 = c011 * (1.0 - wx) + c111 * wx;
  const double c0 = c00 * (1.0 - wy) + c10 * wy;
  const double c1 = c01 * (1.0 - wy) + c11 * wy;
  return c0 * (1.0 - wz) + c1 * wz;
}

bool ImageVolume::is_isotropic(double mm, double tol) const {
  return std::abs(spacing_.x - mm) <= tol && std::abs(spacing_.y - mm) <= tol &&
         std::abs(spacing_.z - mm) <= tol;
}

bool ImageVolume::contains_world(const Vec3& p) const {
  auto inside = [](double c, double s, int n) {
    return c >= -0.5 * s && c <= (n - 0.5) * s;
  };
  return inside(p.x, spacing_.x, dims_.x) && inside(p.y, spacing_.y, dims_.y) &&
         inside(p.z, spacing_.z, dims_.z);
}

VoxelMask::VoxelMask(Dims grid, Vec3 spacing, Index3 offset, Dims box,
                     std::vector<std::uint8_t> bits)
    : grid_(grid), spacing_(spacing), offset_(offset), box_(box), bits_(std::move(bits)) {
  check_grid(grid_, spacing_);
  require(box_.x >= 0 && box_.y >= 0 && box_.z >= 0, ErrorCode::kInvalidArgument,
          "mask box dims must be nonnegative");
  require(bits_.size() == box_.count(), ErrorCode::kInvalidArgument,
          "mask payload has " + std::to_string(bits_.size()) + " bytes, expected " +
              std::to_string(box_.count()));
  if (box_.count() > 0) {
    require(offset_.x >= 0 && offset_.y >= 0 && offset_.z >= 0 &&
                offset_.x + box_.x <= grid_.x && offset_.y + box_.y <= grid_.y &&
                offset_.z + box_.z <= grid_.z,
            ErrorCode::kOutOfBounds, "mask box exceeds its grid");
  }
  for (auto& b : bits_) {
    require(b <= 1, ErrorCode::kInvalidArgument, "mask bytes must be 0 or 1");
    count_ += b;
  }
}

VoxelMask VoxelMask::from_voxels(Dims grid, Vec3 spacing, std::span<const Index3> voxels) {
  if (voxels.empty()) return VoxelMask(grid, spacing, Index3{}, Dims{0, 0, 0}, {});
  Index3 lo = voxels.front(), hi = voxels.front();
  for (const auto& v : voxels) {
    require(grid.contains(v.x, v.y, v.z), ErrorCode::kOutOfBounds, "mask voxel outside grid");
    lo = {std::min(lo.x, v.x), std::min(lo.y, v.y), std::min(lo.z, v.z)};
    hi = {std::max(hi.x, v.x), std::max(hi.y, v.y), std::max(hi.z, v.z)};
  }
  const Dims box{static_cast<int>(hi.x - lo.x + 1), static_cast<int>(hi.y - lo.y + 1),
                 static_cast<int>(hi.z - lo.z + 1)};
  std::vector<std::uint8_t> bits(box.count(), 0);
  for (const auto& v : voxels) bits[box.linear(v.x - lo.x, v.y - lo.y, v.z - lo.z)] = 1;
  return VoxelMask(grid, spacing, lo, box, std::move(bits));
}

VoxelMask VoxelMask::from_predicate(Dims grid, Vec3 spacing,
                                    const std::function<bool(int, int, int)>& inside) {
  std::vector<Index3> voxels;
  for (int k = 0; k < grid.z; ++k)
    for (int j = 0; j < grid.y; ++j)
      for (int i = 0; i < grid.x; ++i)
        if (inside(i, j, k)) voxels.push_back({i, j, k});
  return from_voxels(grid, spacing, voxels);
}

VoxelMask VoxelMask::sphere(Dims grid, Vec3 spacing, Vec3 c, double r) {
  std::vector<Index3> voxels;
  const auto lo = [&](double cc, double s) {
    return std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor((cc - r) / s)));
  };
  const auto hi = [&](double cc, double s, int n) {
    return std::min<std::int64_t>(n - 1, static_cast<std::int64_t>(std::ceil((cc + r) / s)));
  };
  for (auto k = lo(c.z, spacing.z); k <= hi(c.z, spacing.z, grid.z); ++k)
    for (auto j = lo(c.y, spacing.y); j <= hi(c.y, spacing.y, grid.y); ++j)
      for (auto i = lo(c.x, spacing.x); i <= hi(c.x, spacing.x, grid.x); ++i) {
        const double dx = i * spacing.x - c.x, dy = j * spacing.y - c.y, dz = k * spacing.z - c.z;
        if (dx * dx + dy * dy + dz * dz <= r * r) voxels.push_back({i, j, k});
      }
  return from_voxels(grid, spacing, voxels);
}

bool VoxelMask::test(std::int64_t i, std::int64_t j, std::int64_t k) const {
  const std::int64_t li = i - offset_.x, lj = j - offset_.y, lk = k - offset_.z;
  if (!box_.contains(li, lj, lk)) return false;
  return bits_[box_.linear(li, lj, lk)] != 0;
}

std::vector<Index3> VoxelMask::voxels() const {
  std::vector<Index3> out;
  out.reserve(count_);
  std::size_t n = 0;
  for (int k = 0; k < box_.z; ++k)
    for (int j = 0; j < box_.y; ++j)
      for (int i = 0; i < box_.x; ++i, ++n)
        if (bits_[n]) out.push_back({offset_.x + i, offset_.y + j, offset_.z + k});
  return out;
}

void NodeRecord::validate() const {
  require(!patient_id.empty(), ErrorCode::kInvalidArgument, "node has an empty patient id");
  require(!mask.empty(), ErrorCode::kEmptyMask, "node " + node_id + " has an empty mask");
  const auto& s = mask.spacing();
  const auto& o = mask.offset();
  const auto& b = mask.box();
  auto inside = [](double c, double sp, std::int64_t off, int len) {
    return c >= (off - 0.5) * sp && c <= (off + len - 0.5) * sp;
  };
  require(inside(center_mm.x, s.x, o.x, b.x) && inside(center_mm.y, s.y, o.y, b.y) &&
              inside(center_mm.z, s.z, o.z, b.z),
          ErrorCode::kOutOfBounds, "node " + node_id + " center lies outside its mask box");
}

int resampled_extent(int n, double s, double t) {
  return std::max(1, static_cast<int>(std::llround(n * s / t)));
}

ImageVolume resample_isotropic(const ImageVolume& vol, double target_mm) {
  require(target_mm > 0 && std::isfinite(target_mm), ErrorCode::kInvalidArgument,
          "target spacing must be positive");
  require(!vol.empty(), ErrorCode::kInvalidVolume, "cannot resample an empty volume");
  const auto& d = vol.dims();
  const auto& s = vol.spacing();
  const Dims out{resampled_extent(d.x, s.x, target_mm), resampled_extent(d.y, s.y, target_mm),
                 resampled_extent(d.z, s.z, target_mm)};
  std::vector<float> data(out.count());
  std::size_t n = 0;
  for (int k = 0; k < out.z; ++k)
    for (int j = 0; j < out.y; ++j)
      for (int i = 0; i < out.x; ++i)
        data[n++] = static_cast<float>(vol.sample({i * target_mm, j * target_mm, k * target_mm}));
  return ImageVolume(out, {target_mm, target_mm, target_mm}, vol.modality(), std::move(data));
}

VoxelMask resample_mask(const VoxelMask& mask, double target_mm) {
  require(target_mm > 0 && std::isfinite(target_mm), ErrorCode::kInvalidArgument,
          "target spacing must be positive");
  require(!mask.empty(), ErrorCode::kEmptyMask, "cannot resample an empty mask");
  const auto& g = mask.grid();
  const auto& s = mask.spacing();
  const Dims out{resampled_extent(g.x, s.x, target_mm), resampled_extent(g.y, s.y, target_mm),
                 resampled_extent(g.z, s.z, target_mm)};
  const auto& o = mask.offset();
  const auto& b = mask.box();
  // Output indices whose nearest source voxel can fall in the box.
  // Source indices clamp to the border, matching intensity resampling.
  auto range = [&](std::int64_t off, int len, double sp, int n_in, int n_out) {
    auto lo = static_cast<std::int64_t>(std::floor((off - 0.5) * sp / target_mm)) - 1;
    auto hi = static_cast<std::int64_t>(std::ceil((off + len - 0.5) * sp / target_mm)) + 1;
    if (off + len == n_in) hi = n_out - 1;
    return std::pair{std::max<std::int64_t>(0, lo), std::min<std::int64_t>(n_out - 1, hi)};
  };
  auto source = [&](std::int64_t i, double sp, int n_in) {
    return std::clamp<std::int64_t>(round_half_up(i * target_mm / sp), 0, n_in - 1);
  };
  const auto [x0, x1] = range(o.x, b.x, s.x, g.x, out.x);
  const auto [y0, y1] = range(o.y, b.y, s.y, g.y, out.y);
  const auto [z0, z1] = range(o.z, b.z, s.z, g.z, out.z);
  std::vector<Index3> voxels;
  for (auto k = z0; k <= z1; ++k) {
    const auto sk = source(k, s.z, g.z);
    for (auto j = y0; j <= y1; ++j) {
      const auto sj = source(j, s.y, g.y);
      for (auto i = x0; i <= x1; ++i) {
        const auto si = source(i, s.x, g.x);
        if (mask.test(si, sj, sk)) voxels.push_back({i, j, k});
      }
    }
  }
  return VoxelMask::from_voxels(out, {target_mm, target_mm, target_mm}, voxels);
}

ImageVolume compute_suv(const ImageVolume& activity, double dose, double weight) {
  require(dose > 0 && std::isfinite(dose), ErrorCode::kInvalidArgument,
          "injected dose must be positive");
  require(weight > 0 && std::isfinite(weight), ErrorCode::kInvalidArgument,
          "body weight must be positive");
  const double factor = weight / dose;
  std::vector<float> data(activity.data().size());
  for (std::size_t n = 0; n < data.size(); ++n) {
    data[n] = static_cast<float>(static_cast<double>(activity.data()[n]) * factor);
  }
  return ImageVolume(activity.dims(), activity.spacing(), Modality::kPetSuv, std::move(data));
}

VoxelMask shell_mask(const VoxelMask& mask, double thickness_mm) {
  require(!mask.empty(), ErrorCode::kEmptyMask, "shell of an empty mask");
  const auto& s = mask.spacing();
  require(thickness_mm >= std::min({s.x, s.y, s.z}), ErrorCode::kEmptyShell,
          "shell thickness is smaller than one voxel");
  const int rx = static_cast<int>(std::floor(thickness_mm / s.x + 1e-9));
  const int ry = static_cast<int>(std::floor(thickness_mm / s.y + 1e-9));
  const int rz = static_cast<int>(std::floor(thickness_mm / s.z + 1e-9));
  const double t2 = thickness_mm * thickness_mm * (1.0 + 1e-12);
  std::vector<Index3> ball;
  for (int dz = -rz; dz <= rz; ++dz)
    for (int dy = -ry; dy <= ry; ++dy)
      for (int dx = -rx; dx <= rx; ++dx) {
        const double d2 = dx * dx * s.x * s.x + dy * dy * s.y * s.y + dz * dz * s.z * s.z;
        if (d2 <= t2 && (dx || dy || dz)) ball.push_back({dx, dy, dz});
      }
  const auto& g = mask.grid();
  const auto& o = mask.offset();
  const auto& b = mask.box();
  const Index3 lo{std::max<std::int64_t>(0, o.x - rx), std::max<std::int64_t>(0, o.y - ry),
                  std::max<std::int64_t>(0, o.z - rz)};
  const Index3 hi{std::min<std::int64_t>(g.x - 1, o.x + b.x - 1 + rx),
                  std::min<std::int64_t>(g.y - 1, o.y + b.y - 1 + ry),
                  std::min<std::int64_t>(g.z - 1, o.z + b.z - 1 + rz)};
  const Dims box{static_cast<int>(hi.x - lo.x + 1), static_cast<int>(hi.y - lo.y + 1),
                 static_cast<int>(hi.z - lo.z + 1)};
  std::vector<std::uint8_t> bits(box.count(), 0);
  for (const auto& v : mask.voxels()) {
    for (const auto& d : ball) {
      const std::int64_t i = v.x + d.x, j = v.y + d.y, k = v.z + d.z;
      if (!g.contains(i, j, k)) continue;
      bits[box.linear(i - lo.x, j - lo.y, k - lo.z)] = 1;
    }
  }
  std::vector<Index3> voxels;
  std::size_t n = 0;
  for (int k = 0; k < box.z; ++k)
    for (int j = 0; j < box.y; ++j)
      for (int i = 0; i < box.x; ++i, ++n)
        if (bits[n] && !mask.test(lo.x + i, lo.y + j, lo.z + k))
          voxels.push_back({lo.x + i, lo.y + j, lo.z + k});
  return VoxelMask::from_voxels(g, s, voxels);
}

}  // namespace lnm
