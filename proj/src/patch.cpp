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

#include "lnm/patch.hpp"

#include <algorithm>
#include <cmath>

#include "lnm/binary_io.hpp"
#include "lnm/error.hpp"

namespace lnm {

namespace {

using Mat3 = std::array<std::array<double, 3>, 3>;

Mat3 multiply(const Mat3& a, const Mat3& b) {
  Mat3 c{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) c[i][j] += a[i][k] * b[k][j];
  return c;
}

// Rz * Ry * Rx: rotation about x is applied first.
Mat3 rotation(const Pose& pose) {
  const double d2r = M_PI / 180.0;
  const double ax = pose.rx_deg * d2r, ay = pose.ry_deg * d2r, az = pose.rz_deg * d2r;
  const Mat3 rx{{{1, 0, 0}, {0, std::cos(ax), -std::sin(ax)}, {0, std::sin(ax), std::cos(ax)}}};
  const Mat3 ry{{{std::cos(ay), 0, std::sin(ay)}, {0, 1, 0}, {-std::sin(ay), 0, std::cos(ay)}}};
  const Mat3 rz{{{std::cos(az), -std::sin(az), 0}, {std::sin(az), std::cos(az), 0}, {0, 0, 1}}};
  return multiply(rz, multiply(ry, rx));
}

const char kDumpMagic[] = "LNMPATCH";

}  // namespace

double normalize_intensity(double value, IntensityWindow w) {
  const double t = 2.0 * (value - w.lo) / (w.hi - w.lo) - 1.0;
  return std::clamp(t, -1.0, 1.0);
}

void AugmentationConfig::validate() const {
  require(!translation_steps_px.empty() && !rotation_angles_deg.empty(),
          ErrorCode::kInvalidArgument, "augmentation step and angle lists must be nonempty");
  require(std::find(translation_steps_px.begin(), translation_steps_px.end(), 0) !=
                  translation_steps_px.end() &&
              std::find(rotation_angles_deg.begin(), rotation_angles_deg.end(), 0.0) !=
                  rotation_angles_deg.end(),
          ErrorCode::kInvalidArgument, "augmentation lists must include 0");
}

std::size_t AugmentationConfig::pose_count() const {
  const std::size_t t = translation_steps_px.size();
  const std::size_t r = rotation_angles_deg.size();
  return t * t * t * r * r * r;
}

Pose AugmentationConfig::pose_at(std::size_t index) const {
  require(index < pose_count(), ErrorCode::kInvalidArgument, "pose index out of range");
  const std::size_t t = translation_steps_px.size();
  const std::size_t r = rotation_angles_deg.size();
  Pose p;
  p.rz_deg = rotation_angles_deg[index % r];
  index /= r;
  p.ry_deg = rotation_angles_deg[index % r];
  index /= r;
  p.rx_deg = rotation_angles_deg[index % r];
  index /= r;
  p.tz = translation_steps_px[index % t];
  index /= t;
  p.ty = translation_steps_px[index % t];
  index /= t;
  p.tx = translation_steps_px[index % t];
  return p;
}

PatchStack extract_patch_stack(const ImageVolume& ct, const ImageVolume& pet, const Vec3& center,
                               const Pose& pose, const std::string& node_id) {
  require(ct.is_isotropic(1.0) && pet.is_isotropic(1.0), ErrorCode::kPrecondition,
          "patch extraction needs volumes resampled to 1.0 mm");
  require(ct.contains_world(center) && pet.contains_world(center), ErrorCode::kOutOfBounds,
          "patch center lies outside the volume");
  const Mat3 rot = rotation(pose);
  const Vec3 shift{center.x + pose.tx, center.y + pose.ty, center.z + pose.tz};
  PatchStack stack;
  stack.source_node = node_id;
  stack.pose = pose;
  const int half = kPatchSize / 2;
  for (int plane = 0; plane < 3; ++plane) {
    const double dz = kPlaneOffsetsMm[plane];
    for (int row = 0; row < kPatchSize; ++row) {
      const double dy = row - half;
      for (int col = 0; col < kPatchSize; ++col) {
        const double dx = col - half;
        const Vec3 p{shift.x + rot[0][0] * dx + rot[0][1] * dy + rot[0][2] * dz,
                     shift.y + rot[1][0] * dx + rot[1][1] * dy + rot[1][2] * dz,
                     shift.z + rot[2][0] * dx + rot[2][1] * dy + rot[2][2] * dz};
        const std::size_t at = row * kPatchSize + col;
        stack.values[plane * kPatchPlane + at] =
            static_cast<float>(normalize_intensity(ct.sample(p), kCtWindow));
        stack.values[(plane + 3) * kPatchPlane + at] =
            static_cast<float>(normalize_intensity(pet.sample(p), kPetWindow));
      }
    }
  }
  return stack;
}

std::vector<PatchStack> augment_node(const ImageVolume& ct, const ImageVolume& pet,
                                     const NodeRecord& node, const AugmentationConfig& cfg) {
  cfg.validate();
  std::vector<PatchStack> out;
  out.reserve(cfg.pose_count());
  for (std::size_t n = 0; n < cfg.pose_count(); ++n) {
    out.push_back(extract_patch_stack(ct, pet, node.center_mm, cfg.pose_at(n), node.node_id));
  }
  return out;
}

void write_patch_dump(const std::string& path, const std::vector<PatchStack>& stacks) {
  ByteWriter w;
  for (const char* c = kDumpMagic; *c; ++c) w.u8(static_cast<std::uint8_t>(*c));
  w.u64(stacks.size());
  for (const auto& s : stacks) {
    w.str(s.source_node);
    w.i32(s.pose.tx);
    w.i32(s.pose.ty);
    w.i32(s.pose.tz);
    w.f64(s.pose.rx_deg);
    w.f64(s.pose.ry_deg);
    w.f64(s.pose.rz_deg);
    w.raw(encode_f32_le(s.values));
  }
  write_file_bytes(path, w.bytes());
}

std::vector<PatchStack> read_patch_dump(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  ByteReader r(bytes);
  r.expect_magic(kDumpMagic);
  const std::uint64_t n = r.u64();
  std::vector<PatchStack> out;
  for (std::uint64_t i = 0; i < n; ++i) {
    PatchStack s;
    s.source_node = r.str();
    s.pose.tx = r.i32();
    s.pose.ty = r.i32();
    s.pose.tz = r.i32();
    s.pose.rx_deg = r.f64();
    s.pose.ry_deg = r.f64();
    s.pose.rz_deg = r.f64();
    for (auto& v : s.values) v = r.f32();
    out.push_back(std::move(s));
  }
  require(r.at_end(), ErrorCode::kParse, "trailing bytes in patch dump " + path);
  return out;
}

}  // namespace lnm
