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

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "doctest.h"
#include "lnm/error.hpp"
#include "lnm/patch.hpp"
#include "lnm/rng.hpp"

using namespace lnm;

namespace {

const Vec3 kIso{1, 1, 1};

ImageVolume smooth_ct(Dims d) {
  return ImageVolume::from_function(d, kIso, Modality::kCtHu, [](int i, int j, int k) {
    return static_cast<float>(300.0 * std::sin(i / 7.0) + 200.0 * std::cos(j / 9.0) +
                              100.0 * std::sin(k / 11.0 + 0.3));
  });
}

ImageVolume smooth_pet(Dims d) {
  return ImageVolume::from_function(d, kIso, Modality::kPetSuv, [](int i, int j, int k) {
    return static_cast<float>(8.0 + 4.0 * std::sin(i / 8.0 + j / 10.0) + 2.0 * std::cos(k / 6.0));
  });
}

}  // namespace

TEST_CASE("window endpoints map to -1 and 1") {
  CHECK(normalize_intensity(-300, kCtWindow) == -1.0);
  CHECK(normalize_intensity(1000, kCtWindow) == 1.0);
  CHECK(normalize_intensity(-2000, kCtWindow) == -1.0);
  CHECK(normalize_intensity(0, kPetWindow) == -1.0);
  CHECK(normalize_intensity(10, kPetWindow) == 0.0);
  CHECK(normalize_intensity(50, kPetWindow) == 1.0);
}

TEST_CASE("constant volumes at the window floor give -1 everywhere") {
  const Dims d{40, 40, 20};
  const auto ct = ImageVolume::filled(d, kIso, Modality::kCtHu, -300.f);
  const auto pet = ImageVolume::filled(d, kIso, Modality::kPetSuv, 0.f);
  const auto s = extract_patch_stack(ct, pet, {20, 20, 10}, {});
  REQUIRE(s.values.size() == 6u * 51u * 51u);
  for (float v : s.values) CHECK(v == -1.0f);
}

TEST_CASE("identity pose on an x ramp gives a symmetric linear row") {
  const Dims d{80, 50, 30};
  const auto ct = ImageVolume::from_function(d, kIso, Modality::kCtHu,
                                             [](int i, int, int) { return static_cast<float>(i); });
  const auto pet = ImageVolume::filled(d, kIso, Modality::kPetSuv, 1.f);
  const Vec3 c{40, 25, 15};
  const auto s = extract_patch_stack(ct, pet, c, {});
  for (int ch = 0; ch < 3; ++ch) {
    for (int col = 0; col < kPatchSize; ++col) {
      const double expected = normalize_intensity(c.x + col - 25, kCtWindow);
      CHECK(s.at(ch, 25, col) == doctest::Approx(expected).epsilon(1e-6));
    }
    for (int u = 1; u <= 25; ++u) {
      CHECK(s.at(ch, 25, 25 + u) + s.at(ch, 25, 25 - u) ==
            doctest::Approx(2.0 * s.at(ch, 25, 25)).epsilon(1e-6));
    }
  }
}

TEST_CASE("180 degree rotation about z mirrors an impulse") {
  const Dims d{60, 60, 30};
  const Vec3 c{30, 30, 15};
  const auto ct = ImageVolume::from_function(d, kIso, Modality::kCtHu, [](int i, int j, int k) {
    return (i == 33 && j == 30 && k == 15) ? 1000.f : -300.f;
  });
  const auto pet = ImageVolume::filled(d, kIso, Modality::kPetSuv, 0.f);
  const auto plain = extract_patch_stack(ct, pet, c, {});
  CHECK(plain.at(1, 25, 28) == doctest::Approx(1.0));
  Pose flip;
  flip.rz_deg = 180.0;
  const auto rotated = extract_patch_stack(ct, pet, c, flip);
  CHECK(rotated.at(1, 25, 22) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(rotated.at(1, 25, 28) == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("translation shifts the sampling grid by whole pixels") {
  const Dims d{60, 60, 30};
  const auto ct = smooth_ct(d);
  const auto pet = smooth_pet(d);
  Pose shift;
  shift.tx = 2;
  shift.tz = -2;
  const auto a = extract_patch_stack(ct, pet, {30, 30, 15}, shift);
  const auto b = extract_patch_stack(ct, pet, {32, 30, 13}, {});
  CHECK(a.values == b.values);
}

TEST_CASE("augmentation pose grid") {
  const Dims d{70, 70, 40};
  const auto ct = smooth_ct(d);
  const auto pet = smooth_pet(d);
  NodeRecord node;
  node.patient_id = "P";
  node.node_id = "N7";
  node.center_mm = {35, 35, 20};
  node.mask = VoxelMask::sphere(d, kIso, node.center_mm, 3.0);

  SUBCASE("default grid gives 729 stacks including the identity") {
    const AugmentationConfig cfg;
    CHECK(cfg.pose_count() == 729u);
    const auto stacks = augment_node(ct, pet, node, cfg);
    CHECK(stacks.size() == 729u);
    int identity = 0;
    for (const auto& s : stacks) identity += s.pose.is_identity();
    CHECK(identity == 1);
    // Every pose distinct.
    for (std::size_t i = 1; i < 729; ++i) CHECK_FALSE(cfg.pose_at(i) == cfg.pose_at(i - 1));
  }
  SUBCASE("singleton grid equals the plain extraction") {
    AugmentationConfig cfg;
    cfg.translation_steps_px = {0};
    cfg.rotation_angles_deg = {0.0};
    const auto stacks = augment_node(ct, pet, node, cfg);
    REQUIRE(stacks.size() == 1u);
    CHECK(stacks[0].values == extract_patch_stack(ct, pet, node.center_mm, {}).values);
    CHECK(stacks[0].source_node == "N7");
  }
  SUBCASE("count scales with the list sizes") {
    AugmentationConfig cfg;
    cfg.translation_steps_px = {-1, 0};
    cfg.rotation_angles_deg = {0.0, 10.0, 20.0, 30.0};
    CHECK(cfg.pose_count() == 8u * 64u);
    CHECK(1397u * AugmentationConfig{}.pose_count() == 1018413u);
  }
  SUBCASE("lists without zero are rejected") {
    AugmentationConfig cfg;
    cfg.translation_steps_px = {1, 2};
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg.translation_steps_px.clear();
    CHECK_THROWS_AS(cfg.validate(), Error);
  }
}

TEST_CASE("patch values stay in [-1, 1] for arbitrary inputs") {
  Rng rng(5);
  const Dims d{56, 56, 24};
  for (int trial = 0; trial < 5; ++trial) {
    const auto ct = ImageVolume::from_function(d, kIso, Modality::kCtHu, [&](int, int, int) {
      return static_cast<float>(draw_uniform(rng, -3000, 5000));
    });
    const auto pet = ImageVolume::from_function(d, kIso, Modality::kPetSuv, [&](int, int, int) {
      return static_cast<float>(draw_uniform(rng, 0, 80));
    });
    Pose pose{static_cast<int>(draw_index(rng, 5)) - 2, 0, 1, draw_uniform(rng, -30, 30), 7.0,
              draw_uniform(rng, -90, 90)};
    const auto s = extract_patch_stack(ct, pet, {28, 28, 12}, pose);
    for (float v : s.values) {
      CHECK(v >= -1.0f);
      CHECK(v <= 1.0f);
    }
  }
}

TEST_CASE("zero-pose extraction is deterministic") {
  const Dims d{60, 60, 30};
  const auto ct = smooth_ct(d);
  const auto pet = smooth_pet(d);
  const auto a = extract_patch_stack(ct, pet, {30.3, 29.6, 15.2}, {});
  const auto b = extract_patch_stack(ct, pet, {30.3, 29.6, 15.2}, {});
  CHECK(a.values == b.values);
}

TEST_CASE("rotating the scene by theta and sampling at theta recovers the zero pose") {
  const Dims d{72, 72, 48};
  const Vec3 c{36, 36, 24};
  const auto ct = smooth_ct(d);
  const auto pet = smooth_pet(d);
  const auto reference = extract_patch_stack(ct, pet, c, {});
  for (int axis = 0; axis < 3; ++axis) {
    for (double theta : {-20.0, 20.0}) {
      Pose back;
      (axis == 0 ? back.rx_deg : axis == 1 ? back.ry_deg : back.rz_deg) = theta;
      // Resample the scene rotated by -theta, then sample it rotated by +theta.
      Pose inverse;
      (axis == 0 ? inverse.rx_deg : axis == 1 ? inverse.ry_deg : inverse.rz_deg) = -theta;
      const double t = -theta * M_PI / 180.0;
      auto rotate = [&](double x, double y, double z) {
        const double dx = x - c.x, dy = y - c.y, dz = z - c.z;
        const double cs = std::cos(t), sn = std::sin(t);
        if (axis == 0) return Vec3{x, c.y + cs * dy - sn * dz, c.z + sn * dy + cs * dz};
        if (axis == 1) return Vec3{c.x + cs * dx + sn * dz, y, c.z - sn * dx + cs * dz};
        return Vec3{c.x + cs * dx - sn * dy, c.y + sn * dx + cs * dy, z};
      };
      const auto ct_rot = ImageVolume::from_function(d, kIso, Modality::kCtHu, [&](int i, int j, int k) {
        return static_cast<float>(ct.sample(rotate(i, j, k)));
      });
      const auto pet_rot =
          ImageVolume::from_function(d, kIso, Modality::kPetSuv, [&](int i, int j, int k) {
            return static_cast<float>(pet.sample(rotate(i, j, k)));
          });
      const auto round_trip = extract_patch_stack(ct_rot, pet_rot, c, back);
      double worst = 0.0;
      for (std::size_t n = 0; n < kPatchValues; ++n) {
        worst = std::max(worst, std::abs(double(round_trip.values[n]) - reference.values[n]));
      }
      CHECK(worst <= 0.05);
    }
  }
}

TEST_CASE("extraction preconditions") {
  const auto ct = ImageVolume::filled({30, 30, 30}, kIso, Modality::kCtHu, 0.f);
  const auto pet = ImageVolume::filled({30, 30, 30}, kIso, Modality::kPetSuv, 0.f);
  CHECK_THROWS_AS(extract_patch_stack(ct, pet, {-5, 10, 10}, {}), Error);
  const auto coarse = ImageVolume::filled({30, 30, 30}, {1, 1, 2}, Modality::kCtHu, 0.f);
  CHECK_THROWS_AS(extract_patch_stack(coarse, pet, {10, 10, 10}, {}), Error);
}

TEST_CASE("patch dump round-trip") {
  const Dims d{60, 60, 30};
  const auto ct = smooth_ct(d);
  const auto pet = smooth_pet(d);
  Pose p{2, -2, 0, 20.0, 0.0, -20.0};
  std::vector<PatchStack> stacks{extract_patch_stack(ct, pet, {30, 30, 15}, {}, "a"),
                                 extract_patch_stack(ct, pet, {31, 30, 15}, p, "b")};
  const auto path = (std::filesystem::temp_directory_path() / "lnm_patch_dump.bin").string();
  write_patch_dump(path, stacks);
  const auto back = read_patch_dump(path);
  REQUIRE(back.size() == 2u);
  CHECK(back[1].source_node == "b");
  CHECK(back[1].pose == p);
  CHECK(back[1].values == stacks[1].values);
  std::filesystem::remove(path);
}
