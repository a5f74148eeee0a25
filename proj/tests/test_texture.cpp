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

#include <doctest.h>

#include <cmath>
#include <deque>
#include <map>
#include <set>
#include <vector>

#include "lnm/diagnostic.hpp"
#include "lnm/error.hpp"
#include "lnm/rng.hpp"
#include "lnm/texture.hpp"
#include "oracles.hpp"

using namespace lnm;
using namespace lnm::oracle;

namespace {

template <class A, class B>
void check_close(const A& got, const B& want, double rel) {
  REQUIRE(got.size() == want.size());
  for (std::size_t n = 0; n < got.size(); ++n) {
    CAPTURE(n);
    CHECK(got[n] == doctest::Approx(want[n]).epsilon(rel).scale(1.0));
  }
}

QuantizedRoi constant_roi(Dims box, int level, int bins) {
  return QuantizedRoi::from_levels(box, std::vector<int>(box.count(), level), bins);
}

}  // namespace

TEST_CASE("quantize_value endpoints, clamping and ramp balance") {
  CHECK(quantize_value(-300, 64, kCtWindow) == 1);
  CHECK(quantize_value(1000, 64, kCtWindow) == 64);
  CHECK(quantize_value(-500, 64, kCtWindow) == 1);
  CHECK(quantize_value(5000, 64, kCtWindow) == 64);
  CHECK(quantize_value(0, 64, kPetWindow) == 1);
  CHECK(quantize_value(20, 64, kPetWindow) == 64);

  for (int k : {1, 3, 7}) {
    const int n = 64 * k;
    std::vector<int> count(65, 0);
    int prev = 0;
    for (int t = 0; t < n; ++t) {
      const double v = -300.0 + 1300.0 * t / (n - 1);
      const int l = quantize_value(v, 64, kCtWindow);
      CHECK(l >= prev);
      prev = l;
      ++count[l];
    }
    for (int l = 1; l <= 64; ++l) {
      CAPTURE(l);
      CHECK(std::abs(count[l] - k) <= 1);
    }
  }
}

TEST_CASE("quantize over a mask and argument checks") {
  Dims d{6, 6, 6};
  auto vol = ImageVolume::from_function(d, {1, 1, 1}, Modality::kCtHu,
                                        [](int i, int, int) { return float(-300 + 200 * i); });
  auto mask = VoxelMask::sphere(d, {1, 1, 1}, {2.5, 2.5, 2.5}, 2.0);
  auto roi = quantize(vol, mask, 16, kCtWindow);
  CHECK(roi.voxel_count() == mask.count());
  for (int l : roi.levels) CHECK((l >= 0 && l <= 16));
  for (int k = 0; k < roi.box.z; ++k)
    for (int j = 0; j < roi.box.y; ++j)
      for (int i = 0; i < roi.box.x; ++i) {
        const auto gx = roi.offset.x + i, gy = roi.offset.y + j, gz = roi.offset.z + k;
        if (mask.test(gx, gy, gz))
          CHECK(roi.level(i, j, k) == quantize_value(vol.at(gx, gy, gz), 16, kCtWindow));
        else
          CHECK(roi.level(i, j, k) == 0);
      }
  CHECK_THROWS_AS(quantize(vol, mask, 1, kCtWindow), Error);
  CHECK_THROWS_AS(quantize(vol, mask, 8, IntensityWindow{5, 5}), Error);
}

TEST_CASE("GLCM of constant and two-voxel ROIs") {
  auto c = build_glcm(constant_roi({3, 3, 3}, 5, 8));
  CHECK(c.at(5, 5) == 1.0);
  const auto f = glcm_features(c);
  CHECK(f[0] == doctest::Approx(1.0));
  CHECK(f[1] == doctest::Approx(0.0));
  CHECK(f[2] == doctest::Approx(0.0));
  CHECK(f[4] == doctest::Approx(1.0));

  auto two = build_glcm(QuantizedRoi::from_levels({2, 1, 1}, {2, 7}, 8));
  CHECK(two.at(2, 7) == doctest::Approx(0.5));
  CHECK(two.at(7, 2) == doctest::Approx(0.5));

  CHECK_THROWS_AS(build_glcm(QuantizedRoi::from_levels({3, 1, 1}, {1, 0, 1}, 4)), Error);
  try {
    build_glcm(QuantizedRoi::from_levels({1, 1, 1}, {3}, 4));
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDegenerateRoi);
  }
}

TEST_CASE("GLCM matches all-pairs enumeration exactly on random 4x4x4 ROIs") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> levels(64);
    for (auto& l : levels) l = draw_unit(rng) < 0.8 ? 1 + int(draw_index(rng, 6)) : 0;
    auto roi = QuantizedRoi::from_levels({4, 4, 4}, levels, 6);
    const auto want = oracle_glcm(roi);
    if (want.empty()) continue;
    const auto got = build_glcm(roi);
    for (std::size_t n = 0; n < want.size(); ++n) CHECK(got.p[n] == want[n]);
  }
}

TEST_CASE("checkerboard along one axis: contrast equals the direct sum") {
  // A 1-D line of alternating levels only has pairs along x.
  auto roi = QuantizedRoi::from_levels({6, 1, 1}, {1, 3, 1, 3, 1, 3}, 4);
  const auto g = build_glcm(roi);
  double direct = 0;
  for (int i = 1; i <= 4; ++i)
    for (int j = 1; j <= 4; ++j) direct += g.at(i, j) * (i - j) * (i - j);
  CHECK(glcm_features(g)[2] == doctest::Approx(direct));
  CHECK(direct == doctest::Approx(4.0));
}

TEST_CASE("NGTDM examples") {
  auto c = constant_roi({3, 3, 3}, 4, 8);
  const auto t = build_ngtdm(c);
  for (double s : t.s) CHECK(s == 0.0);
  const auto f = ngtdm_features(t);
  CHECK(f[1] == 0.0);
  CHECK(f[0] == doctest::Approx(1.0 / kTextureEpsilon));

  // Stripes alternating in x: compare s_i with per-voxel neighborhood means.
  Dims box{4, 3, 3};
  std::vector<int> levels(box.count());
  for (int k = 0; k < 3; ++k)
    for (int j = 0; j < 3; ++j)
      for (int i = 0; i < 4; ++i) levels[box.linear(i, j, k)] = i % 2 ? 5 : 2;
  auto stripes = QuantizedRoi::from_levels(box, levels, 8);
  const auto got = build_ngtdm(stripes);
  const auto want = oracle_ngtdm(stripes);
  for (int i = 0; i < 8; ++i) CHECK(got.s[i] == doctest::Approx(want.s[i]));
  CHECK(got.s[1] > 0);

  CHECK_THROWS_AS(build_ngtdm(QuantizedRoi::from_levels({3, 1, 1}, {2, 0, 2}, 4)), Error);
}

TEST_CASE("NGTDM features match a direct implementation on random 5x5x5 ROIs") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<int> levels(125);
    for (auto& l : levels) l = draw_unit(rng) < 0.7 ? 1 + int(draw_index(rng, 10)) : 0;
    auto roi = QuantizedRoi::from_levels({5, 5, 5}, levels, 10);
    check_close(ngtdm_features(roi), oracle_ngtdm_features(oracle_ngtdm(roi)), 1e-10);
  }
}

TEST_CASE("GLZSM examples") {
  auto c = constant_roi({2, 3, 4}, 3, 8);
  const auto z = build_glzsm(c);
  CHECK(z.max_size == 24);
  CHECK(z.at(3, 24) == 1);
  CHECK(glzsm_features(z)[4] == doctest::Approx(1.0 / 24));

  // Isolated voxels: a 5x1x1 line with gaps.
  auto iso = QuantizedRoi::from_levels({5, 1, 1}, {2, 0, 4, 0, 6}, 8);
  const auto fi = glzsm_features(iso);
  CHECK(fi[0] == doctest::Approx(1.0));
  CHECK(fi[4] == doctest::Approx(1.0));

  // Alternating levels in a line are still single-voxel zones.
  auto alt = QuantizedRoi::from_levels({4, 1, 1}, {1, 2, 1, 2}, 2);
  CHECK(glzsm_features(alt)[0] == doctest::Approx(1.0));
}

TEST_CASE("GLZSM zones match flood fill on random 4x4x4 ROIs") {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> levels(64);
    for (auto& l : levels) l = draw_unit(rng) < 0.75 ? 1 + int(draw_index(rng, 3)) : 0;
    auto roi = QuantizedRoi::from_levels({4, 4, 4}, levels, 3);
    if (roi.voxel_count() == 0) continue;
    const auto z = build_glzsm(roi);
    const auto want = oracle_zones(roi);
    std::size_t total_zones = 0;
    for (int i = 1; i <= 3; ++i)
      for (int s = 1; s <= z.max_size; ++s) {
        total_zones += z.at(i, s);
        auto it = want.find({i, s});
        CHECK(z.at(i, s) == static_cast<std::size_t>(it == want.end() ? 0 : it->second));
      }
    std::size_t want_zones = 0;
    for (auto [k, m] : want) want_zones += m;
    CHECK(total_zones == want_zones);
    check_close(glzsm_features(z), oracle_glzsm_features(want), 1e-10);
  }
}

TEST_CASE("first-order examples") {
  const auto c = first_order_features(constant_roi({2, 2, 2}, 9, 16));
  CHECK(c[0] == 9.0);
  CHECK(c[1] == 0.0);
  CHECK(c[2] == 0.0);
  CHECK(c[3] == 0.0);
  CHECK(c[4] == 1.0);
  CHECK(c[5] == 0.0);

  std::vector<int> levels(128);
  for (int n = 0; n < 128; ++n) levels[n] = 1 + n % 64;
  const auto u = first_order_features(QuantizedRoi::from_levels({8, 4, 4}, levels, 64));
  CHECK(u[5] == doctest::Approx(6.0));

  Rng rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    auto roi = random_roi(rng, 6, 12, 0.6);
    check_close(first_order_features(roi), oracle_first_order(roi), 1e-12);
  }
}

TEST_CASE("every feature matches the oracles on 50 random ROIs up to 6x6x6") {
  Rng rng(2026);
  for (int trial = 0; trial < 50; ++trial) {
    CAPTURE(trial);
    const int bins = 2 + static_cast<int>(draw_index(rng, 15));
    auto roi = random_roi(rng, 6, bins, 0.4 + 0.6 * draw_unit(rng));
    const auto got = modality_texture(roi);
    std::vector<double> want = oracle_first_order(roi);
    for (double v : oracle_glcm_features(oracle_glcm(roi), bins)) want.push_back(v);
    const auto nt = oracle_ngtdm(roi);
    for (double v : oracle_ngtdm_features(nt)) want.push_back(v);
    for (double v : oracle_glzsm_features(oracle_zones(roi))) want.push_back(v);
    check_close(got, want, 1e-10);
  }
}

TEST_CASE("GLCM normalization, symmetry, zone-size conservation and correlation bound") {
  Rng rng(77);
  for (int trial = 0; trial < 60; ++trial) {
    auto roi = random_roi(rng, 6, 2 + int(draw_index(rng, 20)), 0.3 + 0.7 * draw_unit(rng));
    const auto g = build_glcm(roi);
    double sum = 0;
    for (double v : g.p) {
      CHECK(v >= 0.0);
      sum += v;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-12);
    for (int i = 1; i <= g.bins; ++i)
      for (int j = 1; j <= g.bins; ++j) CHECK(std::abs(g.at(i, j) - g.at(j, i)) <= 1e-12);
    const auto corr = glcm_features(g)[3];
    CHECK(corr >= -1.0 - 1e-12);
    CHECK(corr <= 1.0 + 1e-12);

    const auto z = build_glzsm(roi);
    std::size_t weighted = 0;
    for (int i = 1; i <= z.bins; ++i)
      for (int s = 1; s <= z.max_size; ++s) weighted += s * z.at(i, s);
    CHECK(weighted == roi.voxel_count());
  }
}

TEST_CASE("quantized features commute with increasing affine maps") {
  Dims d{7, 7, 7};
  Rng rng(4);
  std::vector<float> base(d.count());
  // Dyadic values keep every affine image exact in floating point.
  for (auto& v : base) v = -300.0f + 0.125f * static_cast<float>(draw_index(rng, 10400));
  auto mask = VoxelMask::sphere(d, {1, 1, 1}, {3, 3, 3}, 2.6);
  auto ref_vol = ImageVolume({d}, {1, 1, 1}, Modality::kCtHu, base);
  const auto ref = modality_texture(quantize(ref_vol, mask, 64, kCtWindow));
  for (auto [a, b] : {std::pair{2.0, -3.0}, {4.0, 10.0}, {0.5, 7.0}}) {
    std::vector<float> mapped(base.size());
    for (std::size_t n = 0; n < base.size(); ++n) mapped[n] = static_cast<float>(a * base[n] + b);
    auto vol = ImageVolume({d}, {1, 1, 1}, Modality::kCtHu, mapped);
    IntensityWindow w{a * kCtWindow.lo + b, a * kCtWindow.hi + b};
    const auto got = modality_texture(quantize(vol, mask, 64, w));
    for (std::size_t n = 0; n < got.size(); ++n) CHECK(got[n] == ref[n]);
  }
}

TEST_CASE("full 82-feature vector: length, symmetry, names, finiteness, errors") {
  Dims d{16, 16, 16};
  Rng rng(9);
  std::vector<float> noise(d.count());
  for (auto& v : noise) v = static_cast<float>(draw_uniform(rng, 0.0, 15.0));
  auto ct = ImageVolume(d, {1, 1, 1}, Modality::kCtHu, noise);
  auto pet_same = ImageVolume(d, {1, 1, 1}, Modality::kCtHu, noise);
  NodeRecord node;
  node.patient_id = "P";
  node.node_id = "N7";
  node.mask = VoxelMask::sphere(d, {1, 1, 1}, {8, 8, 8}, 4.0);
  node.center_mm = {8, 8, 8};

  const auto v = texture_feature_set(ct, pet_same, node);
  CHECK(v.size() == 82);
  for (double x : v) CHECK(std::isfinite(x));
  auto roi = quantize(ct, node.mask, kDefaultBins, kCtWindow);
  const auto a = modality_texture(roi);
  for (std::size_t n = 0; n < 41; ++n) CHECK(v[n] == a[n]);

  // The two windows quantize -300 and 1000 to the same levels (1 and 64), so a
  // binary volume passed as both modalities yields equal halves.
  std::vector<float> binary(d.count());
  for (auto& x : binary) x = draw_unit(rng) < 0.5 ? -300.0f : 1000.0f;
  auto same = ImageVolume(d, {1, 1, 1}, Modality::kCtHu, binary);
  const auto halves = texture_feature_set(same, same, node);
  for (std::size_t n = 0; n < 41; ++n) CHECK(halves[n] == halves[n + 41]);

  const auto names = texture_column_names();
  CHECK(names.size() == 82);
  CHECK(names[0] == "ct.fo.mean");
  CHECK(names[41] == "pet.fo.mean");
  CHECK(std::find(names.begin(), names.end(), "ct.glcm.contrast") != names.end());
  CHECK(std::set<std::string>(names.begin(), names.end()).size() == 82);

  const auto diag = diagnostic_feature_set(ct, pet_same, node);
  CHECK(diag.values().size() + v.size() == 95);

  NodeRecord single = node;
  single.mask = VoxelMask::from_voxels(d, {1, 1, 1}, std::vector<Index3>{{3, 3, 3}});
  try {
    (void)texture_feature_set(ct, pet_same, single);
    FAIL("expected a degenerate-ROI error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDegenerateRoi);
    CHECK(std::string(e.what()).find("N7") != std::string::npos);
  }
  const auto lenient = texture_feature_set_lenient(ct, pet_same, single);
  CHECK(lenient.degenerate);
  for (double x : lenient.values) CHECK(std::isfinite(x));
  CHECK_FALSE(texture_feature_set_lenient(ct, pet_same, node).degenerate);
}
