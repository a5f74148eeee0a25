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
#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include <json.hpp>

#include "lnm/cohort.hpp"
#include "lnm/diagnostic.hpp"
#include "lnm/error.hpp"
#include "lnm/rng.hpp"

namespace lnm {

using json = nlohmann::json;

namespace {

constexpr double kHaloMm = kShellThicknessMm;
constexpr double kGapMm = 1.0;
constexpr double kAxisJitter = 0.15;
constexpr double kCtTextureHu = 200.0;

const char* const kStations[] = {"2R", "2L", "4R", "4L", "7", "10R", "10L"};

json class_json(const PhantomClass& c) {
  return {{"radius_mean_mm", c.radius_mean_mm}, {"radius_sd_mm", c.radius_sd_mm},
          {"suv_mean", c.suv_mean},             {"suv_sd", c.suv_sd},
          {"ct_mean_hu", c.ct_mean_hu},         {"ct_sd_hu", c.ct_sd_hu},
          {"halo_mean_hu", c.halo_mean_hu},     {"halo_sd_hu", c.halo_sd_hu},
          {"texture_amp", c.texture_amp},       {"texture_freq", c.texture_freq}};
}

// Copies known keys from j into the fields; unknown keys are errors.
template <typename Fields>
void read_fields(const json& j, const std::string& where, Fields&& fields) {
  require(j.is_object(), ErrorCode::kParse, where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!fields(it.key(), it.value()))
      fail(ErrorCode::kParse, where + ": unknown key \"" + it.key() + "\"");
}

PhantomClass class_of(const json& j, PhantomClass c, const std::string& where) {
  read_fields(j, where, [&](const std::string& k, const json& v) {
    double* slot = k == "radius_mean_mm" ? &c.radius_mean_mm
                   : k == "radius_sd_mm" ? &c.radius_sd_mm
                   : k == "suv_mean"     ? &c.suv_mean
                   : k == "suv_sd"       ? &c.suv_sd
                   : k == "ct_mean_hu"   ? &c.ct_mean_hu
                   : k == "ct_sd_hu"     ? &c.ct_sd_hu
                   : k == "halo_mean_hu" ? &c.halo_mean_hu
                   : k == "halo_sd_hu"   ? &c.halo_sd_hu
                   : k == "texture_amp"  ? &c.texture_amp
                   : k == "texture_freq" ? &c.texture_freq
                                         : nullptr;
    if (!slot) return false;
    *slot = v.get<double>();
    return true;
  });
  return c;
}

void check_class(const PhantomClass& c, const std::string& name) {
  const double v[] = {c.radius_mean_mm, c.radius_sd_mm, c.suv_mean,   c.suv_sd,
                      c.ct_mean_hu,     c.ct_sd_hu,     c.halo_mean_hu, c.halo_sd_hu,
                      c.texture_amp,    c.texture_freq};
  for (double x : v)
    require(std::isfinite(x), ErrorCode::kInvalidArgument, name + " class has a non-finite value");
  require(c.radius_mean_mm > 0.0 && c.radius_sd_mm >= 0.0 && c.suv_sd >= 0.0 &&
              c.ct_sd_hu >= 0.0 && c.halo_sd_hu >= 0.0 && c.texture_amp >= 0.0 &&
              c.texture_freq >= 0.0,
          ErrorCode::kInvalidArgument, name + " class has a negative spread or radius");
}

struct NodeDraw {
  Label label;
  Vec3 axes;  // semi-axes in mm
  double radius, suv, ct, halo, tex_amp, tex_freq;
  Vec3 phase;
  Vec3 center;
};

NodeDraw draw_node(const PhantomClass& c, Label label, double max_radius, Rng& rng) {
  NodeDraw d;
  d.label = label;
  d.radius = std::clamp(draw_normal(rng, c.radius_mean_mm, c.radius_sd_mm), 1.5, max_radius);
  d.axes = {d.radius * (1.0 + draw_uniform(rng, -kAxisJitter, kAxisJitter)),
            d.radius * (1.0 + draw_uniform(rng, -kAxisJitter, kAxisJitter)),
            d.radius * (1.0 + draw_uniform(rng, -kAxisJitter, kAxisJitter))};
  d.suv = std::max(0.1, draw_normal(rng, c.suv_mean, c.suv_sd));
  d.ct = draw_normal(rng, c.ct_mean_hu, c.ct_sd_hu);
  d.halo = draw_normal(rng, c.halo_mean_hu, c.halo_sd_hu);
  d.tex_amp = c.texture_amp;
  d.tex_freq = c.texture_freq;
  const double two_pi = 2.0 * std::numbers::pi;
  d.phase = {draw_uniform(rng, 0.0, two_pi), draw_uniform(rng, 0.0, two_pi),
             draw_uniform(rng, 0.0, two_pi)};
  return d;
}

double max_axis(const Vec3& a) { return std::max({a.x, a.y, a.z}); }

}  // namespace

PhantomConfig PhantomConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, std::string("phantom config: ") + e.what());
  }
  PhantomConfig c;
  try {
    read_fields(j, "phantom config", [&](const std::string& k, const json& v) {
      if (k == "benign") c.benign = v.get<int>();
      else if (k == "malignant") c.malignant = v.get<int>();
      else if (k == "nodes_per_patient") c.nodes_per_patient = v.get<int>();
      else if (k == "benign_class") c.benign_class = class_of(v, c.benign_class, "benign_class");
      else if (k == "malignant_class")
        c.malignant_class = class_of(v, c.malignant_class, "malignant_class");
      else if (k == "dims") c.dims = {v.at(0).get<int>(), v.at(1).get<int>(), v.at(2).get<int>()};
      else if (k == "spacing_mm") c.spacing_mm = v.get<double>();
      else if (k == "ct_background_hu") c.ct_background_hu = v.get<double>();
      else if (k == "pet_background_suv") c.pet_background_suv = v.get<double>();
      else if (k == "ct_noise_hu") c.ct_noise_hu = v.get<double>();
      else if (k == "pet_noise_suv") c.pet_noise_suv = v.get<double>();
      else if (k == "placement_retries") c.placement_retries = v.get<int>();
      else if (k == "shuffle_labels") c.shuffle_labels = v.get<bool>();
      else if (k == "seed") c.seed = v.get<std::uint64_t>();
      else return false;
      return true;
    });
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, std::string("phantom config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string PhantomConfig::to_json() const {
  const json j = {{"benign", benign},
                  {"malignant", malignant},
                  {"nodes_per_patient", nodes_per_patient},
                  {"benign_class", class_json(benign_class)},
                  {"malignant_class", class_json(malignant_class)},
                  {"dims", {dims.x, dims.y, dims.z}},
                  {"spacing_mm", spacing_mm},
                  {"ct_background_hu", ct_background_hu},
                  {"pet_background_suv", pet_background_suv},
                  {"ct_noise_hu", ct_noise_hu},
                  {"pet_noise_suv", pet_noise_suv},
                  {"placement_retries", placement_retries},
                  {"shuffle_labels", shuffle_labels},
                  {"seed", seed}};
  return j.dump();
}

void PhantomConfig::validate() const {
  require(benign >= 1 && malignant >= 1, ErrorCode::kInvalidArgument,
          "phantom needs at least one node per class");
  require(nodes_per_patient >= 1, ErrorCode::kInvalidArgument,
          "nodes_per_patient must be positive");
  require(dims.x >= 8 && dims.y >= 8 && dims.z >= 8, ErrorCode::kInvalidArgument,
          "phantom volume must be at least 8 voxels per axis");
  require(std::isfinite(spacing_mm) && spacing_mm > 0.0, ErrorCode::kInvalidArgument,
          "spacing must be positive");
  for (double v : {ct_background_hu, pet_background_suv, ct_noise_hu, pet_noise_suv})
    require(std::isfinite(v), ErrorCode::kInvalidArgument, "phantom levels must be finite");
  require(ct_noise_hu >= 0.0 && pet_noise_suv >= 0.0, ErrorCode::kInvalidArgument,
          "noise levels must be non-negative");
  require(placement_retries >= 1, ErrorCode::kInvalidArgument, "placement_retries must be positive");
  check_class(benign_class, "benign");
  check_class(malignant_class, "malignant");
}

Cohort generate_phantom(const PhantomConfig& cfg) {
  cfg.validate();
  const int total = cfg.benign + cfg.malignant;
  Rng label_rng(mix_seed(cfg.seed, 0));
  std::vector<Label> labels(static_cast<std::size_t>(cfg.benign), Label::kBenign);
  labels.resize(static_cast<std::size_t>(total), Label::kMalignant);
  shuffle_range(labels.begin(), labels.end(), label_rng);

  const double s = cfg.spacing_mm;
  const Vec3 extent{(cfg.dims.x - 1) * s, (cfg.dims.y - 1) * s, (cfg.dims.z - 1) * s};
  const double min_extent = std::min({extent.x, extent.y, extent.z});
  const double max_radius = std::max(1.5, 0.15 * min_extent);

  Cohort cohort;
  json truth = json::array();
  const int patients = (total + cfg.nodes_per_patient - 1) / cfg.nodes_per_patient;
  int node_counter = 0;
  for (int p = 0; p < patients; ++p) {
    Rng rng(mix_seed(cfg.seed, 1 + static_cast<std::uint64_t>(p)));
    char pid[16];
    std::snprintf(pid, sizeof pid, "P%04d", p);
    PatientRecord patient;
    patient.id = pid;
    patient.weight_kg = draw_uniform(rng, 50.0, 95.0);
    patient.dose_mbq = 3.7 * patient.weight_kg;

    const std::size_t voxels = cfg.dims.count();
    std::vector<float> ct(voxels), pet(voxels);
    std::vector<double> ct_noise(voxels), pet_noise(voxels);
    for (std::size_t v = 0; v < voxels; ++v) {
      ct_noise[v] = draw_normal(rng, 0.0, cfg.ct_noise_hu);
      pet_noise[v] = draw_normal(rng, 0.0, cfg.pet_noise_suv);
      ct[v] = static_cast<float>(cfg.ct_background_hu + ct_noise[v]);
      pet[v] = static_cast<float>(cfg.pet_background_suv + pet_noise[v]);
    }

    const int first = p * cfg.nodes_per_patient;
    const int last = std::min(total, first + cfg.nodes_per_patient);
    std::vector<NodeDraw> draws;
    for (int n = first; n < last; ++n) {
      const Label label = labels[static_cast<std::size_t>(n)];
      NodeDraw d = draw_node(label == Label::kMalignant ? cfg.malignant_class : cfg.benign_class,
                             label, max_radius, rng);
      const double reach = max_axis(d.axes) + kHaloMm + 1.0;
      bool placed = false;
      for (int attempt = 0; attempt < cfg.placement_retries && !placed; ++attempt) {
        auto coord = [&](double span) {
          return span > 2.0 * reach ? draw_uniform(rng, reach, span - reach) : -1.0;
        };
        const Vec3 c{coord(extent.x), coord(extent.y), coord(extent.z)};
        if (c.x < 0.0 || c.y < 0.0 || c.z < 0.0) break;
        placed = std::all_of(draws.begin(), draws.end(), [&](const NodeDraw& o) {
          const double dist = std::sqrt((c.x - o.center.x) * (c.x - o.center.x) +
                                        (c.y - o.center.y) * (c.y - o.center.y) +
                                        (c.z - o.center.z) * (c.z - o.center.z));
          return dist >= max_axis(d.axes) + max_axis(o.axes) + 2.0 * kHaloMm + kGapMm;
        });
        if (placed) d.center = c;
      }
      char nid[16];
      std::snprintf(nid, sizeof nid, "N%05d", n);
      require(placed, ErrorCode::kGeneration,
              "patient " + patient.id + ": could not place node " + nid + " after " +
                  std::to_string(cfg.placement_retries) + " attempts");
      draws.push_back(d);
    }

    for (std::size_t i = 0; i < draws.size(); ++i) {
      const NodeDraw& d = draws[i];
      const double reach = max_axis(d.axes) + kHaloMm + 1.0;
      auto lo = [&](double c) { return std::max(0, static_cast<int>(std::floor((c - reach) / s))); };
      auto hi = [&](double c, int n) {
        return std::min(n - 1, static_cast<int>(std::ceil((c + reach) / s)));
      };
      std::vector<Index3> inside;
      const double w = 2.0 * std::numbers::pi * d.tex_freq;
      for (int k = lo(d.center.z); k <= hi(d.center.z, cfg.dims.z); ++k)
        for (int j = lo(d.center.y); j <= hi(d.center.y, cfg.dims.y); ++j)
          for (int i2 = lo(d.center.x); i2 <= hi(d.center.x, cfg.dims.x); ++i2) {
            const double dx = i2 * s - d.center.x, dy = j * s - d.center.y, dz = k * s - d.center.z;
            const double q = dx * dx / (d.axes.x * d.axes.x) + dy * dy / (d.axes.y * d.axes.y) +
                             dz * dz / (d.axes.z * d.axes.z);
            const double hx = d.axes.x + kHaloMm, hy = d.axes.y + kHaloMm, hz = d.axes.z + kHaloMm;
            const double qh = dx * dx / (hx * hx) + dy * dy / (hy * hy) + dz * dz / (hz * hz);
            const std::size_t v = cfg.dims.linear(i2, j, k);
            if (q <= 1.0) {
              const double m = std::sin(w * dx + d.phase.x) * std::sin(w * dy + d.phase.y) *
                               std::sin(w * dz + d.phase.z);
              ct[v] = static_cast<float>(d.ct + kCtTextureHu * d.tex_amp * m + ct_noise[v]);
              pet[v] = static_cast<float>(d.suv * (1.0 + d.tex_amp * m) + pet_noise[v]);
              inside.push_back({i2, j, k});
            } else if (qh <= 1.0) {
              ct[v] = static_cast<float>(d.halo + ct_noise[v]);
            }
          }

      NodeRecord node;
      char nid[16];
      std::snprintf(nid, sizeof nid, "N%05d", node_counter++);
      node.node_id = nid;
      node.patient_id = patient.id;
      node.station = kStations[draw_index(rng, std::size(kStations))];
      node.label = d.label;
      // Snap to the nearest voxel center inside the node so the center lies in the mask box.
      node.center_mm = {std::round(d.center.x / s) * s, std::round(d.center.y / s) * s,
                        std::round(d.center.z / s) * s};
      node.mask = VoxelMask::from_voxels(cfg.dims, {s, s, s}, inside);
      cohort.nodes.push_back(std::move(node));
      truth.push_back({{"node_id", nid},
                       {"label", label_name(d.label)},
                       {"radius_mm", d.radius},
                       {"semi_axes_mm", {d.axes.x, d.axes.y, d.axes.z}},
                       {"center_mm", {d.center.x, d.center.y, d.center.z}},
                       {"suv", d.suv},
                       {"ct_hu", d.ct},
                       {"halo_hu", d.halo},
                       {"texture_amp", d.tex_amp},
                       {"texture_freq", d.tex_freq}});
    }

    patient.ct = ImageVolume(cfg.dims, {s, s, s}, Modality::kCtHu, std::move(ct));
    patient.pet = ImageVolume(cfg.dims, {s, s, s}, Modality::kPetSuv, std::move(pet));
    cohort.patients.push_back(std::move(patient));
  }

  if (cfg.shuffle_labels) {
    Rng rng(mix_seed(cfg.seed, 0x5eedULL));
    std::vector<Label> permuted;
    for (const auto& n : cohort.nodes) permuted.push_back(n.label);
    shuffle_range(permuted.begin(), permuted.end(), rng);
    for (std::size_t i = 0; i < permuted.size(); ++i) cohort.nodes[i].label = permuted[i];
  }

  cohort.provenance_json = json{{"generator", "lnm-phantom"},
                                {"config", json::parse(cfg.to_json())},
                                {"nodes", truth}}
                               .dump();
  cohort.validate();
  return cohort;
}

}  // namespace lnm
