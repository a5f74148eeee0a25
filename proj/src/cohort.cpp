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
#include "lnm/cohort.hpp"

#include <filesystem>
#include <map>
#include <set>

#include <json.hpp>

#include "lnm/binary_io.hpp"
#include "lnm/error.hpp"

namespace lnm {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kFormat = "lnm-cohort";
constexpr int kVersion = 1;

json vec3_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }
json dims_json(const Dims& d) { return json::array({d.x, d.y, d.z}); }
json index_json(const Index3& v) { return json::array({v.x, v.y, v.z}); }

Vec3 vec3_of(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }
Dims dims_of(const json& j) { return {j.at(0).get<int>(), j.at(1).get<int>(), j.at(2).get<int>()}; }
Index3 index_of(const json& j) {
  return {j.at(0).get<std::int64_t>(), j.at(1).get<std::int64_t>(), j.at(2).get<std::int64_t>()};
}

std::string volume_path(const std::string& patient, const char* kind) {
  return "volumes/" + patient + "." + kind + ".f32";
}
std::string mask_path(const std::string& node) { return "masks/" + node + ".u8"; }

json volume_json(const ImageVolume& v, const std::string& path) {
  return {{"path", path},
          {"dims", dims_json(v.dims())},
          {"spacing", vec3_json(v.spacing())},
          {"modality", modality_name(v.modality())}};
}

json metadata(const Cohort& c) {
  json patients = json::array();
  for (const auto& p : c.patients)
    patients.push_back({{"id", p.id},
                        {"weight_kg", p.weight_kg},
                        {"dose_mbq", p.dose_mbq},
                        {"ct", volume_json(p.ct, volume_path(p.id, "ct"))},
                        {"pet", volume_json(p.pet, volume_path(p.id, "pet"))}});
  json nodes = json::array();
  for (const auto& n : c.nodes)
    nodes.push_back({{"patient_id", n.patient_id},
                     {"node_id", n.node_id},
                     {"station", n.station},
                     {"label", label_name(n.label)},
                     {"center_mm", vec3_json(n.center_mm)},
                     {"mask",
                      {{"path", mask_path(n.node_id)},
                       {"grid", dims_json(n.mask.grid())},
                       {"spacing", vec3_json(n.mask.spacing())},
                       {"offset", index_json(n.mask.offset())},
                       {"box", dims_json(n.mask.box())}}}});
  return {{"format", kFormat},
          {"version", kVersion},
          {"counts",
           {{"benign", c.benign_count()},
            {"malignant", c.malignant_count()},
            {"total", c.nodes.size()}}},
          {"patients", patients},
          {"nodes", nodes},
          {"provenance", json::parse(c.provenance_json)}};
}

// Reads a payload of exactly `expected` bytes, naming `entity` on failure.
std::vector<std::uint8_t> read_payload(const fs::path& dir, const std::string& rel,
                                       std::size_t expected, const std::string& entity) {
  const fs::path path = dir / rel;
  std::error_code ec;
  if (!fs::is_regular_file(path, ec))
    fail(ErrorCode::kParse, entity + ": missing payload " + rel);
  auto bytes = read_file_bytes(path.string());
  if (bytes.size() != expected)
    fail(ErrorCode::kParse, entity + ": payload " + rel + " holds " +
                                std::to_string(bytes.size()) + " bytes, expected " +
                                std::to_string(expected));
  return bytes;
}

ImageVolume load_volume(const fs::path& dir, const json& j, Modality expect,
                        const std::string& entity) {
  const Dims dims = dims_of(j.at("dims"));
  require(dims.x > 0 && dims.y > 0 && dims.z > 0, ErrorCode::kParse,
          entity + ": non-positive volume dimensions");
  require(parse_modality(j.at("modality").get<std::string>()) == expect, ErrorCode::kParse,
          entity + ": unexpected modality");
  const auto bytes =
      read_payload(dir, j.at("path").get<std::string>(), dims.count() * 4, entity);
  return ImageVolume(dims, vec3_of(j.at("spacing")), expect, decode_f32_le(bytes));
}

}  // namespace

std::size_t Cohort::benign_count() const {
  std::size_t n = 0;
  for (const auto& node : nodes) n += node.label == Label::kBenign;
  return n;
}

std::size_t Cohort::malignant_count() const { return nodes.size() - benign_count(); }

const PatientRecord& Cohort::patient(const std::string& id) const {
  for (const auto& p : patients)
    if (p.id == id) return p;
  fail(ErrorCode::kInvalidArgument, "unknown patient " + id);
}

void Cohort::validate() const {
  std::map<std::string, const PatientRecord*> by_id;
  for (const auto& p : patients) {
    require(!p.id.empty(), ErrorCode::kInvalidArgument, "patient with empty id");
    require(by_id.emplace(p.id, &p).second, ErrorCode::kInvalidArgument,
            "duplicate patient id " + p.id);
    require(!p.ct.empty() && !p.pet.empty(), ErrorCode::kInvalidVolume,
            "patient " + p.id + " lacks a CT or PET volume");
    require(p.ct.dims() == p.pet.dims() && p.ct.spacing() == p.pet.spacing(),
            ErrorCode::kInvalidVolume, "patient " + p.id + ": CT and PET grids differ");
  }
  std::set<std::string> node_ids;
  for (const auto& n : nodes) {
    n.validate();
    require(node_ids.insert(n.node_id).second, ErrorCode::kInvalidArgument,
            "duplicate node id " + n.node_id);
    const auto it = by_id.find(n.patient_id);
    require(it != by_id.end(), ErrorCode::kInvalidArgument,
            "node " + n.node_id + " references unknown patient " + n.patient_id);
    require(n.mask.grid() == it->second->ct.dims() && n.mask.spacing() == it->second->ct.spacing(),
            ErrorCode::kInvalidVolume, "node " + n.node_id + ": mask grid differs from its volumes");
  }
}

std::string Cohort::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&](std::span<const std::uint8_t> bytes) {
    for (std::uint8_t b : bytes) {
      h ^= b;
      h *= 0x100000001b3ULL;
    }
  };
  const std::string meta = metadata(*this).dump();
  feed({reinterpret_cast<const std::uint8_t*>(meta.data()), meta.size()});
  for (const auto& p : patients) {
    feed(encode_f32_le(p.ct.data()));
    feed(encode_f32_le(p.pet.data()));
  }
  for (const auto& n : nodes) feed(n.mask.bits());
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void save_cohort(const Cohort& cohort, const std::string& dir) {
  cohort.validate();
  const fs::path root(dir);
  std::error_code ec;
  fs::create_directories(root / "volumes", ec);
  fs::create_directories(root / "masks", ec);
  require(fs::is_directory(root / "volumes") && fs::is_directory(root / "masks"), ErrorCode::kIo,
          "cannot create cohort directory " + dir);
  for (const auto& p : cohort.patients) {
    write_file_bytes((root / volume_path(p.id, "ct")).string(), encode_f32_le(p.ct.data()));
    write_file_bytes((root / volume_path(p.id, "pet")).string(), encode_f32_le(p.pet.data()));
  }
  for (const auto& n : cohort.nodes)
    write_file_bytes((root / mask_path(n.node_id)).string(), n.mask.bits());
  const std::string text = metadata(cohort).dump(1) + "\n";
  write_file_bytes((root / "cohort.json").string(),
                   {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

Cohort load_cohort(const std::string& dir) {
  const fs::path root(dir);
  const fs::path meta_path = root / "cohort.json";
  require(fs::is_regular_file(meta_path), ErrorCode::kIo,
          "no cohort.json in " + dir);
  const auto raw = read_file_bytes(meta_path.string());
  json meta;
  try {
    meta = json::parse(raw.begin(), raw.end());
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, "cohort.json: " + std::string(e.what()));
  }

  Cohort c;
  std::string entity = "cohort.json";
  try {
    require(meta.at("format").get<std::string>() == kFormat, ErrorCode::kParse,
            "cohort.json: unknown format");
    require(meta.at("version").get<int>() == kVersion, ErrorCode::kParse,
            "cohort.json: unsupported version");
    for (const auto& pj : meta.at("patients")) {
      PatientRecord p;
      p.id = pj.at("id").get<std::string>();
      entity = "patient " + p.id;
      p.weight_kg = pj.at("weight_kg").get<double>();
      p.dose_mbq = pj.at("dose_mbq").get<double>();
      p.ct = load_volume(root, pj.at("ct"), Modality::kCtHu, entity + " CT");
      p.pet = load_volume(root, pj.at("pet"), Modality::kPetSuv, entity + " PET");
      c.patients.push_back(std::move(p));
    }
    for (const auto& nj : meta.at("nodes")) {
      NodeRecord n;
      n.node_id = nj.at("node_id").get<std::string>();
      entity = "node " + n.node_id;
      n.patient_id = nj.at("patient_id").get<std::string>();
      n.station = nj.at("station").get<std::string>();
      n.label = parse_label(nj.at("label").get<std::string>());
      n.center_mm = vec3_of(nj.at("center_mm"));
      const auto& mj = nj.at("mask");
      const Dims box = dims_of(mj.at("box"));
      require(box.x >= 0 && box.y >= 0 && box.z >= 0, ErrorCode::kParse,
              entity + ": negative mask box");
      auto bits = read_payload(root, mj.at("path").get<std::string>(), box.count(), entity);
      n.mask = VoxelMask(dims_of(mj.at("grid")), vec3_of(mj.at("spacing")),
                         index_of(mj.at("offset")), box, std::move(bits));
      c.nodes.push_back(std::move(n));
    }
    entity = "cohort.json";
    c.provenance_json = meta.at("provenance").dump();
    const auto& counts = meta.at("counts");
    require(counts.at("benign").get<std::size_t>() == c.benign_count() &&
                counts.at("malignant").get<std::size_t>() == c.malignant_count(),
            ErrorCode::kParse, "cohort.json: recorded label counts disagree with the node list");
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, entity + ": " + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kParse) throw;
    fail(ErrorCode::kParse, entity + ": " + e.what());
  }
  try {
    c.validate();
  } catch (const Error& e) {
    fail(ErrorCode::kParse, std::string("cohort ") + dir + ": " + e.what());
  }
  return c;
}

std::uint64_t augmented_stack_count(const Cohort& cohort, const AugmentationConfig& cfg) {
  cfg.validate();
  return static_cast<std::uint64_t>(cohort.nodes.size()) * cfg.pose_count();
}

}  // namespace lnm
