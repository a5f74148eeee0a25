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

#include "lnm/texture.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lnm/error.hpp"

namespace lnm {

namespace {

constexpr double kEps = kTextureEpsilon;

double safe_den(double d) { return d == 0.0 ? kEps : d; }
double safe_log2(double x) { return std::log2(x > 0.0 ? x : kEps); }

void check_roi(const QuantizedRoi& roi) {
  require(roi.bins >= 2, ErrorCode::kInvalidArgument, "bin count must be at least 2");
  require(roi.levels.size() == roi.box.count(), ErrorCode::kInvalidArgument,
          "ROI level array does not match its box");
  require(roi.voxel_count() > 0, ErrorCode::kEmptyMask, "ROI is empty");
}

std::vector<double> level_histogram(const QuantizedRoi& roi) {
  std::vector<double> h(roi.bins, 0.0);
  for (int l : roi.levels)
    if (l > 0) h[l - 1] += 1.0;
  const double n = static_cast<double>(roi.voxel_count());
  for (auto& v : h) v /= n;
  return h;
}

// Union-find over flat box indices.
struct Forest {
  std::vector<std::size_t> parent;
  explicit Forest(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

Glcm self_pair_glcm(const QuantizedRoi& roi) {
  Glcm g;
  g.bins = roi.bins;
  g.p.assign(static_cast<std::size_t>(roi.bins) * roi.bins, 0.0);
  const auto h = level_histogram(roi);
  for (int i = 0; i < roi.bins; ++i) g.p[i * roi.bins + i] = h[i];
  return g;
}

Ngtdm zero_ngtdm(const QuantizedRoi& roi) {
  Ngtdm t;
  t.bins = roi.bins;
  t.s.assign(roi.bins, 0.0);
  t.count.assign(roi.bins, 0);
  for (int l : roi.levels)
    if (l > 0) ++t.count[l - 1];
  t.valid_voxels = roi.voxel_count();
  return t;
}

}  // namespace

QuantizedRoi QuantizedRoi::from_levels(Dims box, std::vector<int> levels, int bins) {
  QuantizedRoi roi;
  roi.bins = bins;
  roi.box = box;
  roi.levels = std::move(levels);
  roi.clamp = {1.0, static_cast<double>(bins) + 1.0};
  require(roi.levels.size() == box.count(), ErrorCode::kInvalidArgument,
          "level array does not match box");
  for (int l : roi.levels) {
    require(l >= 0 && l <= bins, ErrorCode::kInvalidArgument, "level outside [0, bins]");
  }
  return roi;
}

std::size_t QuantizedRoi::voxel_count() const {
  return static_cast<std::size_t>(std::count_if(levels.begin(), levels.end(),
                                                [](int l) { return l > 0; }));
}

int quantize_value(double v, int bins, IntensityWindow clamp) {
  const double c = std::clamp(v, clamp.lo, clamp.hi);
  const int level = static_cast<int>(std::floor((c - clamp.lo) / (clamp.hi - clamp.lo) * bins)) + 1;
  return std::min(bins, level);
}

QuantizedRoi quantize(const ImageVolume& vol, const VoxelMask& mask, int bins,
                      IntensityWindow clamp) {
  require(bins >= 2, ErrorCode::kInvalidArgument, "bin count must be at least 2");
  require(clamp.lo < clamp.hi, ErrorCode::kInvalidArgument, "clamp window is empty");
  require(!mask.empty(), ErrorCode::kEmptyMask, "quantizing an empty mask");
  require(vol.dims() == mask.grid(), ErrorCode::kPrecondition,
          "mask grid does not match the volume grid");
  QuantizedRoi roi;
  roi.bins = bins;
  roi.clamp = clamp;
  roi.box = mask.box();
  roi.offset = mask.offset();
  roi.levels.assign(roi.box.count(), 0);
  const auto bits = mask.bits();
  std::size_t n = 0;
  for (int k = 0; k < roi.box.z; ++k)
    for (int j = 0; j < roi.box.y; ++j)
      for (int i = 0; i < roi.box.x; ++i, ++n)
        if (bits[n]) {
          roi.levels[n] = quantize_value(
              vol.at(roi.offset.x + i, roi.offset.y + j, roi.offset.z + k), bins, clamp);
        }
  return roi;
}

const std::array<Index3, 13>& glcm_directions() {
  static const std::array<Index3, 13> kDirs{{{1, 0, 0},
                                             {0, 1, 0},
                                             {0, 0, 1},
                                             {1, 1, 0},
                                             {1, -1, 0},
                                             {1, 0, 1},
                                             {1, 0, -1},
                                             {0, 1, 1},
                                             {0, 1, -1},
                                             {1, 1, 1},
                                             {1, 1, -1},
                                             {1, -1, 1},
                                             {1, -1, -1}}};
  return kDirs;
}

Glcm build_glcm(const QuantizedRoi& roi, int distance) {
  check_roi(roi);
  require(distance >= 1, ErrorCode::kInvalidArgument, "GLCM distance must be at least 1");
  const int B = roi.bins;
  const auto& b = roi.box;
  Glcm out;
  out.bins = B;
  out.p.assign(static_cast<std::size_t>(B) * B, 0.0);
  std::vector<double> counts(out.p.size());
  int used = 0;
  for (const auto& d : glcm_directions()) {
    std::fill(counts.begin(), counts.end(), 0.0);
    double total = 0.0;
    for (int k = 0; k < b.z; ++k)
      for (int j = 0; j < b.y; ++j)
        for (int i = 0; i < b.x; ++i) {
          const int a = roi.level(i, j, k);
          if (a == 0) continue;
          const int c = roi.level(i + distance * d.x, j + distance * d.y, k + distance * d.z);
          if (c == 0) continue;
          counts[(a - 1) * B + (c - 1)] += 1.0;
          counts[(c - 1) * B + (a - 1)] += 1.0;
          total += 2.0;
        }
    if (total == 0.0) continue;
    ++used;
    for (std::size_t n = 0; n < counts.size(); ++n) out.p[n] += counts[n] / total;
  }
  require(used > 0, ErrorCode::kDegenerateRoi, "ROI has no voxel pair in any GLCM direction");
  for (auto& v : out.p) v /= used;
  return out;
}

std::array<double, kGlcmCount> glcm_features(const Glcm& g) {
  const int B = g.bins;
  std::vector<double> px(B, 0.0), sum(2 * B + 1, 0.0), diff(B, 0.0);
  for (int i = 1; i <= B; ++i)
    for (int j = 1; j <= B; ++j) {
      const double p = g.at(i, j);
      px[i - 1] += p;
      sum[i + j] += p;
      diff[std::abs(i - j)] += p;
    }
  double mu = 0.0;
  for (int i = 1; i <= B; ++i) mu += i * px[i - 1];
  double var_x = 0.0;
  for (int i = 1; i <= B; ++i) var_x += (i - mu) * (i - mu) * px[i - 1];

  double energy = 0, entropy = 0, contrast = 0, cov = 0, idm = 0, dissim = 0, autocorr = 0;
  double shade = 0, prominence = 0, tendency = 0, id = 0, idmn = 0, idn = 0;
  const double b2 = static_cast<double>(B) * B;
  for (int i = 1; i <= B; ++i)
    for (int j = 1; j <= B; ++j) {
      const double p = g.at(i, j);
      if (p == 0.0) continue;
      const double dij = i - j;
      const double adij = std::abs(dij);
      const double c = i + j - 2.0 * mu;
      energy += p * p;
      entropy -= p * safe_log2(p);
      contrast += dij * dij * p;
      cov += (i - mu) * (j - mu) * p;
      idm += p / (1.0 + dij * dij);
      dissim += adij * p;
      autocorr += static_cast<double>(i) * j * p;
      tendency += c * c * p;
      shade += c * c * c * p;
      prominence += c * c * c * c * p;
      id += p / (1.0 + adij);
      idmn += p / (1.0 + dij * dij / b2);
      idn += p / (1.0 + adij / B);
    }

  double sum_avg = 0, sum_ent = 0;
  for (int k = 2; k <= 2 * B; ++k) {
    sum_avg += k * sum[k];
    if (sum[k] > 0) sum_ent -= sum[k] * safe_log2(sum[k]);
  }
  double sum_var = 0;
  for (int k = 2; k <= 2 * B; ++k) sum_var += (k - sum_avg) * (k - sum_avg) * sum[k];
  double diff_avg = 0, diff_ent = 0;
  for (int k = 0; k < B; ++k) {
    diff_avg += k * diff[k];
    if (diff[k] > 0) diff_ent -= diff[k] * safe_log2(diff[k]);
  }
  double diff_var = 0;
  for (int k = 0; k < B; ++k) diff_var += (k - diff_avg) * (k - diff_avg) * diff[k];

  // Symmetric matrix: both marginals share mean and variance.
  const double correlation = cov / safe_den(var_x);
  return {energy,  entropy,  contrast, correlation, idm,       dissim,     var_x,
          sum_avg, sum_var,  sum_ent,  diff_var,    diff_ent,  autocorr,   shade,
          prominence, tendency, id,    idmn,        idn};
}

Ngtdm build_ngtdm(const QuantizedRoi& roi) {
  check_roi(roi);
  Ngtdm t;
  t.bins = roi.bins;
  t.s.assign(roi.bins, 0.0);
  t.count.assign(roi.bins, 0);
  const auto& b = roi.box;
  for (int k = 0; k < b.z; ++k)
    for (int j = 0; j < b.y; ++j)
      for (int i = 0; i < b.x; ++i) {
        const int l = roi.level(i, j, k);
        if (l == 0) continue;
        double sum = 0.0;
        int n = 0;
        for (int dz = -1; dz <= 1; ++dz)
          for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
              if (!dx && !dy && !dz) continue;
              const int m = roi.level(i + dx, j + dy, k + dz);
              if (m == 0) continue;
              sum += m;
              ++n;
            }
        if (n == 0) continue;
        t.s[l - 1] += std::abs(l - sum / n);
        ++t.count[l - 1];
        ++t.valid_voxels;
      }
  require(t.valid_voxels > 0, ErrorCode::kDegenerateRoi,
          "no ROI voxel has an in-ROI neighbor for the NGTDM");
  return t;
}

std::array<double, kNgtdmCount> ngtdm_features(const Ngtdm& t) {
  const int B = t.bins;
  const double nv = static_cast<double>(t.valid_voxels);
  std::vector<double> p(B);
  std::vector<int> present;
  double s_total = 0.0, ps = 0.0;
  for (int i = 0; i < B; ++i) {
    p[i] = t.count[i] / nv;
    if (p[i] > 0) present.push_back(i + 1);
    s_total += t.s[i];
    ps += p[i] * t.s[i];
  }
  const double ng = static_cast<double>(present.size());
  double spread = 0, busy_den = 0, complexity = 0, strength_num = 0;
  for (int i : present)
    for (int j : present) {
      const double pi = p[i - 1], pj = p[j - 1];
      const double d = i - j;
      spread += pi * pj * d * d;
      busy_den += std::abs(i * pi - j * pj);
      complexity += std::abs(d) * (pi * t.s[i - 1] + pj * t.s[j - 1]) / (pi + pj);
      strength_num += (pi + pj) * d * d;
    }
  const double coarseness = std::min(1.0 / kEps, 1.0 / safe_den(ps));
  const double contrast = spread / safe_den(ng * (ng - 1.0)) * (s_total / nv);
  const double busyness = ps / safe_den(busy_den);
  complexity /= nv;
  const double strength = strength_num / safe_den(s_total);
  return {coarseness, contrast, busyness, complexity, strength};
}

std::array<double, kNgtdmCount> ngtdm_features(const QuantizedRoi& roi) {
  return ngtdm_features(build_ngtdm(roi));
}

Glzsm build_glzsm(const QuantizedRoi& roi) {
  check_roi(roi);
  const auto& b = roi.box;
  Forest forest(b.count());
  // Forward half of the 26-neighborhood covers every adjacency once.
  for (int k = 0; k < b.z; ++k)
    for (int j = 0; j < b.y; ++j)
      for (int i = 0; i < b.x; ++i) {
        const int l = roi.level(i, j, k);
        if (l == 0) continue;
        for (const auto& d : glcm_directions()) {
          const std::int64_t a = i + d.x, c = j + d.y, e = k + d.z;
          if (roi.level(a, c, e) == l) forest.unite(b.linear(i, j, k), b.linear(a, c, e));
        }
      }
  std::vector<std::size_t> zone_size(b.count(), 0);
  for (std::size_t n = 0; n < b.count(); ++n)
    if (roi.levels[n] > 0) ++zone_size[forest.find(n)];
  Glzsm z;
  z.bins = roi.bins;
  z.max_size = static_cast<int>(*std::max_element(zone_size.begin(), zone_size.end()));
  z.counts.assign(static_cast<std::size_t>(z.bins) * z.max_size, 0);
  for (std::size_t n = 0; n < b.count(); ++n) {
    if (zone_size[n] == 0) continue;
    z.counts[(roi.levels[n] - 1) * z.max_size + (zone_size[n] - 1)] += 1;
  }
  return z;
}

std::array<double, kGlzsmCount> glzsm_features(const Glzsm& z) {
  double nz = 0, nv = 0;
  double sze = 0, lze = 0, lgze = 0, hgze = 0, szlge = 0, szhge = 0, lzlge = 0, lzhge = 0;
  std::vector<double> per_level(z.bins, 0.0), per_size(z.max_size, 0.0);
  for (int i = 1; i <= z.bins; ++i)
    for (int s = 1; s <= z.max_size; ++s) {
      const double m = static_cast<double>(z.at(i, s));
      if (m == 0) continue;
      const double i2 = static_cast<double>(i) * i, s2 = static_cast<double>(s) * s;
      nz += m;
      nv += m * s;
      per_level[i - 1] += m;
      per_size[s - 1] += m;
      sze += m / s2;
      lze += m * s2;
      lgze += m / i2;
      hgze += m * i2;
      szlge += m / (i2 * s2);
      szhge += m * i2 / s2;
      lzlge += m * s2 / i2;
      lzhge += m * s2 * i2;
    }
  double gln = 0, zsn = 0;
  for (double v : per_level) gln += v * v;
  for (double v : per_size) zsn += v * v;
  const double d = safe_den(nz);
  return {sze / d,  lze / d,   gln / d,   zsn / d,   nz / safe_den(nv), lgze / d,
          hgze / d, szlge / d, szhge / d, lzlge / d, lzhge / d};
}

std::array<double, kGlzsmCount> glzsm_features(const QuantizedRoi& roi) {
  return glzsm_features(build_glzsm(roi));
}

std::array<double, kFirstOrderCount> first_order_features(const QuantizedRoi& roi) {
  check_roi(roi);
  const auto h = level_histogram(roi);
  double mean = 0;
  for (int i = 1; i <= roi.bins; ++i) mean += i * h[i - 1];
  double m2 = 0, m3 = 0, m4 = 0, energy = 0, entropy = 0;
  for (int i = 1; i <= roi.bins; ++i) {
    const double p = h[i - 1];
    if (p == 0.0) continue;
    const double d = i - mean;
    m2 += d * d * p;
    m3 += d * d * d * p;
    m4 += d * d * d * d * p;
    energy += p * p;
    entropy -= p * safe_log2(p);
  }
  const double skewness = m2 == 0.0 ? 0.0 : m3 / std::pow(m2, 1.5);
  const double kurtosis = m2 == 0.0 ? 0.0 : m4 / (m2 * m2) - 3.0;
  return {mean, m2, skewness, kurtosis, energy, entropy};
}

std::array<double, kTexturePerModality> modality_texture(const QuantizedRoi& roi) {
  std::array<double, kTexturePerModality> out{};
  auto it = out.begin();
  for (double v : first_order_features(roi)) *it++ = v;
  for (double v : glcm_features(build_glcm(roi))) *it++ = v;
  for (double v : ngtdm_features(roi)) *it++ = v;
  for (double v : glzsm_features(roi)) *it++ = v;
  return out;
}

const std::array<std::string, kTexturePerModality>& texture_feature_names() {
  static const std::array<std::string, kTexturePerModality> kNames{
      "fo.mean",         "fo.variance",        "fo.skewness",        "fo.kurtosis",
      "fo.energy",       "fo.entropy",         "glcm.energy",        "glcm.entropy",
      "glcm.contrast",   "glcm.correlation",   "glcm.homogeneity",   "glcm.dissimilarity",
      "glcm.variance",   "glcm.sum_average",   "glcm.sum_variance",  "glcm.sum_entropy",
      "glcm.difference_variance", "glcm.difference_entropy", "glcm.autocorrelation",
      "glcm.cluster_shade", "glcm.cluster_prominence", "glcm.cluster_tendency",
      "glcm.inverse_difference", "glcm.idmn",  "glcm.idn",           "ngtdm.coarseness",
      "ngtdm.contrast",  "ngtdm.busyness",     "ngtdm.complexity",   "ngtdm.strength",
      "glzsm.sze",       "glzsm.lze",          "glzsm.gln",          "glzsm.zsn",
      "glzsm.zp",        "glzsm.lgze",         "glzsm.hgze",         "glzsm.szlge",
      "glzsm.szhge",     "glzsm.lzlge",        "glzsm.lzhge"};
  return kNames;
}

std::vector<std::string> texture_column_names() {
  std::vector<std::string> out;
  for (const char* prefix : {"ct.", "pet."})
    for (const auto& n : texture_feature_names()) out.push_back(prefix + n);
  return out;
}

namespace {

std::array<double, kTexturePerModality> lenient_texture(const QuantizedRoi& roi, bool& degenerate) {
  std::array<double, kTexturePerModality> out{};
  auto it = out.begin();
  for (double v : first_order_features(roi)) *it++ = v;
  Glcm glcm;
  try {
    glcm = build_glcm(roi);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kDegenerateRoi) throw;
    degenerate = true;
    glcm = self_pair_glcm(roi);
  }
  for (double v : glcm_features(glcm)) *it++ = v;
  Ngtdm ngtdm;
  try {
    ngtdm = build_ngtdm(roi);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kDegenerateRoi) throw;
    degenerate = true;
    ngtdm = zero_ngtdm(roi);
  }
  for (double v : ngtdm_features(ngtdm)) *it++ = v;
  for (double v : glzsm_features(roi)) *it++ = v;
  return out;
}

}  // namespace

std::array<double, kTextureCount> texture_feature_set(const ImageVolume& ct,
                                                      const ImageVolume& pet,
                                                      const NodeRecord& node) {
  std::array<double, kTextureCount> out{};
  try {
    const auto a = modality_texture(quantize(ct, node.mask, kDefaultBins, kCtWindow));
    const auto b = modality_texture(quantize(pet, node.mask, kDefaultBins, kPetWindow));
    std::copy(a.begin(), a.end(), out.begin());
    std::copy(b.begin(), b.end(), out.begin() + kTexturePerModality);
  } catch (const Error& e) {
    throw Error(e.code(), "node " + node.node_id + ": " + e.what());
  }
  return out;
}

TextureFeatureSet texture_feature_set_lenient(const ImageVolume& ct, const ImageVolume& pet,
                                              const NodeRecord& node) {
  TextureFeatureSet out;
  try {
    const auto a = lenient_texture(quantize(ct, node.mask, kDefaultBins, kCtWindow), out.degenerate);
    const auto b =
        lenient_texture(quantize(pet, node.mask, kDefaultBins, kPetWindow), out.degenerate);
    std::copy(a.begin(), a.end(), out.values.begin());
    std::copy(b.begin(), b.end(), out.values.begin() + kTexturePerModality);
  } catch (const Error& e) {
    throw Error(e.code(), "node " + node.node_id + ": " + e.what());
  }
  return out;
}

}  // namespace lnm
