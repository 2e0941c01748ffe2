// Copyright 2026 The VolSeg Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Probability-to-label decoding: median filtering, thresholding, connected
// components, and marker-based watershed over BC (mask, contour) and BCD
// (mask, contour, distance) prediction stacks. Every stage is deterministic;
// all tie-breaking is by (z, y, x) raster order.

#ifndef VOLSEG_DECODE_HPP_
#define VOLSEG_DECODE_HPP_

#include <algorithm>
#include <cstdint>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "volseg/geometry.hpp"
#include "volseg/volume.hpp"

namespace volseg {

struct DecodeParams {
  float seed_threshold = 0.90f;
  float contour_threshold = 0.80f;
  float foreground_threshold = 0.85f;
  float distance_seed_threshold = 0.50f;
  std::int64_t min_instance_voxels = 128;
  int connectivity = 6;
};

inline void validate_decode_params(const DecodeParams& p) {
  const auto in_unit = [](float v) { return v >= 0.0f && v <= 1.0f; };
  if (!in_unit(p.seed_threshold) || !in_unit(p.contour_threshold) ||
      !in_unit(p.foreground_threshold)) {
    throw std::invalid_argument("decode thresholds must be in [0, 1]");
  }
  if (p.distance_seed_threshold < -1.0f || p.distance_seed_threshold > 1.0f) {
    throw std::invalid_argument("distance seed threshold must be in [-1, 1]");
  }
  if (p.min_instance_voxels < 0) {
    throw std::invalid_argument("min_instance_voxels must be >= 0");
  }
  if (p.connectivity != 6 && p.connectivity != 26) {
    throw std::invalid_argument("connectivity must be 6 or 26, got " +
                                std::to_string(p.connectivity));
  }
}

namespace detail {

inline std::vector<Vec3> neighbor_offsets(int connectivity) {
  std::vector<Vec3> offsets;
  if (connectivity == 6) {
    offsets = {{-1, 0, 0}, {1, 0, 0}, {0, -1, 0}, {0, 1, 0}, {0, 0, -1},
               {0, 0, 1}};
  } else {
    for (std::int64_t dz = -1; dz <= 1; ++dz) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        for (std::int64_t dx = -1; dx <= 1; ++dx) {
          if (dz != 0 || dy != 0 || dx != 0) offsets.push_back({dz, dy, dx});
        }
      }
    }
  }
  return offsets;
}

}  // namespace detail

// Replaces each voxel by the median of its kernel neighborhood, mirrored at
// the borders. Kernel extents must be odd so the window is centered. Even
// order statistics take the lower middle element, which for the odd-sized
// kernels enforced here never applies.
template <typename T>
Volume<T> median_filter(const Volume<T>& volume, Vec3 kernel_extent) {
  for (int a = 0; a < 3; ++a) {
    if (kernel_extent[a] < 1 || kernel_extent[a] % 2 == 0) {
      throw std::invalid_argument(
          std::string("median kernel extent along ") + axis_name(a) +
          " must be odd and >= 1, got " + std::to_string(kernel_extent[a]));
    }
  }
  const Vec3& shape = volume.shape();
  const Vec3 radius{kernel_extent.z / 2, kernel_extent.y / 2,
                    kernel_extent.x / 2};
  Volume<T> out(shape, volume.resolution());
  std::vector<T> window(
      static_cast<std::size_t>(kernel_extent.voxels()));
  for (std::int64_t z = 0; z < shape.z; ++z) {
    for (std::int64_t y = 0; y < shape.y; ++y) {
      for (std::int64_t x = 0; x < shape.x; ++x) {
        std::size_t n = 0;
        for (std::int64_t dz = -radius.z; dz <= radius.z; ++dz) {
          const std::int64_t sz = detail::reflect_far(z + dz, shape.z);
          for (std::int64_t dy = -radius.y; dy <= radius.y; ++dy) {
            const std::int64_t sy = detail::reflect_far(y + dy, shape.y);
            for (std::int64_t dx = -radius.x; dx <= radius.x; ++dx) {
              const std::int64_t sx = detail::reflect_far(x + dx, shape.x);
              window[n++] = volume.at(sz, sy, sx);
            }
          }
        }
        auto mid = window.begin() + static_cast<std::ptrdiff_t>(n / 2);
        std::nth_element(window.begin(), mid,
                         window.begin() + static_cast<std::ptrdiff_t>(n));
        out.at(z, y, x) = *mid;
      }
    }
  }
  return out;
}

// Binary mask: 1 where probability >= theta.
inline LabelVolume threshold(const ProbVolume& prob, float theta) {
  if (!(theta >= 0.0f && theta <= 1.0f)) {
    throw std::invalid_argument("threshold must be in [0, 1], got " +
                                std::to_string(theta));
  }
  LabelVolume out(prob.shape(), prob.resolution());
  for (std::size_t i = 0; i < prob.voxels(); ++i) {
    out.data()[i] = prob.data()[i] >= theta ? 1u : 0u;
  }
  return out;
}

struct ComponentResult {
  LabelVolume labels;
  std::int64_t count = 0;
};

// Deterministic connected components over the nonzero voxels of `mask`.
// Component ids are assigned 1..n by the raster order of each component's
// first voxel, so the labeling is reproducible across runs.
inline ComponentResult connected_components(const LabelVolume& mask,
                                            int connectivity) {
  if (connectivity != 6 && connectivity != 26) {
    throw std::invalid_argument("connectivity must be 6 or 26, got " +
                                std::to_string(connectivity));
  }
  const Vec3& shape = mask.shape();
  const std::size_t n = mask.voxels();
  std::vector<std::int64_t> parent(n);
  for (std::size_t i = 0; i < n; ++i) parent[i] = static_cast<std::int64_t>(i);
  const auto find = [&parent](std::int64_t i) {
    while (parent[static_cast<std::size_t>(i)] != i) {
      parent[static_cast<std::size_t>(i)] =
          parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(i)])];
      i = parent[static_cast<std::size_t>(i)];
    }
    return i;
  };
  const auto unite = [&parent, &find](std::int64_t a, std::int64_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    // Smaller raster index becomes the root so roots identify the first
    // voxel of their component.
    if (a > b) std::swap(a, b);
    parent[static_cast<std::size_t>(b)] = a;
  };

  // Backward neighbors only: every adjacency is seen exactly once.
  std::vector<Vec3> backward;
  for (const Vec3& o : detail::neighbor_offsets(connectivity)) {
    if (o.z < 0 || (o.z == 0 && (o.y < 0 || (o.y == 0 && o.x < 0)))) {
      backward.push_back(o);
    }
  }

  for (std::int64_t z = 0; z < shape.z; ++z) {
    for (std::int64_t y = 0; y < shape.y; ++y) {
      for (std::int64_t x = 0; x < shape.x; ++x) {
        if (mask.at(z, y, x) == 0) continue;
        const std::int64_t here =
            static_cast<std::int64_t>(mask.index(z, y, x));
        for (const Vec3& o : backward) {
          const std::int64_t nz = z + o.z;
          const std::int64_t ny = y + o.y;
          const std::int64_t nx = x + o.x;
          if (nz < 0 || ny < 0 || ny >= shape.y || nx < 0 || nx >= shape.x) {
            continue;
          }
          if (mask.at(nz, ny, nx) != 0) {
            unite(here, static_cast<std::int64_t>(mask.index(nz, ny, nx)));
          }
        }
      }
    }
  }

  ComponentResult result{LabelVolume(shape, mask.resolution()), 0};
  std::vector<std::uint32_t> root_label(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (mask.data()[i] == 0) continue;
    const std::size_t root = static_cast<std::size_t>(find(static_cast<std::int64_t>(i)));
    if (root_label[root] == 0) {
      root_label[root] = static_cast<std::uint32_t>(++result.count);
    }
    result.labels.data()[i] = root_label[root];
  }
  return result;
}

// Removes instances smaller than min_voxels and compacts the surviving ids
// to 1..k preserving their numeric order.
inline LabelVolume remove_small(const LabelVolume& labels,
                                std::int64_t min_voxels) {
  std::uint32_t max_id = 0;
  for (std::uint32_t v : labels.data()) max_id = std::max(max_id, v);
  std::vector<std::int64_t> sizes(static_cast<std::size_t>(max_id) + 1, 0);
  for (std::uint32_t v : labels.data()) ++sizes[v];
  std::vector<std::uint32_t> remap(static_cast<std::size_t>(max_id) + 1, 0);
  std::uint32_t next = 0;
  for (std::uint32_t id = 1; id <= max_id; ++id) {
    if (sizes[id] > 0 && sizes[id] >= min_voxels) remap[id] = ++next;
  }
  LabelVolume out(labels.shape(), labels.resolution());
  for (std::size_t i = 0; i < labels.voxels(); ++i) {
    out.data()[i] = remap[labels.data()[i]];
  }
  return out;
}

namespace detail {

struct FloodEntry {
  float value;
  std::int64_t voxel;
  std::uint32_t label;
};

// Orders the priority queue so the top entry has the highest value, then the
// lowest raster index, then the lowest label. The label tiebreak makes the
// claimed label independent of push order.
struct FloodWorse {
  bool operator()(const FloodEntry& a, const FloodEntry& b) const {
    if (a.value != b.value) return a.value < b.value;
    if (a.voxel != b.voxel) return a.voxel > b.voxel;
    return a.label > b.label;
  }
};

}  // namespace detail

// Grows seed labels over `region` in order of descending priority: the
// unclaimed region voxel carrying the globally highest priority among those
// adjacent to claimed voxels is claimed next, taking the smallest adjacent
// label. Voxels are claimed when popped, so each voxel is labeled exactly
// once and the result is a deterministic partition of the reachable region.
inline LabelVolume priority_flood(const LabelVolume& seeds,
                                  const LabelVolume& region,
                                  const ProbVolume& priority,
                                  int connectivity) {
  if (seeds.shape() != region.shape() || seeds.shape() != priority.shape()) {
    throw std::invalid_argument("priority_flood inputs must share one shape");
  }
  const Vec3& shape = seeds.shape();
  const std::vector<Vec3> offsets = detail::neighbor_offsets(connectivity);
  LabelVolume out(shape, seeds.resolution());

  std::priority_queue<detail::FloodEntry, std::vector<detail::FloodEntry>,
                      detail::FloodWorse>
      frontier;
  const auto push_neighbors = [&](std::int64_t z, std::int64_t y,
                                  std::int64_t x, std::uint32_t label) {
    for (const Vec3& o : offsets) {
      const std::int64_t nz = z + o.z;
      const std::int64_t ny = y + o.y;
      const std::int64_t nx = x + o.x;
      if (nz < 0 || nz >= shape.z || ny < 0 || ny >= shape.y || nx < 0 ||
          nx >= shape.x) {
        continue;
      }
      const std::size_t ni = out.index(nz, ny, nx);
      if (region.data()[ni] != 0 && out.data()[ni] == 0) {
        frontier.push({priority.data()[ni],
                       static_cast<std::int64_t>(ni), label});
      }
    }
  };

  for (std::int64_t z = 0; z < shape.z; ++z) {
    for (std::int64_t y = 0; y < shape.y; ++y) {
      for (std::int64_t x = 0; x < shape.x; ++x) {
        const std::uint32_t s = seeds.at(z, y, x);
        if (s != 0) out.at(z, y, x) = s;
      }
    }
  }
  for (std::int64_t z = 0; z < shape.z; ++z) {
    for (std::int64_t y = 0; y < shape.y; ++y) {
      for (std::int64_t x = 0; x < shape.x; ++x) {
        const std::uint32_t s = out.at(z, y, x);
        if (s != 0) push_neighbors(z, y, x, s);
      }
    }
  }

  while (!frontier.empty()) {
    const detail::FloodEntry entry = frontier.top();
    frontier.pop();
    const std::size_t i = static_cast<std::size_t>(entry.voxel);
    if (out.data()[i] != 0) continue;
    out.data()[i] = entry.label;
    const std::int64_t z = entry.voxel / (shape.y * shape.x);
    const std::int64_t y = (entry.voxel / shape.x) % shape.y;
    const std::int64_t x = entry.voxel % shape.x;
    push_neighbors(z, y, x, entry.label);
  }
  return out;
}

struct DecodeResult {
  LabelVolume labels;
  std::int64_t num_instances = 0;
  // Seed generation produced no component; the labeling is empty by
  // construction rather than by error.
  bool no_seeds = false;
};

namespace detail {

inline DecodeResult watershed_impl(const ProbVolume& mask_prob,
                                   const LabelVolume& seed_mask,
                                   const ProbVolume& flood_priority,
                                   const DecodeParams& params) {
  const Vec3& shape = mask_prob.shape();
  DecodeResult result;
  const ComponentResult seeds =
      connected_components(seed_mask, params.connectivity);
  if (seeds.count == 0) {
    result.labels = LabelVolume(shape, mask_prob.resolution());
    result.no_seeds = true;
    return result;
  }

  // The growth region is the foreground mask united with the seeds, so a
  // seed strictly above the seed threshold but marginally below the
  // foreground threshold cannot orphan itself.
  LabelVolume region(shape, mask_prob.resolution());
  for (std::size_t i = 0; i < region.voxels(); ++i) {
    region.data()[i] =
        mask_prob.data()[i] >= params.foreground_threshold ||
                seeds.labels.data()[i] != 0
            ? 1u
            : 0u;
  }

  LabelVolume grown =
      priority_flood(seeds.labels, region, flood_priority, params.connectivity);
  result.labels = remove_small(grown, params.min_instance_voxels);
  std::uint32_t max_id = 0;
  for (std::uint32_t v : result.labels.data()) max_id = std::max(max_id, v);
  result.num_instances = max_id;
  return result;
}

}  // namespace detail

// BC decoding: seeds are high-confidence foreground away from contours
// (mask >= seed threshold and contour <= contour threshold); the flood
// descends on mask probability.
inline DecodeResult bc_watershed(const ProbVolume& mask_prob,
                                 const ProbVolume& contour_prob,
                                 const DecodeParams& params) {
  validate_decode_params(params);
  if (mask_prob.shape() != contour_prob.shape()) {
    throw std::invalid_argument("mask shape " + mask_prob.shape().str() +
                                " does not match contour shape " +
                                contour_prob.shape().str());
  }
  const Vec3& shape = mask_prob.shape();
  LabelVolume seed_mask(shape, mask_prob.resolution());
  for (std::size_t i = 0; i < seed_mask.voxels(); ++i) {
    seed_mask.data()[i] = mask_prob.data()[i] >= params.seed_threshold &&
                                  contour_prob.data()[i] <=
                                      params.contour_threshold
                              ? 1u
                              : 0u;
  }
  return detail::watershed_impl(mask_prob, seed_mask, mask_prob, params);
}

// BCD decoding: seeds additionally require the signed distance channel at or
// above the distance seed threshold, and the flood descends on distance, so
// instance cores (distance peaks) are claimed before boundary voxels.
inline DecodeResult bcd_watershed(const ProbVolume& mask_prob,
                                  const ProbVolume& contour_prob,
                                  const ProbVolume& distance,
                                  const DecodeParams& params) {
  validate_decode_params(params);
  if (mask_prob.shape() != contour_prob.shape() ||
      mask_prob.shape() != distance.shape()) {
    throw std::invalid_argument(
        "mask, contour, and distance shapes must match, got " +
        mask_prob.shape().str() + ", " + contour_prob.shape().str() + ", " +
        distance.shape().str());
  }
  const Vec3& shape = mask_prob.shape();
  LabelVolume seed_mask(shape, mask_prob.resolution());
  for (std::size_t i = 0; i < seed_mask.voxels(); ++i) {
    seed_mask.data()[i] =
        mask_prob.data()[i] >= params.seed_threshold &&
                contour_prob.data()[i] <= params.contour_threshold &&
                distance.data()[i] >= params.distance_seed_threshold
            ? 1u
            : 0u;
  }
  return detail::watershed_impl(mask_prob, seed_mask, distance, params);
}

}  // namespace volseg

#endif  // VOLSEG_DECODE_HPP_
