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
// Target encoders: turn an instance label volume into the learnable
// representations a segmentation model trains against. Binary mask,
// instance contour, signed distance, and affinity encoders compose into a
// TargetStack whose channel order follows the requested TargetSpec list.

#ifndef VOLSEG_TARGETS_HPP_
#define VOLSEG_TARGETS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "volseg/edt.hpp"
#include "volseg/volume.hpp"

namespace volseg {

enum class TargetKind { kBinary, kContour, kSignedDistance, kAffinity };

inline const char* target_kind_name(TargetKind kind) {
  switch (kind) {
    case TargetKind::kBinary: return "binary";
    case TargetKind::kContour: return "contour";
    case TargetKind::kSignedDistance: return "signed_distance";
    default: return "affinity";
  }
}

enum class LossKind { kWeightedBce, kDice };

inline const char* loss_kind_name(LossKind kind) {
  return kind == LossKind::kWeightedBce ? "weighted_bce" : "dice";
}

struct LossSpec {
  LossKind kind = LossKind::kWeightedBce;
  float weight = 1.0f;
};

// One learning target: what to encode, how to weight it against the other
// targets, and which losses score it. Encoder parameters that do not apply
// to the chosen kind are ignored.
struct TargetSpec {
  TargetKind kind = TargetKind::kBinary;
  float target_weight = 1.0f;
  std::vector<LossSpec> losses = {{LossKind::kWeightedBce, 1.0f}};

  // Signed distance scale divisors for the foreground and background sides.
  double alpha = 8.0;
  double beta = 50.0;
  bool clamp = true;

  // Contour neighborhood.
  std::int64_t contour_radius = 1;
  int contour_connectivity = 26;

  // Affinity neighbor offsets in (z, y, x) voxel steps.
  std::vector<Vec3> affinity_offsets = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};

  // Number of prediction channels this target occupies.
  std::int64_t channel_count() const {
    return kind == TargetKind::kAffinity
               ? static_cast<std::int64_t>(affinity_offsets.size())
               : 1;
  }
};

inline void validate_target_spec(const TargetSpec& spec) {
  if (spec.losses.empty()) {
    throw std::invalid_argument("target requires at least one loss");
  }
  for (const LossSpec& loss : spec.losses) {
    if (!(loss.weight > 0.0f)) {
      throw std::invalid_argument("loss weight must be > 0");
    }
  }
  if (!(spec.target_weight > 0.0f)) {
    throw std::invalid_argument("target weight must be > 0");
  }
  switch (spec.kind) {
    case TargetKind::kSignedDistance:
      if (!(spec.alpha > 0.0) || !(spec.beta > 0.0)) {
        throw std::invalid_argument("signed distance alpha and beta must be > 0");
      }
      break;
    case TargetKind::kContour:
      if (spec.contour_radius < 1) {
        throw std::invalid_argument("contour radius must be >= 1");
      }
      if (spec.contour_connectivity != 6 && spec.contour_connectivity != 26) {
        throw std::invalid_argument("contour connectivity must be 6 or 26");
      }
      break;
    case TargetKind::kAffinity:
      if (spec.affinity_offsets.empty()) {
        throw std::invalid_argument("affinity requires at least one offset");
      }
      for (const Vec3& o : spec.affinity_offsets) {
        if (o.z == 0 && o.y == 0 && o.x == 0) {
          throw std::invalid_argument("affinity offsets must be nonzero");
        }
      }
      break;
    default:
      break;
  }
}

// 1.0 on foreground (label != 0), 0.0 on background.
inline ProbVolume encode_binary(const LabelVolume& labels) {
  ProbVolume out(labels.shape(), labels.resolution());
  auto dst = out.data();
  auto src = labels.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i] = src[i] != 0 ? 1.0f : 0.0f;
  }
  return out;
}

// 1.0 on foreground voxels that have a differently labeled voxel (background
// included) within the radius-r ball induced by the connectivity: Chebyshev
// ball for 26-connectivity, Manhattan ball for 6-connectivity. Neighbors
// outside the volume are ignored, so a border-hugging instance is not
// contour merely for touching the border.
inline ProbVolume encode_contour(const LabelVolume& labels,
                                 std::int64_t radius = 1,
                                 int connectivity = 26) {
  if (radius < 1) throw std::invalid_argument("contour radius must be >= 1");
  if (connectivity != 6 && connectivity != 26) {
    throw std::invalid_argument("contour connectivity must be 6 or 26, got " +
                                std::to_string(connectivity));
  }
  const Vec3& shape = labels.shape();
  ProbVolume out(labels.shape(), labels.resolution());
  for (std::int64_t z = 0; z < shape.z; ++z) {
    for (std::int64_t y = 0; y < shape.y; ++y) {
      for (std::int64_t x = 0; x < shape.x; ++x) {
        const std::uint32_t self = labels.at(z, y, x);
        if (self == 0) continue;
        bool boundary = false;
        for (std::int64_t dz = -radius; dz <= radius && !boundary; ++dz) {
          for (std::int64_t dy = -radius; dy <= radius && !boundary; ++dy) {
            for (std::int64_t dx = -radius; dx <= radius; ++dx) {
              if (connectivity == 6 &&
                  std::llabs(dz) + std::llabs(dy) + std::llabs(dx) > radius) {
                continue;
              }
              const std::int64_t nz = z + dz;
              const std::int64_t ny = y + dy;
              const std::int64_t nx = x + dx;
              if (nz < 0 || nz >= shape.z || ny < 0 || ny >= shape.y ||
                  nx < 0 || nx >= shape.x) {
                continue;
              }
              if (labels.at(nz, ny, nx) != self) {
                boundary = true;
                break;
              }
            }
          }
        }
        if (boundary) out.at(z, y, x) = 1.0f;
      }
    }
  }
  return out;
}

// Signed distance encoding: +EDT-to-background / alpha on foreground and
// -EDT-to-foreground / beta on background. Distances are Euclidean in voxel
// units scaled by the per-axis resolution ratio relative to x, so the
// encoding is invariant to global unit changes. When one side of the
// partition is empty its distances are undefined; every voxel then takes the
// clamp endpoint (+1 for all-foreground, -1 for all-background) and
// `degenerate` is set when provided.
inline ProbVolume encode_signed_distance(const LabelVolume& labels,
                                         double alpha = 8.0, double beta = 50.0,
                                         bool clamp = true,
                                         bool* degenerate = nullptr) {
  if (!(alpha > 0.0) || !(beta > 0.0)) {
    throw std::invalid_argument("signed distance alpha and beta must be > 0");
  }
  if (degenerate != nullptr) *degenerate = false;
  const Vec3& shape = labels.shape();
  const Vec3d& res = labels.resolution();
  const Vec3d spacing{res.z / res.x, res.y / res.x, 1.0};

  bool any_fg = false;
  bool any_bg = false;
  for (std::uint32_t v : labels.data()) {
    (v != 0 ? any_fg : any_bg) = true;
    if (any_fg && any_bg) break;
  }
  if (!any_fg || !any_bg) {
    if (degenerate != nullptr) *degenerate = true;
    return ProbVolume(shape, res, any_fg ? 1.0f : -1.0f);
  }

  LabelVolume fg_mask(shape, res);
  LabelVolume bg_mask(shape, res);
  for (std::size_t i = 0; i < labels.voxels(); ++i) {
    fg_mask.data()[i] = labels.data()[i] != 0 ? 1u : 0u;
    bg_mask.data()[i] = labels.data()[i] == 0 ? 1u : 0u;
  }
  const std::vector<double> to_fg = squared_distance_field(fg_mask, spacing);
  const std::vector<double> to_bg = squared_distance_field(bg_mask, spacing);

  ProbVolume out(shape, res);
  auto dst = out.data();
  for (std::size_t i = 0; i < labels.voxels(); ++i) {
    double v = labels.data()[i] != 0 ? std::sqrt(to_bg[i]) / alpha
                                     : -std::sqrt(to_fg[i]) / beta;
    if (clamp) v = std::clamp(v, -1.0, 1.0);
    dst[i] = static_cast<float>(v);
  }
  return out;
}

// Channel k at voxel p is 1 iff p + offset_k is in bounds and carries the
// same nonzero label as p.
inline MultichannelVolume encode_affinity(const LabelVolume& labels,
                                          const std::vector<Vec3>& offsets) {
  if (offsets.empty()) {
    throw std::invalid_argument("affinity requires at least one offset");
  }
  for (const Vec3& o : offsets) {
    if (o.z == 0 && o.y == 0 && o.x == 0) {
      throw std::invalid_argument("affinity offsets must be nonzero");
    }
  }
  const Vec3& shape = labels.shape();
  MultichannelVolume out(static_cast<std::int64_t>(offsets.size()), shape,
                         labels.resolution());
  for (std::size_t k = 0; k < offsets.size(); ++k) {
    auto channel = out.channel(static_cast<std::int64_t>(k));
    const Vec3& o = offsets[k];
    for (std::int64_t z = 0; z < shape.z; ++z) {
      for (std::int64_t y = 0; y < shape.y; ++y) {
        for (std::int64_t x = 0; x < shape.x; ++x) {
          const std::int64_t nz = z + o.z;
          const std::int64_t ny = y + o.y;
          const std::int64_t nx = x + o.x;
          if (nz < 0 || nz >= shape.z || ny < 0 || ny >= shape.y || nx < 0 ||
              nx >= shape.x) {
            continue;
          }
          const std::uint32_t v = labels.at(z, y, x);
          if (v != 0 && labels.at(nz, ny, nx) == v) {
            channel[labels.index(z, y, x)] = 1.0f;
          }
        }
      }
    }
  }
  return out;
}

// Encoded channels for one sample, in spec order. kinds and spec_index run
// per channel; an affinity spec contributes one channel per offset.
struct TargetStack {
  MultichannelVolume channels;
  std::vector<TargetKind> kinds;
  std::vector<std::size_t> spec_index;
  bool signed_distance_degenerate = false;
};

inline TargetStack encode_targets(const LabelVolume& labels,
                                  const std::vector<TargetSpec>& specs) {
  if (specs.empty()) {
    throw std::invalid_argument("target spec list is empty");
  }
  std::vector<ProbVolume> channels;
  TargetStack stack;
  for (std::size_t s = 0; s < specs.size(); ++s) {
    const TargetSpec& spec = specs[s];
    try {
      validate_target_spec(spec);
      switch (spec.kind) {
        case TargetKind::kBinary:
          channels.push_back(encode_binary(labels));
          break;
        case TargetKind::kContour:
          channels.push_back(encode_contour(labels, spec.contour_radius,
                                            spec.contour_connectivity));
          break;
        case TargetKind::kSignedDistance: {
          bool degenerate = false;
          channels.push_back(encode_signed_distance(
              labels, spec.alpha, spec.beta, spec.clamp, &degenerate));
          stack.signed_distance_degenerate =
              stack.signed_distance_degenerate || degenerate;
          break;
        }
        case TargetKind::kAffinity: {
          const MultichannelVolume aff =
              encode_affinity(labels, spec.affinity_offsets);
          for (std::int64_t c = 0; c < aff.channels(); ++c) {
            channels.push_back(aff.extract_channel(c));
          }
          break;
        }
      }
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("target " + std::to_string(s) + " (" +
                                  target_kind_name(spec.kind) +
                                  "): " + e.what());
    }
    for (std::int64_t c = 0; c < spec.channel_count(); ++c) {
      stack.kinds.push_back(spec.kind);
      stack.spec_index.push_back(s);
    }
  }
  stack.channels = MultichannelVolume::from_channels(channels);
  return stack;
}

}  // namespace volseg

#endif  // VOLSEG_TARGETS_HPP_
