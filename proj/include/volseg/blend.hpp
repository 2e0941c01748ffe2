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
// Blend windows weight overlapping sliding-window predictions so that
// stitched volumes have no border seams. Weights are strictly positive, so
// the normalizing denominator never vanishes on covered voxels.

#ifndef VOLSEG_BLEND_HPP_
#define VOLSEG_BLEND_HPP_

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "volseg/volume.hpp"

namespace volseg {

enum class BlendKind { kUniform, kCosine };

inline const char* blend_kind_name(BlendKind kind) {
  return kind == BlendKind::kUniform ? "uniform" : "cosine";
}

inline BlendKind blend_kind_from_name(const std::string& name) {
  if (name == "uniform") return BlendKind::kUniform;
  if (name == "cosine") return BlendKind::kCosine;
  throw std::invalid_argument("unknown blend kind \"" + name +
                              "\", expected uniform or cosine");
}

// Per-axis floor keeping every weight strictly positive; without it the
// first and last cosine samples would be near zero and edge voxels covered
// by a single window would divide by almost nothing.
inline constexpr double kBlendFloor = 1e-3;

struct BlendWindow {
  Vec3 extent;
  BlendKind kind = BlendKind::kCosine;
  ProbVolume weights;
};

namespace detail {

// Raised-sine profile over L samples at half-voxel centers. Symmetric,
// maximal at the center, and floored at kBlendFloor. A single-sample axis
// gets weight 1 because sin(pi / 2) = 1.
inline std::vector<double> cosine_profile(std::int64_t length) {
  std::vector<double> profile(static_cast<std::size_t>(length));
  for (std::int64_t i = 0; i < length; ++i) {
    const double s = std::sin(std::numbers::pi * (static_cast<double>(i) + 0.5) /
                              static_cast<double>(length));
    profile[static_cast<std::size_t>(i)] =
        kBlendFloor + (1.0 - kBlendFloor) * s * s;
  }
  return profile;
}

}  // namespace detail

inline BlendWindow make_blend_window(Vec3 extent, BlendKind kind) {
  for (int a = 0; a < 3; ++a) {
    if (extent[a] < 1) {
      throw std::invalid_argument(std::string("blend extent along ") +
                                  axis_name(a) + " must be >= 1, got " +
                                  std::to_string(extent[a]));
    }
  }
  BlendWindow window{extent, kind, ProbVolume(extent, {1, 1, 1}, 1.0f)};
  if (kind == BlendKind::kCosine) {
    const auto wz = detail::cosine_profile(extent.z);
    const auto wy = detail::cosine_profile(extent.y);
    const auto wx = detail::cosine_profile(extent.x);
    for (std::int64_t z = 0; z < extent.z; ++z) {
      for (std::int64_t y = 0; y < extent.y; ++y) {
        for (std::int64_t x = 0; x < extent.x; ++x) {
          // The combined weight is floored at kBlendFloor as well: corner
          // products of three per-axis floors would otherwise drop to 1e-9
          // on large windows, defeating the floor's purpose.
          const double w = wz[static_cast<std::size_t>(z)] *
                           wy[static_cast<std::size_t>(y)] *
                           wx[static_cast<std::size_t>(x)];
          window.weights.at(z, y, x) =
              static_cast<float>(w < kBlendFloor ? kBlendFloor : w);
        }
      }
    }
  }
  return window;
}

}  // namespace volseg

#endif  // VOLSEG_BLEND_HPP_
