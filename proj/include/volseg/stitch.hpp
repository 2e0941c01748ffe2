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
// Weighted stitching of overlapping window predictions into one volume.
// Accumulation runs in double precision with a fixed window order, so the
// stitched result does not depend on how the predictions were produced or
// scheduled.

#ifndef VOLSEG_STITCH_HPP_
#define VOLSEG_STITCH_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "volseg/blend.hpp"
#include "volseg/volume.hpp"

namespace volseg {

struct StitchReport {
  // Voxels covered by no window; they are left at 0 in every channel.
  std::int64_t uncovered_voxels = 0;
};

// Each placed window contributes blend-weighted values to every voxel it
// covers; covered voxels are normalized by their accumulated weight. At
// every covered voxel the result is a convex combination of the
// contributing predictions.
inline MultichannelVolume stitch(
    const std::vector<std::pair<BoundingBox, const MultichannelVolume*>>& windows,
    const BlendWindow& blend, Vec3 out_shape, std::int64_t channels,
    Vec3d resolution_nm, StitchReport* report = nullptr) {
  if (channels < 1) {
    throw std::invalid_argument("stitch channel count must be >= 1");
  }
  for (const auto& [box, prediction] : windows) {
    if (prediction == nullptr) {
      throw std::invalid_argument("stitch window prediction is null");
    }
    if (box.extent != blend.extent) {
      throw std::invalid_argument("window extent " + box.extent.str() +
                                  " does not match blend extent " +
                                  blend.extent.str());
    }
    if (prediction->shape() != box.extent) {
      throw std::invalid_argument("prediction shape " +
                                  prediction->shape().str() +
                                  " does not match window extent " +
                                  box.extent.str());
    }
    if (prediction->channels() != channels) {
      throw std::invalid_argument(
          "prediction has " + std::to_string(prediction->channels()) +
          " channels, expected " + std::to_string(channels));
    }
    for (int a = 0; a < 3; ++a) {
      if (box.origin[a] < 0 || box.end()[a] > out_shape[a]) {
        throw std::invalid_argument("window " + box.id() +
                                    " lies outside output shape " +
                                    out_shape.str());
      }
    }
  }

  const std::size_t per_channel = static_cast<std::size_t>(out_shape.voxels());
  std::vector<double> weight(per_channel, 0.0);
  std::vector<double> value(per_channel * static_cast<std::size_t>(channels),
                            0.0);
  const std::int64_t plane = out_shape.y * out_shape.x;

  for (const auto& [box, prediction] : windows) {
    for (std::int64_t c = 0; c < channels; ++c) {
      const auto src = prediction->channel(c);
      double* dst = value.data() + static_cast<std::size_t>(c) * per_channel;
      std::size_t s = 0;
      for (std::int64_t z = 0; z < box.extent.z; ++z) {
        for (std::int64_t y = 0; y < box.extent.y; ++y) {
          std::size_t d = static_cast<std::size_t>(
              (box.origin.z + z) * plane + (box.origin.y + y) * out_shape.x +
              box.origin.x);
          for (std::int64_t x = 0; x < box.extent.x; ++x, ++s, ++d) {
            const double w = static_cast<double>(blend.weights.data()[s]);
            dst[d] += w * static_cast<double>(src[s]);
            if (c == 0) weight[d] += w;
          }
        }
      }
    }
  }

  MultichannelVolume out(channels, out_shape, resolution_nm);
  std::int64_t uncovered = 0;
  for (std::size_t i = 0; i < per_channel; ++i) {
    if (weight[i] <= 0.0) {
      ++uncovered;
      continue;
    }
    for (std::int64_t c = 0; c < channels; ++c) {
      out.channel(c)[i] = static_cast<float>(
          value[static_cast<std::size_t>(c) * per_channel + i] / weight[i]);
    }
  }
  if (report != nullptr) report->uncovered_voxels = uncovered;
  return out;
}

}  // namespace volseg

#endif  // VOLSEG_STITCH_HPP_
