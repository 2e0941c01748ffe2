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

#ifndef VOLSEG_GEOMETRY_HPP_
#define VOLSEG_GEOMETRY_HPP_

#include <cstring>
#include <string>
#include <vector>

#include "volseg/volume.hpp"

namespace volseg {

template <typename T>
Volume<T> crop(const Volume<T>& volume, const BoundingBox& box) {
  const Vec3& shape = volume.shape();
  for (int a = 0; a < 3; ++a) {
    if (box.origin[a] < 0 || box.extent[a] < 1 ||
        box.origin[a] + box.extent[a] > shape[a]) {
      throw std::out_of_range(
          std::string("crop box out of range along axis ") + axis_name(a) +
          ": origin " + std::to_string(box.origin[a]) + " extent " +
          std::to_string(box.extent[a]) + " exceeds volume extent " +
          std::to_string(shape[a]));
    }
  }
  Volume<T> out(box.extent, volume.resolution());
  auto dst = out.data();
  auto src = volume.data();
  const std::size_t row = static_cast<std::size_t>(box.extent.x);
  for (std::int64_t z = 0; z < box.extent.z; ++z) {
    for (std::int64_t y = 0; y < box.extent.y; ++y) {
      const std::size_t s =
          volume.index(box.origin.z + z, box.origin.y + y, box.origin.x);
      const std::size_t d = out.index(z, y, 0);
      std::memcpy(dst.data() + d, src.data() + s, row * sizeof(T));
    }
  }
  return out;
}

enum class PadMode { Reflect, Zero };

struct PadMargins {
  Vec3 before;
  Vec3 after;
};

namespace detail {

// Mirror without repeating the edge voxel. Valid for |i - clamp| < length,
// which pad() guarantees by rejecting reflect margins >= axis length.
inline std::int64_t reflect_index(std::int64_t i, std::int64_t length) {
  if (i < 0) return -i;
  if (i >= length) return 2 * length - 2 - i;
  return i;
}

// Mirror into [0, length) with as many bounces as needed; length 1 maps
// everything to 0. Unlike reflect_index this tolerates offsets beyond one
// axis length, which large shifts or kernels on small volumes can produce.
inline std::int64_t reflect_far(std::int64_t i, std::int64_t length) {
  if (length == 1) return 0;
  const std::int64_t period = 2 * (length - 1);
  std::int64_t m = i % period;
  if (m < 0) m += period;
  return m < length ? m : period - m;
}

}  // namespace detail

template <typename T>
Volume<T> pad(const Volume<T>& volume, const PadMargins& margins, PadMode mode) {
  const Vec3& shape = volume.shape();
  for (int a = 0; a < 3; ++a) {
    if (margins.before[a] < 0 || margins.after[a] < 0) {
      throw std::invalid_argument("pad margins must be >= 0");
    }
    if (mode == PadMode::Reflect &&
        (margins.before[a] >= shape[a] || margins.after[a] >= shape[a])) {
      throw std::invalid_argument(
          std::string("reflect pad margin along axis ") + axis_name(a) +
          " must be < axis length " + std::to_string(shape[a]));
    }
  }
  const Vec3 out_shape = shape + margins.before + margins.after;
  Volume<T> out(out_shape, volume.resolution());
  for (std::int64_t z = 0; z < out_shape.z; ++z) {
    const std::int64_t sz = z - margins.before.z;
    for (std::int64_t y = 0; y < out_shape.y; ++y) {
      const std::int64_t sy = y - margins.before.y;
      for (std::int64_t x = 0; x < out_shape.x; ++x) {
        const std::int64_t sx = x - margins.before.x;
        T v{};
        if (mode == PadMode::Reflect) {
          v = volume.at(detail::reflect_index(sz, shape.z),
                        detail::reflect_index(sy, shape.y),
                        detail::reflect_index(sx, shape.x));
        } else if (sz >= 0 && sz < shape.z && sy >= 0 && sy < shape.y &&
                   sx >= 0 && sx < shape.x) {
          v = volume.at(sz, sy, sx);
        }
        out.at(z, y, x) = v;
      }
    }
  }
  return out;
}

namespace detail {

// Origins 0, s, 2s, ... with the final origin clamped to length - extent so
// the last window ends flush with the border. Every window keeps the full
// extent; predictors require fixed window shapes.
inline std::vector<std::int64_t> clamped_origins(std::int64_t length,
                                                 std::int64_t extent,
                                                 std::int64_t stride) {
  std::vector<std::int64_t> origins;
  const std::int64_t last = length - extent;
  for (std::int64_t o = 0;; o += stride) {
    if (o >= last) {
      origins.push_back(last);
      break;
    }
    origins.push_back(o);
  }
  return origins;
}

}  // namespace detail

// Global-coordinate partition of a large volume. Chunks are uniform in
// extent, overlap by the configured amount except where clamped at the far
// border, and carry stable identifiers "z{z}-y{y}-x{x}".
struct ChunkPlan {
  Vec3 volume_shape;
  Vec3 chunk_extent;
  Vec3 overlap;
  std::vector<BoundingBox> chunks;
};

inline ChunkPlan make_chunk_plan(Vec3 volume_shape, Vec3 chunk_extent,
                                 Vec3 overlap) {
  for (int a = 0; a < 3; ++a) {
    if (chunk_extent[a] < 1 || chunk_extent[a] > volume_shape[a]) {
      throw std::invalid_argument(
          std::string("chunk extent along axis ") + axis_name(a) + " (" +
          std::to_string(chunk_extent[a]) + ") must be in [1, " +
          std::to_string(volume_shape[a]) + "]");
    }
    if (overlap[a] < 0 || overlap[a] >= chunk_extent[a]) {
      throw std::invalid_argument(
          std::string("chunk overlap along axis ") + axis_name(a) +
          " must satisfy 0 <= overlap < chunk extent");
    }
  }
  ChunkPlan plan{volume_shape, chunk_extent, overlap, {}};
  const auto zs = detail::clamped_origins(volume_shape.z, chunk_extent.z,
                                          chunk_extent.z - overlap.z);
  const auto ys = detail::clamped_origins(volume_shape.y, chunk_extent.y,
                                          chunk_extent.y - overlap.y);
  const auto xs = detail::clamped_origins(volume_shape.x, chunk_extent.x,
                                          chunk_extent.x - overlap.x);
  for (std::int64_t z : zs) {
    for (std::int64_t y : ys) {
      for (std::int64_t x : xs) {
        plan.chunks.push_back(BoundingBox{{z, y, x}, chunk_extent});
      }
    }
  }
  return plan;
}

// Sliding windows over a volume, z-major order, same clamped origin law as
// make_chunk_plan.
struct WindowGrid {
  Vec3 volume_shape;
  Vec3 window_extent;
  Vec3 stride;
  std::vector<BoundingBox> windows;
};

inline WindowGrid enumerate_windows(Vec3 volume_shape, Vec3 window_extent,
                                    Vec3 stride) {
  for (int a = 0; a < 3; ++a) {
    if (window_extent[a] < 1 || window_extent[a] > volume_shape[a]) {
      throw std::invalid_argument(
          std::string("window extent along axis ") + axis_name(a) + " (" +
          std::to_string(window_extent[a]) + ") must be in [1, " +
          std::to_string(volume_shape[a]) + "]");
    }
    if (stride[a] < 1) {
      throw std::invalid_argument(std::string("stride along axis ") +
                                  axis_name(a) + " must be >= 1");
    }
  }
  WindowGrid grid{volume_shape, window_extent, stride, {}};
  const auto zs = detail::clamped_origins(volume_shape.z, window_extent.z, stride.z);
  const auto ys = detail::clamped_origins(volume_shape.y, window_extent.y, stride.y);
  const auto xs = detail::clamped_origins(volume_shape.x, window_extent.x, stride.x);
  for (std::int64_t z : zs) {
    for (std::int64_t y : ys) {
      for (std::int64_t x : xs) {
        grid.windows.push_back(BoundingBox{{z, y, x}, window_extent});
      }
    }
  }
  return grid;
}

// Reverses the volume along any subset of axes. Resolution is unchanged.
template <typename T>
Volume<T> flip(const Volume<T>& volume, bool flip_z, bool flip_y, bool flip_x) {
  const Vec3& s = volume.shape();
  Volume<T> out(s, volume.resolution());
  for (std::int64_t z = 0; z < s.z; ++z) {
    const std::int64_t sz = flip_z ? s.z - 1 - z : z;
    for (std::int64_t y = 0; y < s.y; ++y) {
      const std::int64_t sy = flip_y ? s.y - 1 - y : y;
      for (std::int64_t x = 0; x < s.x; ++x) {
        const std::int64_t sx = flip_x ? s.x - 1 - x : x;
        out.at(z, y, x) = volume.at(sz, sy, sx);
      }
    }
  }
  return out;
}

// Swaps the y and x axes; extents and resolution metadata follow the swap.
template <typename T>
Volume<T> transpose_xy(const Volume<T>& volume) {
  const Vec3& s = volume.shape();
  const Vec3d& r = volume.resolution();
  Volume<T> out({s.z, s.x, s.y}, {r.z, r.x, r.y});
  for (std::int64_t z = 0; z < s.z; ++z) {
    for (std::int64_t y = 0; y < s.y; ++y) {
      for (std::int64_t x = 0; x < s.x; ++x) {
        out.at(z, x, y) = volume.at(z, y, x);
      }
    }
  }
  return out;
}

inline MultichannelVolume crop_multichannel(const MultichannelVolume& volume,
                                            const BoundingBox& box) {
  std::vector<ProbVolume> channels;
  channels.reserve(static_cast<std::size_t>(volume.channels()));
  for (std::int64_t c = 0; c < volume.channels(); ++c) {
    channels.push_back(crop(volume.extract_channel(c), box));
  }
  return MultichannelVolume::from_channels(channels);
}

}  // namespace volseg

#endif  // VOLSEG_GEOMETRY_HPP_
