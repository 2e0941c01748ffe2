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

#ifndef VOLSEG_VOLUME_HPP_
#define VOLSEG_VOLUME_HPP_

#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace volseg {

// Axis order is (z, y, x) everywhere, x fastest in memory. z is the
// low-resolution axis of serial-section microscopy volumes.
struct Vec3 {
  std::int64_t z = 0;
  std::int64_t y = 0;
  std::int64_t x = 0;

  friend bool operator==(const Vec3&, const Vec3&) = default;

  Vec3 operator+(const Vec3& o) const { return {z + o.z, y + o.y, x + o.x}; }
  Vec3 operator-(const Vec3& o) const { return {z - o.z, y - o.y, x - o.x}; }

  std::int64_t operator[](int axis) const {
    return axis == 0 ? z : (axis == 1 ? y : x);
  }
  std::int64_t& operator[](int axis) { return axis == 0 ? z : (axis == 1 ? y : x); }

  std::int64_t voxels() const { return z * y * x; }

  std::string str() const {
    return "(" + std::to_string(z) + ", " + std::to_string(y) + ", " +
           std::to_string(x) + ")";
  }
};

// Physical voxel spacing in nanometers per axis.
struct Vec3d {
  double z = 1.0;
  double y = 1.0;
  double x = 1.0;

  friend bool operator==(const Vec3d&, const Vec3d&) = default;

  double operator[](int axis) const {
    return axis == 0 ? z : (axis == 1 ? y : x);
  }
};

inline const char* axis_name(int axis) {
  return axis == 0 ? "z" : (axis == 1 ? "y" : "x");
}

enum class Dtype { U8, U32, F32 };

template <typename T>
constexpr Dtype dtype_of();
template <>
constexpr Dtype dtype_of<std::uint8_t>() { return Dtype::U8; }
template <>
constexpr Dtype dtype_of<std::uint32_t>() { return Dtype::U32; }
template <>
constexpr Dtype dtype_of<float>() { return Dtype::F32; }

inline const char* dtype_name(Dtype d) {
  switch (d) {
    case Dtype::U8: return "u8";
    case Dtype::U32: return "u32";
    default: return "f32";
  }
}

inline std::size_t dtype_size(Dtype d) {
  return d == Dtype::U8 ? 1 : 4;
}

// Axis-aligned region in global voxel coordinates.
struct BoundingBox {
  Vec3 origin;
  Vec3 extent;

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;

  Vec3 end() const { return origin + extent; }

  bool contains(const Vec3& p) const {
    return p.z >= origin.z && p.z < origin.z + extent.z &&
           p.y >= origin.y && p.y < origin.y + extent.y &&
           p.x >= origin.x && p.x < origin.x + extent.x;
  }

  // Stable identifier used to name chunk files and track global coordinates.
  std::string id() const {
    return "z" + std::to_string(origin.z) + "-y" + std::to_string(origin.y) +
           "-x" + std::to_string(origin.x);
  }
};

// Dense 3D scalar grid with per-axis physical resolution. The universal
// carrier for images (u8), instance labels (u32, 0 = background), and
// probabilities (f32 in [0, 1]). Immutable in spirit: operations return new
// volumes rather than mutating shared ones.
template <typename T>
class Volume {
 public:
  Volume() : shape_{1, 1, 1}, resolution_{1, 1, 1}, data_(1, T{}) {}

  Volume(Vec3 shape, Vec3d resolution_nm, T fill = T{})
      : shape_(shape), resolution_(resolution_nm) {
    validate(shape, resolution_nm);
    data_.assign(static_cast<std::size_t>(shape.voxels()), fill);
  }

  Volume(Vec3 shape, Vec3d resolution_nm, std::vector<T> data)
      : shape_(shape), resolution_(resolution_nm), data_(std::move(data)) {
    validate(shape, resolution_nm);
    if (data_.size() != static_cast<std::size_t>(shape.voxels())) {
      throw std::invalid_argument(
          "volume data length " + std::to_string(data_.size()) +
          " does not match shape " + shape.str() + " = " +
          std::to_string(shape.voxels()) + " voxels");
    }
  }

  const Vec3& shape() const { return shape_; }
  const Vec3d& resolution() const { return resolution_; }
  static constexpr Dtype dtype() { return dtype_of<T>(); }

  std::size_t voxels() const { return data_.size(); }

  std::size_t index(std::int64_t z, std::int64_t y, std::int64_t x) const {
    return static_cast<std::size_t>((z * shape_.y + y) * shape_.x + x);
  }

  T at(std::int64_t z, std::int64_t y, std::int64_t x) const {
    return data_[index(z, y, x)];
  }
  T& at(std::int64_t z, std::int64_t y, std::int64_t x) {
    return data_[index(z, y, x)];
  }
  T at(const Vec3& p) const { return at(p.z, p.y, p.x); }
  T& at(const Vec3& p) { return at(p.z, p.y, p.x); }

  std::span<const T> data() const { return data_; }
  std::span<T> data() { return data_; }
  const std::vector<T>& vec() const { return data_; }

  Volume with_resolution(Vec3d res) const {
    return Volume(shape_, res, data_);
  }

 private:
  static void validate(const Vec3& shape, const Vec3d& res) {
    for (int a = 0; a < 3; ++a) {
      if (shape[a] < 1) {
        throw std::invalid_argument(std::string("volume extent along ") +
                                    axis_name(a) + " must be >= 1, got " +
                                    std::to_string(shape[a]));
      }
      if (!(res[a] > 0.0)) {
        throw std::invalid_argument(std::string("voxel resolution along ") +
                                    axis_name(a) + " must be > 0");
      }
    }
  }

  Vec3 shape_;
  Vec3d resolution_;
  std::vector<T> data_;
};

using ImageVolume = Volume<std::uint8_t>;
using LabelVolume = Volume<std::uint32_t>;
using ProbVolume = Volume<float>;

using AnyVolume = std::variant<ImageVolume, LabelVolume, ProbVolume>;

inline Dtype dtype_of_any(const AnyVolume& v) {
  return std::visit([](const auto& vol) { return vol.dtype(); }, v);
}

inline Vec3 shape_of_any(const AnyVolume& v) {
  return std::visit([](const auto& vol) { return vol.shape(); }, v);
}

inline Vec3d resolution_of_any(const AnyVolume& v) {
  return std::visit([](const auto& vol) { return vol.resolution(); }, v);
}

// Multi-channel f32 volume, channel-major layout: data[c][z][y][x].
// Used for prediction stacks and encoded target stacks.
class MultichannelVolume {
 public:
  MultichannelVolume() : channels_(1), shape_{1, 1, 1}, resolution_{1, 1, 1}, data_(1, 0.f) {}

  MultichannelVolume(std::int64_t channels, Vec3 shape, Vec3d resolution_nm,
                     float fill = 0.f)
      : channels_(channels), shape_(shape), resolution_(resolution_nm) {
    if (channels < 1) throw std::invalid_argument("channel count must be >= 1");
    for (int a = 0; a < 3; ++a) {
      if (shape[a] < 1) {
        throw std::invalid_argument(std::string("volume extent along ") +
                                    axis_name(a) + " must be >= 1, got " +
                                    std::to_string(shape[a]));
      }
    }
    data_.assign(static_cast<std::size_t>(channels * shape.voxels()), fill);
  }

  static MultichannelVolume from_channels(const std::vector<ProbVolume>& chans) {
    if (chans.empty()) throw std::invalid_argument("channel list is empty");
    MultichannelVolume out(static_cast<std::int64_t>(chans.size()),
                           chans[0].shape(), chans[0].resolution());
    for (std::size_t c = 0; c < chans.size(); ++c) {
      if (chans[c].shape() != chans[0].shape()) {
        throw std::invalid_argument("channel " + std::to_string(c) +
                                    " shape mismatch");
      }
      std::copy(chans[c].data().begin(), chans[c].data().end(),
                out.channel(static_cast<std::int64_t>(c)).begin());
    }
    return out;
  }

  std::int64_t channels() const { return channels_; }
  const Vec3& shape() const { return shape_; }
  const Vec3d& resolution() const { return resolution_; }
  std::size_t voxels_per_channel() const {
    return static_cast<std::size_t>(shape_.voxels());
  }

  std::span<float> channel(std::int64_t c) {
    return {data_.data() + c * shape_.voxels(),
            static_cast<std::size_t>(shape_.voxels())};
  }
  std::span<const float> channel(std::int64_t c) const {
    return {data_.data() + c * shape_.voxels(),
            static_cast<std::size_t>(shape_.voxels())};
  }

  ProbVolume extract_channel(std::int64_t c) const {
    auto view = channel(c);
    return ProbVolume(shape_, resolution_,
                      std::vector<float>(view.begin(), view.end()));
  }

  std::span<const float> data() const { return data_; }
  std::span<float> data() { return data_; }

 private:
  std::int64_t channels_;
  Vec3 shape_;
  Vec3d resolution_;
  std::vector<float> data_;
};

}  // namespace volseg

#endif  // VOLSEG_VOLUME_HPP_
