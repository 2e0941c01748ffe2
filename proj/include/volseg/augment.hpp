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
// Training-time stochastic augmentations. Non-spatial ops (grayscale,
// missing part) accept images only so labels can never drift; spatial ops
// (misalignment, rescale, flip, transpose) apply one geometric map jointly
// to the image and its label volume. Every op draws from a CounterRng in a
// fixed documented order, so a (seed, draw_index) pair fully determines the
// result and per-sample application is safe to parallelize.

#ifndef VOLSEG_AUGMENT_HPP_
#define VOLSEG_AUGMENT_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "volseg/geometry.hpp"
#include "volseg/rng.hpp"
#include "volseg/volume.hpp"

namespace volseg {

// An image window and its instance labels, transformed together.
struct SamplePair {
  ImageVolume image;
  LabelVolume label;
};

// Flags raised by ops that degrade gracefully instead of failing.
struct AugmentReport {
  // Regions skipped because no pairwise non-adjacent slice was available.
  std::int64_t missing_part_regions_dropped = 0;
  // Transpose requested on a non-square xy plane and skipped.
  bool transpose_skipped_nonsquare = false;
};

// --- Per-kind parameter records ---

struct GrayscaleParams {
  // Additive offset in normalized [0, 1] intensity units.
  std::array<double, 2> brightness_range{0.0, 0.0};
  // Multiplicative factor applied about the 0.5 midpoint.
  std::array<double, 2> contrast_range{1.0, 1.0};
  // Exponent applied to the normalized intensity.
  std::array<double, 2> gamma_range{1.0, 1.0};
  double invert_prob = 0.0;
};

enum class FillMode { kMean, kConstant };

struct MissingPartParams {
  std::int64_t num_regions = 1;
  // Region edge length is at most this fraction of the slice edge.
  double max_extent_fraction = 0.5;
  FillMode fill_mode = FillMode::kMean;
  std::uint8_t fill_value = 128;
};

struct MisalignmentParams {
  std::int64_t max_shift_px = 4;
  bool rotate = false;
  double max_rotate_deg = 10.0;
};

struct RescaleParams {
  std::array<double, 2> scale_range{0.8, 1.25};
  // When true the z axis is rescaled by the same factor as y and x.
  // Defaults off because the z spacing of serial sections is physically
  // unlike the in-plane spacing.
  bool three_d = false;
};

struct FlipParams {};
struct TransposeParams {};

namespace detail {

inline void check_range(const std::array<double, 2>& r, const char* what) {
  if (!(r[0] <= r[1]) || !std::isfinite(r[0]) || !std::isfinite(r[1])) {
    throw std::invalid_argument(std::string(what) + " range [" +
                                std::to_string(r[0]) + ", " +
                                std::to_string(r[1]) + "] is not an ordered "
                                "finite interval");
  }
}

inline void check_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument(std::string(what) + " must be in [0, 1], got " +
                                std::to_string(p));
  }
}

inline std::uint8_t quantize_intensity(double x) {
  const double clamped = std::clamp(x, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::llround(clamped * 255.0));
}

inline std::uint8_t mean_intensity(const ImageVolume& image) {
  std::uint64_t sum = 0;
  for (std::uint8_t v : image.data()) sum += v;
  const double mean = static_cast<double>(sum) /
                      static_cast<double>(image.voxels());
  return static_cast<std::uint8_t>(std::llround(mean));
}

}  // namespace detail

// Photometric augmentation. Draw order: brightness, contrast, gamma, then
// one inversion coin. Each voxel v maps through the normalized pipeline
//   x = clamp((v/255 - 0.5) * contrast + 0.5 + brightness) ^ gamma
// optionally inverted to 1 - x, then requantized to u8.
inline ImageVolume apply_grayscale(CounterRng& rng, const ImageVolume& image,
                                   const GrayscaleParams& params) {
  detail::check_range(params.brightness_range, "brightness");
  detail::check_range(params.contrast_range, "contrast");
  detail::check_range(params.gamma_range, "gamma");
  if (!(params.gamma_range[0] > 0.0)) {
    throw std::invalid_argument("gamma range must be positive");
  }
  detail::check_probability(params.invert_prob, "invert probability");

  const double brightness =
      rng.next_range(params.brightness_range[0], params.brightness_range[1]);
  const double contrast =
      rng.next_range(params.contrast_range[0], params.contrast_range[1]);
  const double gamma =
      rng.next_range(params.gamma_range[0], params.gamma_range[1]);
  const bool invert = rng.bernoulli(params.invert_prob);

  // Precompute the 256-entry transfer table; voxels map independently.
  std::array<std::uint8_t, 256> table;
  for (int v = 0; v < 256; ++v) {
    double x = (v / 255.0 - 0.5) * contrast + 0.5 + brightness;
    x = std::clamp(x, 0.0, 1.0);
    x = std::pow(x, gamma);
    if (invert) x = 1.0 - x;
    table[static_cast<std::size_t>(v)] = detail::quantize_intensity(x);
  }

  ImageVolume out(image.shape(), image.resolution());
  auto dst = out.data();
  auto src = image.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = table[src[i]];
  return out;
}

// Masks axis-aligned rectangles on pairwise non-adjacent z slices. Draw
// order per region: slice index (with rejection redraws until non-adjacent,
// bounded at 100 attempts), then rectangle extent (y, x) and origin (y, x).
// When no non-adjacent slice can be found the region is dropped and counted
// in the report rather than raising an error.
inline ImageVolume apply_missing_part(CounterRng& rng, const ImageVolume& image,
                                      const MissingPartParams& params,
                                      AugmentReport* report = nullptr) {
  if (params.num_regions < 0) {
    throw std::invalid_argument("num_regions must be >= 0");
  }
  if (!(params.max_extent_fraction > 0.0 && params.max_extent_fraction <= 1.0)) {
    throw std::invalid_argument("max_extent_fraction must be in (0, 1]");
  }
  ImageVolume out = image;
  if (params.num_regions == 0) return out;

  const Vec3& shape = image.shape();
  const std::uint8_t fill = params.fill_mode == FillMode::kMean
                                ? detail::mean_intensity(image)
                                : params.fill_value;
  const std::int64_t max_ey = std::max<std::int64_t>(
      1, static_cast<std::int64_t>(params.max_extent_fraction *
                                   static_cast<double>(shape.y)));
  const std::int64_t max_ex = std::max<std::int64_t>(
      1, static_cast<std::int64_t>(params.max_extent_fraction *
                                   static_cast<double>(shape.x)));

  std::vector<std::int64_t> chosen;
  constexpr int kMaxSliceAttempts = 100;
  for (std::int64_t r = 0; r < params.num_regions; ++r) {
    std::int64_t slice = -1;
    for (int attempt = 0; attempt < kMaxSliceAttempts; ++attempt) {
      const std::int64_t z = rng.next_index(shape.z);
      bool adjacent = false;
      for (std::int64_t c : chosen) {
        if (std::llabs(z - c) <= 1) {
          adjacent = true;
          break;
        }
      }
      if (!adjacent) {
        slice = z;
        break;
      }
    }
    if (slice < 0) {
      if (report != nullptr) ++report->missing_part_regions_dropped;
      continue;
    }
    chosen.push_back(slice);

    const std::int64_t ey = 1 + rng.next_index(max_ey);
    const std::int64_t ex = 1 + rng.next_index(max_ex);
    const std::int64_t y0 = rng.next_index(shape.y - ey + 1);
    const std::int64_t x0 = rng.next_index(shape.x - ex + 1);
    for (std::int64_t y = y0; y < y0 + ey; ++y) {
      for (std::int64_t x = x0; x < x0 + ex; ++x) {
        out.at(slice, y, x) = fill;
      }
    }
  }
  return out;
}

// Translates (and optionally rotates about the slice center) every slice at
// z >= pivot by one shared in-plane transform. Draw order: pivot in
// [1, z-1], shift dy, shift dx, then the rotation angle only when rotation
// is enabled. Image resampling is bilinear with mirrored borders; labels use
// nearest-neighbor and fall to background outside the frame, so no new label
// ids can appear. Volumes with a single slice are returned unchanged.
inline SamplePair apply_misalignment(CounterRng& rng, const ImageVolume& image,
                                     const LabelVolume& label,
                                     const MisalignmentParams& params) {
  if (image.shape() != label.shape()) {
    throw std::invalid_argument("misalignment requires image shape " +
                                image.shape().str() + " to match label shape " +
                                label.shape().str());
  }
  if (params.max_shift_px < 0) {
    throw std::invalid_argument("max_shift_px must be >= 0");
  }
  if (!(params.max_rotate_deg >= 0.0)) {
    throw std::invalid_argument("max_rotate_deg must be >= 0");
  }
  const Vec3& shape = image.shape();
  if (shape.z < 2) return {image, label};

  const std::int64_t pivot = 1 + rng.next_index(shape.z - 1);
  const std::int64_t dy =
      rng.next_int_range(-params.max_shift_px, params.max_shift_px);
  const std::int64_t dx =
      rng.next_int_range(-params.max_shift_px, params.max_shift_px);
  const double angle_rad =
      params.rotate
          ? rng.next_range(-params.max_rotate_deg, params.max_rotate_deg) *
                (3.14159265358979323846 / 180.0)
          : 0.0;

  SamplePair out{ImageVolume(shape, image.resolution()),
                 LabelVolume(shape, label.resolution())};
  const double cy = static_cast<double>(shape.y - 1) / 2.0;
  const double cx = static_cast<double>(shape.x - 1) / 2.0;
  const double cos_a = std::cos(angle_rad);
  const double sin_a = std::sin(angle_rad);

  for (std::int64_t z = 0; z < shape.z; ++z) {
    if (z < pivot) {
      for (std::int64_t y = 0; y < shape.y; ++y) {
        for (std::int64_t x = 0; x < shape.x; ++x) {
          out.image.at(z, y, x) = image.at(z, y, x);
          out.label.at(z, y, x) = label.at(z, y, x);
        }
      }
      continue;
    }
    for (std::int64_t y = 0; y < shape.y; ++y) {
      for (std::int64_t x = 0; x < shape.x; ++x) {
        // Invert the forward map d = R(s - c) + c + t: undo the shift,
        // then rotate back about the slice center.
        const double py = static_cast<double>(y - dy) - cy;
        const double px = static_cast<double>(x - dx) - cx;
        const double sy = cy + cos_a * py + sin_a * px;
        const double sx = cx - sin_a * py + cos_a * px;

        const std::int64_t ny = std::llround(sy);
        const std::int64_t nx = std::llround(sx);
        out.label.at(z, y, x) =
            (ny >= 0 && ny < shape.y && nx >= 0 && nx < shape.x)
                ? label.at(z, ny, nx)
                : 0u;

        const std::int64_t y0 = static_cast<std::int64_t>(std::floor(sy));
        const std::int64_t x0 = static_cast<std::int64_t>(std::floor(sx));
        const double wy = sy - static_cast<double>(y0);
        const double wx = sx - static_cast<double>(x0);
        const auto sample = [&](std::int64_t iy, std::int64_t ix) {
          return static_cast<double>(image.at(z,
                                              detail::reflect_far(iy, shape.y),
                                              detail::reflect_far(ix, shape.x)));
        };
        const double v = (1.0 - wy) * ((1.0 - wx) * sample(y0, x0) +
                                       wx * sample(y0, x0 + 1)) +
                         wy * ((1.0 - wx) * sample(y0 + 1, x0) +
                               wx * sample(y0 + 1, x0 + 1));
        out.image.at(z, y, x) = detail::quantize_intensity(v / 255.0);
      }
    }
  }
  return out;
}

namespace detail {

// Maps output sample i to its source coordinate under uniform scaling. The
// half-voxel offsets align voxel centers so that integer factors reproduce
// exact duplication and decimation patterns.
inline double scale_source(std::int64_t i, double factor) {
  return (static_cast<double>(i) + 0.5) / factor - 0.5;
}

inline std::int64_t round_half_away(double v) { return std::llround(v); }

// Nearest-neighbor resample of the axes selected by `factor != 1`, shared
// factor across them.
inline LabelVolume rescale_nearest(const LabelVolume& label, Vec3 out_shape,
                                   double factor, bool scale_z) {
  LabelVolume out(out_shape, label.resolution());
  const Vec3& in_shape = label.shape();
  for (std::int64_t z = 0; z < out_shape.z; ++z) {
    const std::int64_t sz =
        scale_z ? std::clamp<std::int64_t>(
                      round_half_away(scale_source(z, factor)), 0,
                      in_shape.z - 1)
                : z;
    for (std::int64_t y = 0; y < out_shape.y; ++y) {
      const std::int64_t sy = std::clamp<std::int64_t>(
          round_half_away(scale_source(y, factor)), 0, in_shape.y - 1);
      for (std::int64_t x = 0; x < out_shape.x; ++x) {
        const std::int64_t sx = std::clamp<std::int64_t>(
            round_half_away(scale_source(x, factor)), 0, in_shape.x - 1);
        out.at(z, y, x) = label.at(sz, sy, sx);
      }
    }
  }
  return out;
}

// Linear resample (bilinear in plane, trilinear when z is scaled) with
// edge-clamped sampling.
inline ImageVolume rescale_linear(const ImageVolume& image, Vec3 out_shape,
                                  double factor, bool scale_z) {
  ImageVolume out(out_shape, image.resolution());
  const Vec3& in_shape = image.shape();
  const auto axis_setup = [&](std::int64_t i, std::int64_t in_len, bool scaled,
                              std::int64_t& lo, std::int64_t& hi, double& w) {
    if (!scaled) {
      lo = hi = i;
      w = 0.0;
      return;
    }
    const double s =
        std::clamp(scale_source(i, factor), 0.0,
                   static_cast<double>(in_len - 1));
    lo = static_cast<std::int64_t>(std::floor(s));
    hi = std::min(lo + 1, in_len - 1);
    w = s - static_cast<double>(lo);
  };
  for (std::int64_t z = 0; z < out_shape.z; ++z) {
    std::int64_t z0, z1;
    double wz;
    axis_setup(z, in_shape.z, scale_z, z0, z1, wz);
    for (std::int64_t y = 0; y < out_shape.y; ++y) {
      std::int64_t y0, y1;
      double wy;
      axis_setup(y, in_shape.y, true, y0, y1, wy);
      for (std::int64_t x = 0; x < out_shape.x; ++x) {
        std::int64_t x0, x1;
        double wx;
        axis_setup(x, in_shape.x, true, x0, x1, wx);
        const auto g = [&](std::int64_t iz, std::int64_t iy, std::int64_t ix) {
          return static_cast<double>(image.at(iz, iy, ix));
        };
        const double v00 = (1.0 - wx) * g(z0, y0, x0) + wx * g(z0, y0, x1);
        const double v01 = (1.0 - wx) * g(z0, y1, x0) + wx * g(z0, y1, x1);
        const double v10 = (1.0 - wx) * g(z1, y0, x0) + wx * g(z1, y0, x1);
        const double v11 = (1.0 - wx) * g(z1, y1, x0) + wx * g(z1, y1, x1);
        const double v0 = (1.0 - wy) * v00 + wy * v01;
        const double v1 = (1.0 - wy) * v10 + wy * v11;
        const double v = (1.0 - wz) * v0 + wz * v1;
        out.at(z, y, x) = quantize_intensity(v / 255.0);
      }
    }
  }
  return out;
}

// Centers `scaled` on the original canvas: crops when larger, pads when
// smaller. Image padding mirrors the border; label padding is background.
template <typename T>
Volume<T> recenter(const Volume<T>& scaled, Vec3 target, bool mirror_fill) {
  const Vec3& s = scaled.shape();
  Volume<T> out(target, scaled.resolution());
  Vec3 src_off{};
  Vec3 dst_off{};
  for (int a = 0; a < 3; ++a) {
    if (s[a] >= target[a]) {
      src_off[a] = (s[a] - target[a]) / 2;
    } else {
      dst_off[a] = (target[a] - s[a]) / 2;
    }
  }
  for (std::int64_t z = 0; z < target.z; ++z) {
    for (std::int64_t y = 0; y < target.y; ++y) {
      for (std::int64_t x = 0; x < target.x; ++x) {
        const std::int64_t sz = z - dst_off.z + src_off.z;
        const std::int64_t sy = y - dst_off.y + src_off.y;
        const std::int64_t sx = x - dst_off.x + src_off.x;
        if (sz >= 0 && sz < s.z && sy >= 0 && sy < s.y && sx >= 0 &&
            sx < s.x) {
          out.at(z, y, x) = scaled.at(sz, sy, sx);
        } else if (mirror_fill) {
          out.at(z, y, x) = scaled.at(reflect_far(sz, s.z),
                                      reflect_far(sy, s.y),
                                      reflect_far(sx, s.x));
        }
      }
    }
  }
  return out;
}

}  // namespace detail

// Rescales the xy plane (and z in 3D mode) by one shared factor drawn from
// scale_range, then recenters on the original canvas. One draw. Images
// interpolate linearly; labels use nearest-neighbor so the output label set
// stays a subset of the input label set.
inline SamplePair apply_rescale(CounterRng& rng, const ImageVolume& image,
                                const LabelVolume& label,
                                const RescaleParams& params) {
  if (image.shape() != label.shape()) {
    throw std::invalid_argument("rescale requires image shape " +
                                image.shape().str() + " to match label shape " +
                                label.shape().str());
  }
  detail::check_range(params.scale_range, "scale");
  if (!(params.scale_range[0] > 0.0)) {
    throw std::invalid_argument("scale range must be positive");
  }
  const double factor =
      rng.next_range(params.scale_range[0], params.scale_range[1]);
  const Vec3& shape = image.shape();
  if (factor == 1.0) return {image, label};

  Vec3 scaled_shape = shape;
  scaled_shape.y = std::max<std::int64_t>(
      1, std::llround(static_cast<double>(shape.y) * factor));
  scaled_shape.x = std::max<std::int64_t>(
      1, std::llround(static_cast<double>(shape.x) * factor));
  if (params.three_d) {
    scaled_shape.z = std::max<std::int64_t>(
        1, std::llround(static_cast<double>(shape.z) * factor));
  }

  ImageVolume scaled_image =
      detail::rescale_linear(image, scaled_shape, factor, params.three_d);
  LabelVolume scaled_label =
      detail::rescale_nearest(label, scaled_shape, factor, params.three_d);
  return {detail::recenter(scaled_image, shape, true),
          detail::recenter(scaled_label, shape, false)};
}

// Flips image and label together along a random subset of axes. Draw order:
// one coin per axis in (z, y, x) order.
inline SamplePair apply_flip(CounterRng& rng, const ImageVolume& image,
                             const LabelVolume& label) {
  if (image.shape() != label.shape()) {
    throw std::invalid_argument("flip requires image shape " +
                                image.shape().str() + " to match label shape " +
                                label.shape().str());
  }
  const bool fz = rng.bernoulli(0.5);
  const bool fy = rng.bernoulli(0.5);
  const bool fx = rng.bernoulli(0.5);
  if (!fz && !fy && !fx) return {image, label};
  return {flip(image, fz, fy, fx), flip(label, fz, fy, fx)};
}

// Swaps the y and x axes of image and label together. Requires a square xy
// plane; otherwise the op is an identity and the report notes the skip. No
// draws are consumed.
inline SamplePair apply_transpose(const ImageVolume& image,
                                  const LabelVolume& label,
                                  AugmentReport* report = nullptr) {
  if (image.shape() != label.shape()) {
    throw std::invalid_argument("transpose requires image shape " +
                                image.shape().str() + " to match label shape " +
                                label.shape().str());
  }
  if (image.shape().y != image.shape().x) {
    if (report != nullptr) report->transpose_skipped_nonsquare = true;
    return {image, label};
  }
  return {transpose_xy(image), transpose_xy(label)};
}

// --- Composition ---

enum class AugmentKind {
  kGrayscale,
  kMissingPart,
  kMisalignment,
  kRescale,
  kFlip,
  kTranspose,
};

// Alternative order matches AugmentKind so params.index() identifies the op.
using AugmentParams =
    std::variant<GrayscaleParams, MissingPartParams, MisalignmentParams,
                 RescaleParams, FlipParams, TransposeParams>;

struct AugmentSpec {
  double probability = 0.5;
  AugmentParams params;

  AugmentKind kind() const { return static_cast<AugmentKind>(params.index()); }
};

inline const char* augment_kind_name(AugmentKind kind) {
  switch (kind) {
    case AugmentKind::kGrayscale: return "grayscale";
    case AugmentKind::kMissingPart: return "missing_part";
    case AugmentKind::kMisalignment: return "misalignment";
    case AugmentKind::kRescale: return "rescale";
    case AugmentKind::kFlip: return "flip";
    default: return "transpose";
  }
}

// Applies each AugmentSpec in list order, gated by one probability coin per
// entry. The gate coin is always drawn; an op that fires consumes further
// draws in its own documented order.
inline SamplePair apply_augmentations(CounterRng& rng, SamplePair sample,
                                      const std::vector<AugmentSpec>& specs,
                                      AugmentReport* report = nullptr) {
  for (const AugmentSpec& spec : specs) {
    detail::check_probability(spec.probability, "augmentation probability");
    if (!rng.bernoulli(spec.probability)) continue;
    switch (spec.kind()) {
      case AugmentKind::kGrayscale:
        sample.image = apply_grayscale(rng, sample.image,
                                       std::get<GrayscaleParams>(spec.params));
        break;
      case AugmentKind::kMissingPart:
        sample.image =
            apply_missing_part(rng, sample.image,
                               std::get<MissingPartParams>(spec.params), report);
        break;
      case AugmentKind::kMisalignment:
        sample = apply_misalignment(rng, sample.image, sample.label,
                                    std::get<MisalignmentParams>(spec.params));
        break;
      case AugmentKind::kRescale:
        sample = apply_rescale(rng, sample.image, sample.label,
                               std::get<RescaleParams>(spec.params));
        break;
      case AugmentKind::kFlip:
        sample = apply_flip(rng, sample.image, sample.label);
        break;
      case AugmentKind::kTranspose:
        sample = apply_transpose(sample.image, sample.label, report);
        break;
    }
  }
  return sample;
}

}  // namespace volseg

#endif  // VOLSEG_AUGMENT_HPP_
